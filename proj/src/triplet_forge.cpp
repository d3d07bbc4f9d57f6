#include "mdvt/triplet_forge.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>

#include "mdvt/error.hpp"
#include "mdvt/kernels.hpp"

namespace mdvt {

std::string to_string(Constructor c) {
  switch (c) {
    case Constructor::kTopN: return "topn";
    case Constructor::kThreshold: return "threshold";
    case Constructor::kThresholdTopN: return "threshold_topn";
    case Constructor::kInterval: return "interval";
    case Constructor::kFreqF1: return "freq_f1";
    case Constructor::kFreqF2: return "freq_f2";
  }
  return "topn";
}

Constructor constructor_from_string(const std::string& s) {
  for (auto c : {Constructor::kTopN, Constructor::kThreshold, Constructor::kThresholdTopN, Constructor::kInterval,
                 Constructor::kFreqF1, Constructor::kFreqF2})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown constructor '" + s + "'");
}

std::vector<double> cosine_row(std::span<const double> user, const Matrix& items) {
  const double un = std::sqrt(dot(user, user));
  if (!(un > 0.0)) throw TrainingError("cosine_row: zero-norm user representation (training collapsed)");
  std::vector<double> row(items.rows);
  for (std::size_t i = 0; i < items.rows; ++i) {
    const auto it = items.row(i);
    const double denom = un * std::sqrt(dot(it, it));
    row[i] = denom > 0.0 ? dot(user, it) / denom : 0.0;
  }
  return row;
}

namespace {

bool excluded(std::span<const std::uint32_t> exclusion, std::uint32_t item) {
  return std::binary_search(exclusion.begin(), exclusion.end(), item);
}

std::vector<std::uint32_t> candidates_outside(std::size_t num_items, std::span<const std::uint32_t> exclusion) {
  std::vector<std::uint32_t> out;
  out.reserve(num_items);
  for (std::uint32_t i = 0; i < num_items; ++i)
    if (!excluded(exclusion, i)) out.push_back(i);
  return out;
}

// The k highest by key (ties: lower index first), in that order.
template <typename Key>
std::vector<std::uint32_t> take_highest(std::vector<std::uint32_t> pool, std::size_t k, Key key) {
  k = std::min(k, pool.size());
  auto cmp = [&](std::uint32_t a, std::uint32_t b) {
    const double ka = key(a), kb = key(b);
    return ka != kb ? ka > kb : a < b;
  };
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end(), cmp);
  pool.resize(k);
  return pool;
}

// The k lowest-similarity items among those not already chosen as positives.
std::vector<std::uint32_t> lowest_outside(std::span<const double> row, std::size_t k,
                                          const std::vector<std::uint32_t>& positives) {
  std::vector<std::uint32_t> sorted_pos = positives;
  std::sort(sorted_pos.begin(), sorted_pos.end());
  auto pool = candidates_outside(row.size(), sorted_pos);
  if (pool.size() < k) throw DataError("virtual triplets: not enough items for " + std::to_string(k) + " negatives");
  return take_highest(std::move(pool), k, [&](std::uint32_t i) { return -row[i]; });
}

}  // namespace

Selection select_topn(std::span<const double> row, std::size_t n, std::span<const std::uint32_t> exclusion) {
  if (n < 1) throw ConfigError("n must be >= 1");
  auto pool = candidates_outside(row.size(), exclusion);
  if (pool.size() < 2 * n)
    throw DataError("select_topn: " + std::to_string(pool.size()) + " candidate items, need " + std::to_string(2 * n));
  Selection sel;
  sel.positives = take_highest(std::move(pool), n, [&](std::uint32_t i) { return row[i]; });
  sel.negatives = lowest_outside(row, n, sel.positives);
  return sel;
}

Selection select_threshold(std::span<const double> row, double threshold, std::optional<std::size_t> cap,
                           std::optional<std::size_t> floor, std::span<const std::uint32_t> exclusion) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (cap && floor && *floor > *cap) throw ConfigError("interval requires n1 <= n2");
  auto pool = candidates_outside(row.size(), exclusion);
  if (floor && pool.size() < *floor)
    throw DataError("select_threshold: " + std::to_string(pool.size()) + " candidates below floor " +
                    std::to_string(*floor));
  auto ranked = take_highest(std::move(pool), row.size(), [&](std::uint32_t i) { return row[i]; });

  std::size_t keep = 0;
  while (keep < ranked.size() && row[ranked[keep]] >= threshold) ++keep;
  if (cap) keep = std::min(keep, *cap);
  if (floor) keep = std::max(keep, *floor);
  ranked.resize(keep);

  Selection sel;
  sel.positives = std::move(ranked);
  sel.negatives = lowest_outside(row, sel.positives.size(), sel.positives);
  return sel;
}

Selection select_frequency(std::span<const double> row, std::size_t n, std::span<const std::uint32_t> item_counts,
                           FrequencyMode mode, std::span<const std::uint32_t> exclusion) {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (item_counts.size() != row.size()) throw DataError("select_frequency: popularity table size mismatch");
  auto pool = candidates_outside(row.size(), exclusion);
  if (pool.size() < 2 * n)
    throw DataError("select_frequency: " + std::to_string(pool.size()) + " candidate items, need " +
                    std::to_string(2 * n));
  auto count = [&](std::uint32_t i) { return static_cast<double>(item_counts[i]); };

  Selection sel;
  if (mode == FrequencyMode::kF1) {
    sel.positives = take_highest(std::move(pool), n, count);
    std::vector<std::uint32_t> sorted_pos = sel.positives;
    std::sort(sorted_pos.begin(), sorted_pos.end());
    sel.negatives = take_highest(candidates_outside(row.size(), sorted_pos), n, [&](std::uint32_t i) { return -count(i); });
    return sel;
  }

  // F2: restrict to the 2n most (least) similar, then keep the n most (least)
  // popular of those; equal counts keep similarity order.
  auto top = take_highest(std::move(pool), 2 * n, [&](std::uint32_t i) { return row[i]; });
  std::stable_sort(top.begin(), top.end(), [&](std::uint32_t a, std::uint32_t b) { return count(a) > count(b); });
  top.resize(n);
  sel.positives = std::move(top);

  std::vector<std::uint32_t> sorted_pos = sel.positives;
  std::sort(sorted_pos.begin(), sorted_pos.end());
  auto rest = candidates_outside(row.size(), sorted_pos);
  auto bottom = take_highest(std::move(rest), std::min(2 * n, row.size() - n), [&](std::uint32_t i) { return -row[i]; });
  std::stable_sort(bottom.begin(), bottom.end(), [&](std::uint32_t a, std::uint32_t b) { return count(a) < count(b); });
  bottom.resize(n);
  sel.negatives = std::move(bottom);
  return sel;
}

Selection select_for_user(std::span<const double> row, const ForgeOptions& options,
                          std::span<const std::uint32_t> item_counts, std::span<const std::uint32_t> exclusion) {
  switch (options.tag) {
    case Constructor::kTopN: return select_topn(row, options.n, exclusion);
    case Constructor::kThreshold: return select_threshold(row, options.threshold, std::nullopt, std::nullopt, exclusion);
    case Constructor::kThresholdTopN: return select_threshold(row, options.threshold, options.n, std::nullopt, exclusion);
    case Constructor::kInterval: return select_threshold(row, options.threshold, options.n2, options.n1, exclusion);
    case Constructor::kFreqF1: return select_frequency(row, options.n, item_counts, FrequencyMode::kF1, exclusion);
    case Constructor::kFreqF2: return select_frequency(row, options.n, item_counts, FrequencyMode::kF2, exclusion);
  }
  return {};
}

VirtualTripletSet refresh(const Matrix& fused_users, const Matrix& fused_items, const InteractionGraph& graph,
                          const PopularityTable& popularity, const ForgeOptions& options, std::size_t epoch) {
  const std::size_t num_users = fused_users.rows;
  VirtualTripletSet set;
  set.groups.resize(num_users);
  set.present.assign(num_users, false);
  set.built_at_epoch = epoch;
  set.tag = options.tag;

  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < num_users; ++u)
    if (graph.degree(u) > 0) users.push_back(u);

  const auto item_norms = kernels::row_norms(fused_items);
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
  Matrix queries;
  Matrix sims;
  std::vector<std::exception_ptr> errors(chunk);

  for (std::size_t start = 0; start < users.size(); start += chunk) {
    const std::size_t count = std::min(chunk, users.size() - start);
    queries = Matrix(count, fused_users.cols);
    for (std::size_t k = 0; k < count; ++k) {
      const auto src = fused_users.row(users[start + k]);
      if (!(dot(src, src) > 0.0))
        throw TrainingError("refresh: zero-norm representation for user " + std::to_string(users[start + k]) +
                            " (training collapsed)");
      std::copy(src.begin(), src.end(), queries.row(k).begin());
    }
    kernels::parallel::cosine_rows(queries, fused_items, item_norms, sims);

    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
      const auto u = users[start + static_cast<std::size_t>(k)];
      try {
        std::vector<std::uint32_t> seen;
        if (!options.include_seen) seen = graph.user_items(u);
        set.groups[u] = select_for_user(sims.row(static_cast<std::size_t>(k)), options, popularity.item_train_count, seen);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
    for (std::size_t k = 0; k < count; ++k) {
      if (errors[k]) std::rethrow_exception(errors[k]);
      set.present[users[start + k]] = true;
    }
  }
  return set;
}

void write_virtual_triplets(std::ostream& out, const VirtualTripletSet& set) {
  auto join = [&](const std::vector<std::uint32_t>& v) {
    for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << v[k];
  };
  for (std::uint32_t u = 0; u < set.groups.size(); ++u) {
    if (!set.present[u]) continue;
    out << u << "\tpos:";
    join(set.groups[u].positives);
    out << "\tneg:";
    join(set.groups[u].negatives);
    out << '\n';
  }
}

}  // namespace mdvt

#include "mdvt/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mdvt/kernels.hpp"

namespace mdvt {

namespace {

std::vector<std::uint32_t> unmasked(std::size_t n, std::span<const std::uint32_t> masked) {
  std::vector<std::uint32_t> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    if (!std::binary_search(masked.begin(), masked.end(), i)) out.push_back(i);
  return out;
}

}  // namespace

std::vector<std::uint32_t> rank_items(std::span<const double> scores, std::span<const std::uint32_t> masked) {
  return top_k_items(scores, masked, scores.size());
}

std::vector<std::uint32_t> top_k_items(std::span<const double> scores, std::span<const std::uint32_t> masked,
                                       std::size_t k) {
  auto items = unmasked(scores.size(), masked);
  k = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(),
                    [&](std::uint32_t a, std::uint32_t b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
  items.resize(k);
  return items;
}

double recall_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
  std::size_t hits = 0;
  for (std::size_t p = 0; p < std::min(k, ranked.size()); ++p)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("ndcg_at_k: empty relevant set");
  double dcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, ranked.size()); ++p)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  double idcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, relevant.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

std::string SparsityBucket::label() const {
  return hi ? std::to_string(lo) + "-" + std::to_string(*hi) : std::to_string(lo) + "+";
}

const AtK& MetricsReport::metric(std::size_t k) const {
  for (const auto& a : at)
    if (a.k == k) return a;
  throw std::out_of_range("metric @" + std::to_string(k) + " not evaluated");
}

EvalTarget make_eval_target(std::size_t num_users, const std::vector<Interaction>& held_out,
                            std::span<const std::vector<Interaction>* const> mask_sets,
                            std::span<const std::uint32_t> user_train_count) {
  EvalTarget target;
  target.relevant.resize(num_users);
  target.masked.resize(num_users);
  for (const auto& r : held_out) target.relevant[r.user].push_back(r.item);
  for (const auto* set : mask_sets)
    for (const auto& r : *set) target.masked[r.user].push_back(r.item);
  for (std::uint32_t u = 0; u < num_users; ++u) {
    auto& rel = target.relevant[u];
    auto& mask = target.masked[u];
    std::sort(rel.begin(), rel.end());
    rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
    std::sort(mask.begin(), mask.end());
    mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
    if (!rel.empty() && user_train_count[u] > 0) target.users.push_back(u);
  }
  return target;
}

std::vector<UserMetrics> evaluate_users(const ScoreTables& tables, const EvalTarget& target,
                                        std::span<const std::size_t> ks) {
  const std::size_t max_k = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
  std::vector<UserMetrics> out(target.users.size());
  constexpr std::size_t kChunk = 256;
  Matrix queries, scores;
  for (std::size_t start = 0; start < target.users.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, target.users.size() - start);
    queries = Matrix(count, tables.users.cols);
    for (std::size_t r = 0; r < count; ++r) {
      const auto src = tables.users.row(target.users[start + r]);
      std::copy(src.begin(), src.end(), queries.row(r).begin());
    }
    kernels::parallel::dot_rows(queries, tables.items, scores);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
      const auto idx = start + static_cast<std::size_t>(r);
      const auto u = target.users[idx];
      const auto ranked = top_k_items(scores.row(static_cast<std::size_t>(r)), target.masked[u], max_k);
      UserMetrics um{u, {}};
      for (auto k : ks) um.at.push_back({k, recall_at_k(ranked, target.relevant[u], k), ndcg_at_k(ranked, target.relevant[u], k)});
      out[idx] = std::move(um);
    }
  }
  return out;
}

MetricsReport sparsity_breakdown(const std::vector<UserMetrics>& per_user, std::span<const std::uint32_t> user_train_count,
                                 std::span<const std::size_t> ks) {
  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  for (std::size_t b = 0; b < kDefaultBucketEdges.size(); ++b) {
    SparsityBucket bucket;
    bucket.lo = kDefaultBucketEdges[b];
    if (b + 1 < kDefaultBucketEdges.size()) bucket.hi = kDefaultBucketEdges[b + 1] - 1;
    report.buckets.push_back(bucket);
  }
  std::vector<std::vector<AtK>> bucket_sums(report.buckets.size());
  std::vector<AtK> total;
  for (auto k : ks) total.push_back({k, 0.0, 0.0});
  for (auto& s : bucket_sums) s = total;

  for (const auto& um : per_user) {
    const auto count = user_train_count[um.user];
    std::size_t b = 0;
    while (b + 1 < kDefaultBucketEdges.size() && count >= kDefaultBucketEdges[b + 1]) ++b;
    ++report.buckets[b].count;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      bucket_sums[b][j].recall += um.at[j].recall;
      bucket_sums[b][j].ndcg += um.at[j].ndcg;
      total[j].recall += um.at[j].recall;
      total[j].ndcg += um.at[j].ndcg;
    }
  }
  for (std::size_t b = 0; b < report.buckets.size(); ++b) {
    auto& bucket = report.buckets[b];
    if (bucket.count == 0) continue;
    for (auto a : bucket_sums[b]) {
      a.recall /= static_cast<double>(bucket.count);
      a.ndcg /= static_cast<double>(bucket.count);
      bucket.at.push_back(a);
    }
  }
  report.num_users_evaluated = per_user.size();
  for (auto a : total) {
    if (!per_user.empty()) {
      a.recall /= static_cast<double>(per_user.size());
      a.ndcg /= static_cast<double>(per_user.size());
    }
    report.at.push_back(a);
  }
  return report;
}

MetricsReport evaluate(const Representations& reps, ScoreMode mode, const EvalTarget& target,
                       std::span<const std::uint32_t> user_train_count, std::span<const std::size_t> ks) {
  const auto per_user = evaluate_users(score_tables(reps, mode), target, ks);
  return sparsity_breakdown(per_user, user_train_count, ks);
}

}  // namespace mdvt

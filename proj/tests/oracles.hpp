#pragma once

// Brute-force reference implementations used only by tests. They share no
// code path with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "mdvt/dataset.hpp"
#include "mdvt/matrix.hpp"
#include "mdvt/triplet_forge.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

/// Dense normalized adjacency over users then items. inv_degree_norm selects
/// (1/d_v)(1/d_j); otherwise 1/sqrt(d_v d_j).
inline Dense adjacency(std::size_t nu, std::size_t ni, const std::vector<mdvt::Interaction>& edges, bool inv_degree_norm) {
  const std::size_t n = nu + ni;
  Dense a(n, std::vector<double>(n, 0.0));
  std::vector<double> deg(n, 0.0);
  for (const auto& e : edges) {
    a[e.user][nu + e.item] = 1.0;
    a[nu + e.item][e.user] = 1.0;
  }
  for (std::size_t v = 0; v < n; ++v) deg[v] = std::accumulate(a[v].begin(), a[v].end(), 0.0);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < n; ++j)
      if (a[v][j] != 0.0) a[v][j] = inv_degree_norm ? 1.0 / (deg[v] * deg[j]) : 1.0 / std::sqrt(deg[v] * deg[j]);
  return a;
}

inline Dense matmul(const Dense& a, const Dense& x) {
  Dense out(a.size(), std::vector<double>(x.empty() ? 0 : x[0].size(), 0.0));
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[r][k] != 0.0)
        for (std::size_t c = 0; c < x[k].size(); ++c) out[r][c] += a[r][k] * x[k][c];
  return out;
}

inline Dense to_dense(const mdvt::Matrix& m) {
  Dense d(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) d[r][c] = m.at(r, c);
  return d;
}

/// sum_{l=0..L} P^l X  (or the mean when mean_readout).
inline Dense final_repr(const Dense& p, const Dense& x, std::size_t layers, bool mean_readout) {
  Dense acc = x, cur = x;
  for (std::size_t l = 1; l <= layers; ++l) {
    cur = matmul(p, cur);
    for (std::size_t r = 0; r < acc.size(); ++r)
      for (std::size_t c = 0; c < acc[r].size(); ++c) acc[r][c] += cur[r][c];
  }
  if (mean_readout)
    for (auto& row : acc)
      for (auto& v : row) v /= static_cast<double>(layers + 1);
  return acc;
}

inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double neg_log_sigmoid(double g) { return std::log1p(std::exp(-g)); }

/// Ranking by a key with the library's tie rule, via a full sort of pairs.
inline std::vector<std::uint32_t> full_sort_desc(const std::vector<double>& key, const std::vector<std::uint32_t>& pool) {
  std::vector<std::pair<double, std::uint32_t>> v;
  for (auto i : pool) v.push_back({-key[i], i});
  std::sort(v.begin(), v.end());
  std::vector<std::uint32_t> out;
  for (auto& [k, i] : v) out.push_back(i);
  return out;
}

inline std::vector<std::uint32_t> all_but(std::size_t n, const std::set<std::uint32_t>& drop) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < n; ++i)
    if (!drop.count(i)) out.push_back(i);
  return out;
}

inline mdvt::Selection topn(const std::vector<double>& row, std::size_t n, const std::set<std::uint32_t>& excl) {
  mdvt::Selection s;
  auto ranked = full_sort_desc(row, all_but(row.size(), excl));
  s.positives.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<double> neg(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) neg[i] = -row[i];
  auto low = full_sort_desc(neg, all_but(row.size(), {s.positives.begin(), s.positives.end()}));
  s.negatives.assign(low.begin(), low.begin() + static_cast<std::ptrdiff_t>(n));
  return s;
}

inline mdvt::Selection threshold(const std::vector<double>& row, double t, std::optional<std::size_t> cap,
                                 std::optional<std::size_t> floor, const std::set<std::uint32_t>& excl) {
  auto ranked = full_sort_desc(row, all_but(row.size(), excl));
  std::vector<std::uint32_t> pos;
  for (auto i : ranked)
    if (row[i] >= t) pos.push_back(i);
  if (cap && pos.size() > *cap) pos.resize(*cap);
  if (floor && pos.size() < *floor) pos.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(*floor));
  std::vector<double> neg(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) neg[i] = -row[i];
  auto low = full_sort_desc(neg, all_but(row.size(), {pos.begin(), pos.end()}));
  mdvt::Selection s;
  s.positives = pos;
  s.negatives.assign(low.begin(), low.begin() + static_cast<std::ptrdiff_t>(pos.size()));
  return s;
}

inline mdvt::Selection frequency(const std::vector<double>& row, std::size_t n, const std::vector<std::uint32_t>& counts,
                                 bool f2, const std::set<std::uint32_t>& excl) {
  std::vector<double> pop(counts.begin(), counts.end()), unpop(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) unpop[i] = -pop[i];
  mdvt::Selection s;
  if (!f2) {
    auto ranked = full_sort_desc(pop, all_but(row.size(), excl));
    s.positives.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
    auto low = full_sort_desc(unpop, all_but(row.size(), {s.positives.begin(), s.positives.end()}));
    s.negatives.assign(low.begin(), low.begin() + static_cast<std::ptrdiff_t>(n));
    return s;
  }
  // Two-stage: similarity shortlist of 2n, then popularity with similarity
  // rank as the secondary key.
  auto by_sim = full_sort_desc(row, all_but(row.size(), excl));
  std::vector<std::pair<std::pair<double, std::size_t>, std::uint32_t>> stage;
  for (std::size_t r = 0; r < 2 * n; ++r) stage.push_back({{-pop[by_sim[r]], r}, by_sim[r]});
  std::sort(stage.begin(), stage.end());
  for (std::size_t r = 0; r < n; ++r) s.positives.push_back(stage[r].second);
  std::vector<double> neg(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) neg[i] = -row[i];
  auto low = full_sort_desc(neg, all_but(row.size(), {s.positives.begin(), s.positives.end()}));
  const std::size_t pool = std::min(2 * n, row.size() - n);
  stage.clear();
  for (std::size_t r = 0; r < pool; ++r) stage.push_back({{pop[low[r]], r}, low[r]});
  std::sort(stage.begin(), stage.end());
  for (std::size_t r = 0; r < n; ++r) s.negatives.push_back(stage[r].second);
  return s;
}

inline double recall(const std::vector<std::uint32_t>& ranked, const std::set<std::uint32_t>& rel, std::size_t k) {
  double hits = 0;
  for (std::size_t p = 0; p < ranked.size() && p < k; ++p) hits += rel.count(ranked[p]) ? 1.0 : 0.0;
  return hits / static_cast<double>(rel.size());
}

inline double ndcg(const std::vector<std::uint32_t>& ranked, const std::set<std::uint32_t>& rel, std::size_t k) {
  double dcg = 0, idcg = 0;
  for (std::size_t p = 1; p <= ranked.size() && p <= k; ++p)
    if (rel.count(ranked[p - 1])) dcg += std::log(2.0) / std::log(static_cast<double>(p) + 1.0);
  for (std::size_t p = 1; p <= rel.size() && p <= k; ++p) idcg += std::log(2.0) / std::log(static_cast<double>(p) + 1.0);
  return dcg / idcg;
}


/// Everything the dense loss oracle needs; plain data only.
struct LossProblem {
  std::size_t nu = 0, ni = 0, layers = 1;
  std::vector<mdvt::Interaction> edges;
  bool inv_degree_norm = true;
  bool mean_readout = false;
  bool fused_score = false;
  std::vector<std::size_t> mask;
  std::vector<mdvt::Triplet> batch;
  // Virtual groups per user; empty optional means warm-up.
  std::optional<std::vector<mdvt::Selection>> groups;
  double lambda = 0.2;
  bool unscaled = false;
  bool wo_aggr = false;
  bool per_user = false;
};

/// Joint loss evaluated from dense matrices, directly from the definitions.
inline double loss(const LossProblem& pb, const std::vector<Dense>& tables) {
  const Dense p = adjacency(pb.nu, pb.ni, pb.edges, pb.inv_degree_norm);
  std::vector<Dense> finals;
  for (const auto& t : tables) finals.push_back(final_repr(p, t, pb.layers, pb.mean_readout));
  const std::size_t d = tables[0][0].size();
  Dense fused(pb.nu + pb.ni, std::vector<double>(d, 0.0));
  for (auto m : pb.mask)
    for (std::size_t r = 0; r < fused.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) fused[r][c] += finals[m][r][c] / static_cast<double>(pb.mask.size());

  auto score = [&](std::size_t u, std::size_t i) {
    if (pb.fused_score) return dotv(fused[u], fused[pb.nu + i]);
    double s = 0;
    for (const auto& f : finals) s += dotv(f[u], f[pb.nu + i]);
    return s;
  };
  double bpr = 0;
  for (const auto& t : pb.batch) bpr += neg_log_sigmoid(score(t.user, t.positive) - score(t.user, t.negative));
  bpr /= static_cast<double>(pb.batch.size());
  if (!pb.groups) return bpr;

  std::vector<std::uint32_t> users;
  std::set<std::uint32_t> seen;
  for (const auto& t : pb.batch)
    if (!pb.per_user || seen.insert(t.user).second) users.push_back(t.user);
  double vbpr = 0;
  std::size_t terms = 0;
  for (auto u : users) {
    const auto& g = (*pb.groups)[u];
    if (g.positives.empty()) continue;
    ++terms;
    if (pb.wo_aggr) {
      for (std::size_t k = 0; k < g.positives.size(); ++k)
        vbpr += neg_log_sigmoid(dotv(fused[u], fused[pb.nu + g.positives[k]]) -
                                dotv(fused[u], fused[pb.nu + g.negatives[k]]));
      continue;
    }
    std::vector<double> pos(d, 0.0), neg(d, 0.0);
    const double n = static_cast<double>(g.positives.size());
    for (auto i : g.positives)
      for (std::size_t c = 0; c < d; ++c) pos[c] += fused[pb.nu + i][c] / n;
    for (auto i : g.negatives)
      for (std::size_t c = 0; c < d; ++c) neg[c] += fused[pb.nu + i][c] / n;
    vbpr += neg_log_sigmoid(dotv(fused[u], pos) - dotv(fused[u], neg));
  }
  if (terms > 0) vbpr /= static_cast<double>(terms);
  return pb.unscaled ? bpr + pb.lambda * vbpr : (1 - pb.lambda) * bpr + pb.lambda * vbpr;
}

}  // namespace oracle

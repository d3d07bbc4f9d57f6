#pragma once

// Random tiny training problems shared by the gradient tests and the
// acceptance gradient check.

#include <set>

#include "mdvt/backbone.hpp"
#include "mdvt/objective.hpp"
#include "mdvt/rng.hpp"
#include "oracles.hpp"

namespace instance {

struct Tiny {
  oracle::LossProblem problem;
  mdvt::EmbeddingState state;
  mdvt::InteractionGraph graph;
  mdvt::VirtualTripletSet virtual_set;
  mdvt::BackboneOptions backbone;
  mdvt::ObjectiveOptions objective;
};

struct TinyShape {
  std::size_t users = 4, items = 6, dim = 3, layers = 1, modalities = 2, n = 2;
  bool joint = true;
};

inline std::vector<oracle::Dense> dense_tables(const mdvt::EmbeddingState& s) {
  std::vector<oracle::Dense> out;
  for (const auto& t : s.tables) out.push_back(oracle::to_dense(t.nodes));
  return out;
}

/// Random graph (every user has 1..items-2 train items), random tables,
/// a random batch of valid triplets and random virtual groups.
inline Tiny make_tiny(const TinyShape& shape, std::uint64_t seed) {
  mdvt::Rng rng(seed);
  Tiny t;
  auto& pb = t.problem;
  pb.nu = shape.users;
  pb.ni = shape.items;
  pb.layers = shape.layers;
  for (std::uint32_t u = 0; u < shape.users; ++u) {
    std::set<std::uint32_t> items{static_cast<std::uint32_t>(rng.below(shape.items))};
    const auto extra = rng.below(shape.items - 2);
    for (std::uint64_t k = 0; k < extra; ++k) items.insert(static_cast<std::uint32_t>(rng.below(shape.items)));
    while (items.size() > shape.items - 2) items.erase(std::prev(items.end()));
    for (auto i : items) pb.edges.push_back({u, i});
  }
  t.graph = mdvt::InteractionGraph(shape.users, shape.items, pb.edges);

  t.state.num_users = shape.users;
  t.state.num_items = shape.items;
  t.state.dim = shape.dim;
  const char* names[] = {"id", "visual", "textual", "audio"};
  for (std::size_t m = 0; m < shape.modalities; ++m) {
    mdvt::ModalityTable table{names[m], mdvt::Matrix(shape.users + shape.items, shape.dim)};
    for (auto& x : table.nodes.data) x = rng.normal();
    t.state.tables.push_back(std::move(table));
  }
  for (std::size_t m = 0; m < shape.modalities; ++m) pb.mask.push_back(m);

  const std::size_t batch = 3 + rng.below(4);
  for (std::size_t k = 0; k < batch; ++k) {
    const auto u = static_cast<std::uint32_t>(rng.below(shape.users));
    const auto mine = t.graph.user_items(u);
    const auto pos = mine[rng.below(mine.size())];
    std::uint32_t neg;
    do neg = static_cast<std::uint32_t>(rng.below(shape.items));
    while (t.graph.has_edge(u, neg));
    pb.batch.push_back({u, pos, neg});
  }

  if (shape.joint) {
    std::vector<mdvt::Selection> groups(shape.users);
    for (auto& g : groups) {
      std::vector<std::uint32_t> perm(shape.items);
      for (std::uint32_t i = 0; i < shape.items; ++i) perm[i] = i;
      mdvt::shuffle(perm, rng);
      g.positives.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(shape.n));
      g.negatives.assign(perm.begin() + static_cast<std::ptrdiff_t>(shape.n),
                         perm.begin() + static_cast<std::ptrdiff_t>(2 * shape.n));
    }
    t.virtual_set.groups = groups;
    t.virtual_set.present.assign(shape.users, true);
    pb.groups = groups;
  }
  t.backbone.layers = shape.layers;
  return t;
}

/// Keeps the oracle problem and the library options in sync.
inline void apply(Tiny& t) {
  auto& pb = t.problem;
  pb.layers = t.backbone.layers;
  pb.inv_degree_norm = t.backbone.norm == mdvt::kernels::Norm::kInvDegree;
  pb.mean_readout = t.backbone.readout == mdvt::Readout::kMean;
  pb.fused_score = t.objective.score == mdvt::ScoreMode::kFused;
  pb.lambda = t.objective.lambda;
  pb.unscaled = t.objective.scaling == mdvt::LossScaling::kUnscaled;
  pb.wo_aggr = t.objective.without_aggregation;
  pb.per_user = t.objective.virtual_per_user;
}

struct GradCheck {
  double max_error = 0.0;
  double loss_gap = 0.0;  // |library loss - oracle loss|
  std::size_t coordinates = 0;
};

/// Central differences of the oracle loss against the library's analytic
/// gradient, on every coordinate. Error is |a - fd| / max(1, |fd|).
inline GradCheck check_gradients(Tiny& t, double h = 1e-4) {
  apply(t);
  mdvt::Backbone backbone(t.graph, t.backbone);
  const auto grads = mdvt::compute_gradients(t.problem.batch, t.problem.groups ? &t.virtual_set : nullptr, t.state,
                                             backbone, t.problem.mask, t.objective);
  GradCheck out;
  auto tables = dense_tables(t.state);
  out.loss_gap = std::abs(grads.loss.l_total - oracle::loss(t.problem, tables));
  for (std::size_t m = 0; m < tables.size(); ++m)
    for (std::size_t r = 0; r < tables[m].size(); ++r)
      for (std::size_t c = 0; c < tables[m][r].size(); ++c) {
        const double keep = tables[m][r][c];
        tables[m][r][c] = keep + h;
        const double up = oracle::loss(t.problem, tables);
        tables[m][r][c] = keep - h;
        const double down = oracle::loss(t.problem, tables);
        tables[m][r][c] = keep;
        const double fd = (up - down) / (2 * h);
        const double err = std::abs(grads.tables[m].at(r, c) - fd) / std::max(1.0, std::abs(fd));
        out.max_error = std::max(out.max_error, err);
        ++out.coordinates;
      }
  return out;
}

}  // namespace instance

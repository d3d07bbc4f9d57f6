#include "mdvt/backbone.hpp"

#include <cmath>

#include "mdvt/error.hpp"
#include "mdvt/rng.hpp"

namespace mdvt {

Matrix feature_projection(std::size_t feature_dim, std::size_t dim, std::uint64_t seed, std::size_t modality_index) {
  Matrix proj(feature_dim, dim);
  Rng rng(derive_seed(seed, Stream::kProjection, modality_index));
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (auto& x : proj.data) x = rng.normal() * scale;
  return proj;
}

EmbeddingState init_embeddings(const ModalityBundle& bundle, std::size_t num_users, std::size_t num_items,
                               std::size_t dim, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("embed_dim must be >= 1");
  EmbeddingState state;
  state.num_users = num_users;
  state.num_items = num_items;
  state.dim = dim;
  state.init_seed = seed;

  Rng rng(derive_seed(seed, Stream::kInit));
  const double bound = 0.5 / std::sqrt(static_cast<double>(dim));
  auto uniform = [&] { return (2.0 * rng.open_unit() - 1.0) * bound; };

  for (std::size_t m = 0; m < bundle.names.size(); ++m) {
    const auto& name = bundle.names[m];
    ModalityTable table{name, Matrix(num_users + num_items, dim)};
    for (std::size_t u = 0; u < num_users; ++u)
      for (auto& x : table.nodes.row(u)) x = uniform();

    if (name == "id") {
      for (std::size_t i = 0; i < num_items; ++i)
        for (auto& x : table.nodes.row(num_users + i)) x = uniform();
    } else {
      const auto* feats = bundle.find(name);
      if (feats == nullptr) throw DataError("modality '" + name + "' has no feature matrix");
      const Matrix& f = feats->values;
      if (f.cols < 1) throw DataError("modality '" + name + "' has zero feature columns");
      if (f.rows != num_items) throw DataError("modality '" + name + "' row count mismatch");
      if (f.cols == dim) {
        for (std::size_t i = 0; i < num_items; ++i)
          std::copy(f.row(i).begin(), f.row(i).end(), table.nodes.row(num_users + i).begin());
      } else {
        const Matrix proj = feature_projection(f.cols, dim, seed, m);
        for (std::size_t i = 0; i < num_items; ++i) {
          auto dst = table.nodes.row(num_users + i);
          const auto src = f.row(i);
          for (std::size_t k = 0; k < f.cols; ++k) axpy(src[k], proj.row(k), dst);
        }
      }
    }
    state.tables.push_back(std::move(table));
  }
  return state;
}

LayerCache propagate(const InteractionGraph& graph, std::span<const double> coef, const Matrix& table,
                     std::size_t layers) {
  LayerCache cache;
  cache.reserve(layers + 1);
  cache.push_back(table);
  for (std::size_t l = 1; l <= layers; ++l) {
    Matrix next;
    kernels::parallel::propagate(graph, coef, cache.back(), next);
    cache.push_back(std::move(next));
  }
  return cache;
}

Matrix readout(const LayerCache& cache, Readout mode) {
  Matrix out = cache.front();
  for (std::size_t l = 1; l < cache.size(); ++l)
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += cache[l].data[k];
  if (mode == Readout::kMean) {
    const double inv = 1.0 / static_cast<double>(cache.size());
    for (auto& x : out.data) x *= inv;
  }
  return out;
}

Matrix fuse(std::span<const Matrix> finals, std::span<const std::size_t> mask) {
  if (mask.empty()) throw ConfigError("fusion mask selects no modality");
  const Matrix& first = finals[mask.front()];
  if (mask.size() == 1) return first;
  Matrix out(first.rows, first.cols);
  for (auto m : mask)
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += finals[m].data[k];
  const double inv = 1.0 / static_cast<double>(mask.size());
  for (auto& x : out.data) x *= inv;
  return out;
}

Backbone::Backbone(const InteractionGraph& graph, BackboneOptions options)
    : graph_(&graph), options_(options), coef_(kernels::propagation_coefficients(graph, options.norm)) {}

Representations Backbone::forward(const EmbeddingState& state, std::span<const std::size_t> mask) const {
  if (mask.empty()) throw ConfigError("fusion mask selects no modality");
  Representations reps;
  reps.num_users = state.num_users;
  reps.num_items = state.num_items;
  reps.finals.reserve(state.tables.size());
  for (const auto& table : state.tables)
    reps.finals.push_back(readout(propagate(*graph_, coef_, table.nodes, options_.layers), options_.readout));

  const Matrix fused = fuse(reps.finals, mask);
  reps.fused_users = Matrix(state.num_users, state.dim);
  reps.fused_items = Matrix(state.num_items, state.dim);
  const auto split = fused.data.begin() + static_cast<std::ptrdiff_t>(state.num_users * state.dim);
  std::copy(fused.data.begin(), split, reps.fused_users.data.begin());
  std::copy(split, fused.data.end(), reps.fused_items.data.begin());
  return reps;
}

void Backbone::backward(std::vector<Matrix>& grads) const {
  for (auto& g : grads) {
    Matrix acc = g;
    Matrix current = std::move(g);
    Matrix next;
    for (std::size_t l = 1; l <= options_.layers; ++l) {
      kernels::parallel::propagate(*graph_, coef_, current, next);
      for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += next.data[k];
      std::swap(current, next);
    }
    if (options_.readout == Readout::kMean) {
      const double inv = 1.0 / static_cast<double>(options_.layers + 1);
      for (auto& x : acc.data) x *= inv;
    }
    g = std::move(acc);
  }
}

ScoreTables score_tables(const Representations& reps, ScoreMode mode) {
  if (mode == ScoreMode::kFused) return {reps.fused_users, reps.fused_items};
  const std::size_t dim = reps.fused_users.cols;
  const std::size_t width = dim * reps.finals.size();
  ScoreTables out{Matrix(reps.num_users, width), Matrix(reps.num_items, width)};
  for (std::size_t m = 0; m < reps.finals.size(); ++m) {
    for (std::size_t u = 0; u < reps.num_users; ++u)
      std::copy_n(reps.final_user(m, u).begin(), dim, out.users.row(u).begin() + m * dim);
    for (std::size_t i = 0; i < reps.num_items; ++i)
      std::copy_n(reps.final_item(m, i).begin(), dim, out.items.row(i).begin() + m * dim);
  }
  return out;
}

std::vector<double> predict_scores(std::size_t user, const Representations& reps, ScoreMode mode) {
  std::vector<double> scores(reps.num_items, 0.0);
  if (mode == ScoreMode::kFused) {
    for (std::size_t i = 0; i < reps.num_items; ++i) scores[i] = dot(reps.fused_users.row(user), reps.fused_items.row(i));
    return scores;
  }
  for (std::size_t m = 0; m < reps.finals.size(); ++m)
    for (std::size_t i = 0; i < reps.num_items; ++i) scores[i] += dot(reps.final_user(m, user), reps.final_item(m, i));
  return scores;
}

}  // namespace mdvt

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdvt/dataset.hpp"
#include "mdvt/kernels.hpp"
#include "mdvt/matrix.hpp"

namespace mdvt {

enum class Readout { kSum, kMean };
enum class ScoreMode { kPerModality, kFused };

/// Trainable table for one modality. Rows [0, num_users) are users, the rest
/// are items, matching the vertex layout of InteractionGraph.
struct ModalityTable {
  std::string name;
  Matrix nodes;
};

struct EmbeddingState {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t dim = 0;
  std::uint64_t init_seed = 0;
  std::vector<ModalityTable> tables;

  std::span<double> user(std::size_t m, std::size_t u) { return tables[m].nodes.row(u); }
  std::span<const double> user(std::size_t m, std::size_t u) const { return tables[m].nodes.row(u); }
  std::span<double> item(std::size_t m, std::size_t i) { return tables[m].nodes.row(num_users + i); }
  std::span<const double> item(std::size_t m, std::size_t i) const { return tables[m].nodes.row(num_users + i); }

  bool operator==(const EmbeddingState& o) const {
    if (tables.size() != o.tables.size()) return false;
    for (std::size_t m = 0; m < tables.size(); ++m)
      if (tables[m].name != o.tables[m].name || !(tables[m].nodes == o.tables[m].nodes)) return false;
    return true;
  }
};

/// Random tables ~ U(-0.5/sqrt(d), 0.5/sqrt(d)) for every user table and the
/// "id" item table; feature modalities start from their features projected to d.
EmbeddingState init_embeddings(const ModalityBundle& bundle, std::size_t num_users, std::size_t num_items,
                               std::size_t dim, std::uint64_t seed);

/// Fixed f x d projection used when a feature width differs from d.
Matrix feature_projection(std::size_t feature_dim, std::size_t dim, std::uint64_t seed, std::size_t modality_index);

/// Layers 0..L of stacked user+item embeddings for one modality.
using LayerCache = std::vector<Matrix>;

LayerCache propagate(const InteractionGraph& graph, std::span<const double> coef, const Matrix& table,
                     std::size_t layers);
Matrix readout(const LayerCache& cache, Readout mode);

/// Element-wise mean of the selected matrices. Throws on an empty mask.
Matrix fuse(std::span<const Matrix> finals, std::span<const std::size_t> mask);

struct Representations {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Matrix> finals;  // per modality, stacked users then items
  Matrix fused_users;
  Matrix fused_items;

  std::span<const double> final_user(std::size_t m, std::size_t u) const { return finals[m].row(u); }
  std::span<const double> final_item(std::size_t m, std::size_t i) const { return finals[m].row(num_users + i); }
};

struct BackboneOptions {
  std::size_t layers = 2;
  kernels::Norm norm = kernels::Norm::kInvDegree;
  Readout readout = Readout::kSum;
};

/// Reference graph-collaborative-filtering backbone over one train graph.
class Backbone {
 public:
  Backbone(const InteractionGraph& graph, BackboneOptions options);

  const InteractionGraph& graph() const { return *graph_; }
  const BackboneOptions& options() const { return options_; }
  std::span<const double> coefficients() const { return coef_; }

  /// `mask` lists the modality indices that take part in fusion.
  Representations forward(const EmbeddingState& state, std::span<const std::size_t> mask) const;

  /// Maps gradients w.r.t. per-modality finals onto gradients w.r.t. the
  /// tables, in place. The propagation operator is symmetric, so its
  /// transpose is the same sparse product.
  void backward(std::vector<Matrix>& grads) const;

 private:
  const InteractionGraph* graph_;
  BackboneOptions options_;
  std::vector<double> coef_;
};

/// Score rows q and item rows t such that <q[u], t[i]> is the prediction for (u, i).
struct ScoreTables {
  Matrix users;
  Matrix items;
};

ScoreTables score_tables(const Representations& reps, ScoreMode mode);

/// Predicted score of every item for one user.
std::vector<double> predict_scores(std::size_t user, const Representations& reps, ScoreMode mode);

}  // namespace mdvt

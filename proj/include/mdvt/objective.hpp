#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdvt/backbone.hpp"
#include "mdvt/dataset.hpp"
#include "mdvt/triplet_forge.hpp"

namespace mdvt {

/// log(1 + exp(x)) without overflow.
double softplus(double x);
double sigmoid(double x);

/// Mean of -log sigmoid(gap) over the given score gaps.
double bpr_loss(std::span<const double> gaps);

/// Group means of the fused item vectors for one user's virtual positives and negatives.
std::pair<std::vector<double>, std::vector<double>> aggregate_virtual(std::uint32_t user, const VirtualTripletSet& set,
                                                                      const Matrix& fused_items);

enum class LossScaling {
  kAligned,    // (1 - lambda) * bpr + lambda * vbpr
  kUnscaled,   // bpr + lambda * vbpr
};

double combined_loss(double l_bpr, double l_vbpr, double lambda, LossScaling scaling);

struct ObjectiveOptions {
  double lambda = 0.2;
  LossScaling scaling = LossScaling::kAligned;
  bool without_aggregation = false;
  bool virtual_per_user = false;
  ScoreMode score = ScoreMode::kPerModality;
};

/// Mean virtual BPR over batch entries (or distinct batch users). Entries
/// whose user has an empty virtual group contribute no term; if no entry
/// contributes, the loss is 0.
double virtual_bpr_loss(const TripletBatch& batch, const VirtualTripletSet& set, const Representations& reps,
                        const ObjectiveOptions& options);

struct BatchLoss {
  double l_bpr = 0.0;
  std::optional<double> l_vbpr;
  double l_total = 0.0;
  std::size_t virtual_terms = 0;
};

/// Losses for one batch plus gradients w.r.t. each modality's final
/// (post-readout) stacked representation. `virtual_set` == nullptr means the
/// warm-up phase: only the real BPR term is active.
BatchLoss loss_and_final_gradients(const TripletBatch& batch, const VirtualTripletSet* virtual_set,
                                   const Representations& reps, std::span<const std::size_t> mask,
                                   const ObjectiveOptions& options, std::vector<Matrix>* final_grads);

struct Gradients {
  BatchLoss loss;
  std::vector<Matrix> tables;  // mirrors EmbeddingState::tables
};

/// Forward pass, losses and gradients w.r.t. every embedding table.
Gradients compute_gradients(const TripletBatch& batch, const VirtualTripletSet* virtual_set,
                            const EmbeddingState& state, const Backbone& backbone,
                            std::span<const std::size_t> mask, const ObjectiveOptions& options);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

OptimizerState make_optimizer(const EmbeddingState& state, AdamOptions options);

/// Bias-corrected Adam update of every table. Throws TrainingError on a
/// non-finite gradient, naming the table and coordinate.
void adam_step(EmbeddingState& state, OptimizerState& optimizer, const std::vector<Matrix>& grads);

}  // namespace mdvt

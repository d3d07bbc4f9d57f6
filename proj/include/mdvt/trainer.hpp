#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mdvt/backbone.hpp"
#include "mdvt/config.hpp"
#include "mdvt/dataset.hpp"
#include "mdvt/evaluator.hpp"
#include "mdvt/objective.hpp"
#include "mdvt/triplet_forge.hpp"
#include "mdvt/warmup.hpp"

namespace mdvt {

/// Everything a run needs that does not change during training.
struct TrainingData {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  ModalityBundle modalities;
  InteractionGraph graph;
  PopularityTable popularity;
  EvalTarget validation_target;  // masks train
  EvalTarget test_target;        // masks train and validation

  static TrainingData build(const DatasetSplit& split, ModalityBundle modalities);
};

inline const std::vector<std::size_t> kReportKs{5, 10};

struct LossReport {
  std::size_t epoch = 0;  // 1-based
  double l_bpr = 0.0;
  std::optional<double> l_vbpr;
  double l_total = 0.0;
};

struct EpochRecord {
  LossReport loss;
  double val_recall5 = 0.0;
  double val_recall10 = 0.0;
  double val_ndcg5 = 0.0;
  double val_ndcg10 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Number of warm-up epochs before virtual triplets joined; the first
  /// joint epoch is trigger_epoch + 1 (1-based). Empty if never joined.
  std::optional<std::size_t> trigger_epoch;
  std::size_t best_epoch = 0;     // 1-based
  std::size_t stopped_epoch = 0;  // 1-based, equals epochs.size()
  double best_val_ndcg10 = 0.0;
};

/// One training run's mutable state: embeddings, optimizer and RNG streams.
class Trainer {
 public:
  Trainer(const TrainingData& data, const RunConfig& config);

  /// Runs one epoch (0-based index). In the joint phase the virtual triplet
  /// set is rebuilt from the current representations first.
  LossReport train_epoch(std::size_t epoch, bool joint);

  Representations forward() const { return backbone_.forward(state_, mask_); }
  MetricsReport evaluate(const EvalTarget& target) const;

  const EmbeddingState& state() const { return state_; }
  void restore(EmbeddingState state) { state_ = std::move(state); }
  const VirtualTripletSet* virtual_set() const { return virtual_set_ ? &*virtual_set_ : nullptr; }
  const Backbone& backbone() const { return backbone_; }
  std::span<const std::size_t> mask() const { return mask_; }

 private:
  const TrainingData* data_;
  RunConfig config_;
  Backbone backbone_;
  std::vector<std::size_t> mask_;
  EmbeddingState state_;
  OptimizerState optimizer_;
  Rng order_rng_;
  Rng negative_rng_;
  std::optional<VirtualTripletSet> virtual_set_;
};

struct RunOutcome {
  EmbeddingState state;  // restored to the best validation epoch
  TrainHistory history;
  MetricsReport validation;
  MetricsReport test;
};

/// Full run with early stopping on validation NDCG@10 (strict improvement).
RunOutcome train_run(const TrainingData& data, const RunConfig& config, WarmupGate gate);

struct CandidateResult {
  std::size_t warmup_epochs = 0;
  double val_ndcg10 = 0.0;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  bool reused_probe = false;
};

struct SearchOutcome {
  WarmupPlan plan;  // with resolved_trigger / dynamic_estimate filled in
  std::vector<CandidateResult> candidates;
  std::vector<TrainHistory> histories;  // one per candidate, or the single run
  std::size_t runs_executed = 0;
  RunOutcome best;
};

/// Executes the configured warm-up strategy; the winner is the candidate
/// with the highest validation NDCG@10 (ties: fewer warm-up epochs).
/// With config.mdvt == false a single baseline run is returned.
SearchOutcome run_strategy_search(const TrainingData& data, const RunConfig& config, std::size_t workers = 1);

struct ConvergenceRow {
  std::size_t epochs_to_best = 0;
  std::size_t epochs_to_stop = 0;
  double final_l_bpr = 0.0;
  std::optional<double> final_l_vbpr;
  double final_l_total = 0.0;
  std::vector<double> loss_series;
  std::vector<double> val_ndcg10_series;
};

std::vector<ConvergenceRow> convergence_summary(std::span<const TrainHistory> histories);

}  // namespace mdvt

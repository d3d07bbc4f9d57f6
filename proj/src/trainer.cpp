#include "mdvt/trainer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "mdvt/error.hpp"

namespace mdvt {

TrainingData TrainingData::build(const DatasetSplit& split, ModalityBundle modalities) {
  TrainingData d;
  d.num_users = split.num_users;
  d.num_items = split.num_items;
  d.train = split.train;
  d.validation = split.validation;
  d.test = split.test;
  d.modalities = std::move(modalities);
  d.graph = build_graph(d.num_users, d.num_items, d.train);
  d.popularity = compute_popularity(d.num_users, d.num_items, d.train);
  const std::vector<Interaction>* val_mask[] = {&d.train};
  d.validation_target = make_eval_target(d.num_users, d.validation, val_mask, d.popularity.user_train_count);
  const std::vector<Interaction>* test_mask[] = {&d.train, &d.validation};
  d.test_target = make_eval_target(d.num_users, d.test, test_mask, d.popularity.user_train_count);
  return d;
}

Trainer::Trainer(const TrainingData& data, const RunConfig& config)
    : data_(&data),
      config_(config),
      backbone_(data.graph, config.backbone_options()),
      mask_(resolve_fusion_mask(config, data.modalities.names)),
      state_(init_embeddings(data.modalities, data.num_users, data.num_items, config.embed_dim, config.seed)),
      optimizer_(make_optimizer(state_, config.adam_options())),
      order_rng_(derive_seed(config.seed, Stream::kShuffle)),
      negative_rng_(derive_seed(config.seed, Stream::kNegative)) {
  validate_config(config_);
}

LossReport Trainer::train_epoch(std::size_t epoch, bool joint) {
  if (joint) {
    const auto reps = forward();
    virtual_set_ = refresh(reps.fused_users, reps.fused_items, data_->graph, data_->popularity,
                           config_.forge_options(), epoch);
  }
  const VirtualTripletSet* vset = joint ? &*virtual_set_ : nullptr;
  const auto objective = config_.objective_options();

  const auto batches = make_batches(data_->train, data_->graph, config_.batch_size, order_rng_, negative_rng_);
  double bpr = 0.0, vbpr = 0.0, total = 0.0;
  std::size_t entries = 0;
  for (const auto& batch : batches) {
    auto grads = compute_gradients(batch, vset, state_, backbone_, mask_, objective);
    if (!std::isfinite(grads.loss.l_total))
      throw TrainingError("epoch " + std::to_string(epoch + 1) + ": non-finite loss (l_bpr=" +
                          std::to_string(grads.loss.l_bpr) + ")");
    adam_step(state_, optimizer_, grads.tables);
    const auto w = static_cast<double>(batch.size());
    bpr += w * grads.loss.l_bpr;
    if (grads.loss.l_vbpr) vbpr += w * *grads.loss.l_vbpr;
    total += w * grads.loss.l_total;
    entries += batch.size();
  }
  LossReport report;
  report.epoch = epoch + 1;
  const double inv = 1.0 / static_cast<double>(entries);
  report.l_bpr = bpr * inv;
  if (joint) report.l_vbpr = vbpr * inv;
  report.l_total = total * inv;
  return report;
}

MetricsReport Trainer::evaluate(const EvalTarget& target) const {
  return mdvt::evaluate(forward(), config_.score, target, data_->popularity.user_train_count, kReportKs);
}

RunOutcome train_run(const TrainingData& data, const RunConfig& config, WarmupGate gate) {
  Trainer trainer(data, config);
  RunOutcome out;
  std::vector<double> losses;
  double best = -std::numeric_limits<double>::infinity();
  EmbeddingState best_state = trainer.state();

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const bool joint = config.mdvt && gate.is_joint(epoch, losses);
    EpochRecord rec;
    rec.loss = trainer.train_epoch(epoch, joint);
    losses.push_back(rec.loss.l_total);

    const auto val = trainer.evaluate(data.validation_target);
    rec.val_recall5 = val.metric(5).recall;
    rec.val_recall10 = val.metric(10).recall;
    rec.val_ndcg5 = val.metric(5).ndcg;
    rec.val_ndcg10 = val.metric(10).ndcg;
    out.history.epochs.push_back(rec);

    if (rec.val_ndcg10 > best) {
      best = rec.val_ndcg10;
      out.history.best_epoch = epoch + 1;
      best_state = trainer.state();
    } else if (epoch + 1 - out.history.best_epoch >= config.patience) {
      break;
    }
  }
  out.history.stopped_epoch = out.history.epochs.size();
  out.history.best_val_ndcg10 = best;
  if (config.mdvt && gate.trigger() && *gate.trigger() < out.history.stopped_epoch)
    out.history.trigger_epoch = gate.trigger();

  trainer.restore(std::move(best_state));
  out.validation = trainer.evaluate(data.validation_target);
  out.test = trainer.evaluate(data.test_target);
  out.state = trainer.state();
  return out;
}

namespace {

// Runs fixed-warm-up candidates on up to `workers` threads; results keep
// candidate order.
std::vector<RunOutcome> run_fixed_candidates(const TrainingData& data, const RunConfig& config,
                                             const std::vector<std::size_t>& candidates, std::size_t workers) {
  std::vector<std::optional<RunOutcome>> slots(candidates.size());
  std::vector<std::exception_ptr> errors(candidates.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < candidates.size(); k = next++) {
      try {
        slots[k] = train_run(data, config, WarmupGate::fixed(candidates[k]));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, workers), candidates.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  std::vector<RunOutcome> out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (errors[k]) std::rethrow_exception(errors[k]);
    out.push_back(std::move(*slots[k]));
  }
  return out;
}

CandidateResult describe(std::size_t warmup, const RunOutcome& run, bool reused) {
  return {warmup, run.history.best_val_ndcg10, run.history.best_epoch, run.history.stopped_epoch, reused};
}

}  // namespace

SearchOutcome run_strategy_search(const TrainingData& data, const RunConfig& config, std::size_t workers) {
  validate_config(config);
  SearchOutcome out;
  out.plan = config.warmup;

  if (!config.mdvt) {
    out.best = train_run(data, config, WarmupGate::never());
    out.runs_executed = 1;
    out.histories.push_back(out.best.history);
    return out;
  }

  const auto strategy = config.warmup.strategy;
  if (strategy == Strategy::kDynamic) {
    auto gate = WarmupGate::dynamic(config.warmup.g);
    out.best = train_run(data, config, gate);
    out.runs_executed = 1;
    out.histories.push_back(out.best.history);
    out.plan.dynamic_estimate = out.best.history.trigger_epoch;
    out.plan.resolved_trigger = out.best.history.trigger_epoch;
    if (out.plan.resolved_trigger) out.candidates.push_back(describe(*out.plan.resolved_trigger, out.best, false));
    return out;
  }

  std::vector<std::size_t> candidates;
  std::vector<std::optional<RunOutcome>> runs;
  if (strategy == Strategy::kStatic) {
    candidates = static_candidates(config.warmup.threshold_set);
    runs.resize(candidates.size());
  } else {
    // The probe's trajectory equals the fixed run with the same warm-up count,
    // so it stands in for that candidate.
    RunOutcome probe = train_run(data, config, WarmupGate::dynamic(config.warmup.g));
    ++out.runs_executed;
    const auto estimate = probe.history.trigger_epoch;
    out.plan.dynamic_estimate = estimate;
    const std::size_t current = estimate ? *estimate : probe.history.stopped_epoch;
    candidates = hybrid_candidates(current, config.warmup.s);
    runs.resize(candidates.size());
    if (estimate) {
      for (std::size_t k = 0; k < candidates.size(); ++k)
        if (candidates[k] == *estimate) runs[k] = std::move(probe);
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (!runs[k]) pending.push_back(candidates[k]);
  auto fresh = run_fixed_candidates(data, config, pending, workers);
  out.runs_executed += fresh.size();
  std::vector<bool> reused(candidates.size(), false);
  for (std::size_t k = 0, f = 0; k < candidates.size(); ++k) {
    if (runs[k]) {
      reused[k] = true;
      continue;
    }
    runs[k] = std::move(fresh[f++]);
  }

  std::size_t winner = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    out.candidates.push_back(describe(candidates[k], *runs[k], reused[k]));
    out.histories.push_back(runs[k]->history);
    if (runs[k]->history.best_val_ndcg10 > runs[winner]->history.best_val_ndcg10) winner = k;
  }
  out.plan.resolved_trigger = candidates[winner];
  out.best = std::move(*runs[winner]);
  return out;
}

std::vector<ConvergenceRow> convergence_summary(std::span<const TrainHistory> histories) {
  std::vector<ConvergenceRow> rows;
  for (const auto& h : histories) {
    ConvergenceRow row;
    row.epochs_to_best = h.best_epoch;
    row.epochs_to_stop = h.stopped_epoch;
    if (!h.epochs.empty()) {
      const auto& last = h.epochs.back().loss;
      row.final_l_bpr = last.l_bpr;
      row.final_l_vbpr = last.l_vbpr;
      row.final_l_total = last.l_total;
    }
    for (const auto& e : h.epochs) {
      row.loss_series.push_back(e.loss.l_total);
      row.val_ndcg10_series.push_back(e.val_ndcg10);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mdvt

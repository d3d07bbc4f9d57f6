#include "mdvt/report.hpp"

#include <cstring>
#include <fstream>

#include "mdvt/error.hpp"
#include "mdvt/feature_io.hpp"

namespace mdvt {

using nlohmann::json;

namespace {

json metrics_json(const std::vector<AtK>& at) {
  json j = json::object();
  for (const auto& a : at) {
    j["recall@" + std::to_string(a.k)] = a.recall;
    j["ndcg@" + std::to_string(a.k)] = a.ndcg;
  }
  return j;
}

json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const MetricsReport& r) {
  json j;
  j["ks"] = r.ks;
  j["metrics"] = metrics_json(r.at);
  j["num_users_evaluated"] = r.num_users_evaluated;
  json buckets = json::array();
  for (const auto& b : r.buckets) {
    buckets.push_back({{"bucket", b.label()},
                       {"count", b.count},
                       {"metrics", b.count ? metrics_json(b.at) : json(nullptr)}});
  }
  j["sparsity_buckets"] = buckets;
  return j;
}

json to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.loss.epoch},
                      {"l_bpr", e.loss.l_bpr},
                      {"l_vbpr", e.loss.l_vbpr ? json(*e.loss.l_vbpr) : json(nullptr)},
                      {"l_total", e.loss.l_total},
                      {"val_recall@5", e.val_recall5},
                      {"val_recall@10", e.val_recall10},
                      {"val_ndcg@5", e.val_ndcg5},
                      {"val_ndcg@10", e.val_ndcg10}});
  }
  return {{"epochs", epochs},
          {"trigger_epoch", optional_json(h.trigger_epoch)},
          {"best_epoch", h.best_epoch},
          {"stopped_epoch", h.stopped_epoch},
          {"best_val_ndcg@10", h.best_val_ndcg10}};
}

json to_json(const WarmupPlan& plan, const std::vector<CandidateResult>& candidates, std::size_t runs) {
  json rows = json::array();
  for (const auto& c : candidates) {
    rows.push_back({{"warmup_epochs", c.warmup_epochs},
                    {"val_ndcg@10", c.val_ndcg10},
                    {"best_epoch", c.best_epoch},
                    {"stopped_epoch", c.stopped_epoch},
                    {"reused_probe", c.reused_probe}});
  }
  return {{"strategy", to_string(plan.strategy)},
          {"static_set", plan.threshold_set},
          {"g", plan.g},
          {"s", plan.s},
          {"dynamic_estimate", optional_json(plan.dynamic_estimate)},
          {"resolved_trigger", optional_json(plan.resolved_trigger)},
          {"runs_executed", runs},
          {"candidates", rows}};
}

json to_json(const std::vector<ConvergenceRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"epochs_to_best", r.epochs_to_best},
                   {"epochs_to_stop", r.epochs_to_stop},
                   {"final_l_bpr", r.final_l_bpr},
                   {"final_l_vbpr", r.final_l_vbpr ? json(*r.final_l_vbpr) : json(nullptr)},
                   {"final_l_total", r.final_l_total},
                   {"loss_series", r.loss_series},
                   {"val_ndcg@10_series", r.val_ndcg10_series}});
  }
  return out;
}

json make_run_report(const RunConfig& config, const DatasetStats& stats, const SearchOutcome& outcome,
                     const std::vector<std::string>& warnings, double wall_clock_seconds) {
  json j;
  j["tool_version"] = kToolVersion;
  j["config"] = config_to_json(config);
  j["config_hash"] = hex64(config_hash(config));
  j["dataset"] = to_json(stats);
  j["warmup"] = to_json(outcome.plan, outcome.candidates, outcome.runs_executed);
  j["history"] = to_json(outcome.best.history);
  j["validation"] = to_json(outcome.best.validation);
  j["test"] = to_json(outcome.best.test);
  j["convergence"] = to_json(convergence_summary(outcome.histories));
  j["warnings"] = warnings;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, std::uint64_t bundle_hash,
                     const EmbeddingState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  write_u64(out, config_hash(config));
  write_u64(out, bundle_hash);
  const auto cfg = config_to_json(config).dump();
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_u32(out, static_cast<std::uint32_t>(state.tables.size()));
  for (const auto& t : state.tables) {
    write_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    Matrix users(state.num_users, state.dim), items(state.num_items, state.dim);
    const auto split = t.nodes.data.begin() + static_cast<std::ptrdiff_t>(state.num_users * state.dim);
    std::copy(t.nodes.data.begin(), split, users.data.begin());
    std::copy(split, t.nodes.data.end(), items.data.begin());
    write_feature_block(out, users);
    write_feature_block(out, items);
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  try {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
      throw CheckpointError(path.string() + ": not a checkpoint");
    Checkpoint ck;
    ck.config_hash = read_u64(in);
    ck.bundle_hash = read_u64(in);
    std::string cfg(read_u32(in), '\0');
    if (!in.read(cfg.data(), static_cast<std::streamsize>(cfg.size()))) throw CheckpointError("truncated config");
    ck.config = config_from_json(json::parse(cfg));
    if (config_hash(ck.config) != ck.config_hash) throw CheckpointError(path.string() + ": config hash mismatch");
    const auto tables = read_u32(in);
    for (std::uint32_t k = 0; k < tables; ++k) {
      std::string name(read_u32(in), '\0');
      if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) throw CheckpointError("truncated table name");
      Matrix users = read_feature_block(in, path.string());
      Matrix items = read_feature_block(in, path.string());
      if (k == 0) {
        ck.state.num_users = users.rows;
        ck.state.num_items = items.rows;
        ck.state.dim = users.cols;
      }
      if (users.rows != ck.state.num_users || items.rows != ck.state.num_items || users.cols != ck.state.dim ||
          items.cols != ck.state.dim)
        throw CheckpointError(path.string() + ": inconsistent table shapes");
      ModalityTable t{name, Matrix(users.rows + items.rows, users.cols)};
      std::copy(users.data.begin(), users.data.end(), t.nodes.data.begin());
      std::copy(items.data.begin(), items.data.end(), t.nodes.data.begin() + static_cast<std::ptrdiff_t>(users.data.size()));
      ck.state.tables.push_back(std::move(t));
    }
    ck.state.init_seed = ck.config.seed;
    return ck;
  } catch (const DataError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace mdvt

#include "mdvt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include "mdvt/config.hpp"
#include "mdvt/error.hpp"
#include "mdvt/report.hpp"
#include "mdvt/trainer.hpp"

namespace mdvt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError&) {
    return kConfigError;
  } catch (const DataError&) {
    return kDataError;
  } catch (const CheckpointError&) {
    return kCheckpointError;
  } catch (...) {
    return kRuntimeError;
  }
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json base_config_json(const std::optional<fs::path>& path, const std::optional<std::uint64_t>& seed) {
  json j = path ? read_json_file(*path) : json::object();
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (seed) j["seed"] = *seed;
  return j;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

json cmd_prepare(const PrepareInputs& inputs) {
  auto manifest = prepare_bundle(inputs);
  return manifest;
}

json cmd_train(const TrainArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  const RunConfig config = config_from_json(base_config_json(args.config, args.seed), &warnings);
  const Bundle bundle = load_bundle(args.bundle);
  (void)resolve_fusion_mask(config, bundle.modalities.names);
  const auto data = TrainingData::build(bundle.split, bundle.modalities);
  const auto outcome = run_strategy_search(data, config, args.workers);

  auto report = make_run_report(config, bundle.stats, outcome, warnings, seconds_since(start));
  write_json_file(args.out, report);
  const fs::path ckpt = args.checkpoint ? *args.checkpoint : fs::path(args.out.string() + ".ckpt");
  save_checkpoint(ckpt, config, bundle.content_hash, outcome.best.state);
  return report;
}

std::vector<json> expand_grid(const json& grid) {
  if (!grid.is_object() || grid.empty()) throw ConfigError("grid spec must be a non-empty JSON object");
  std::vector<json> cells{json::object()};
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) throw ConfigError("grid key '" + key + "' needs a non-empty array");
    std::vector<json> next;
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        json c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

json cmd_sweep(const SweepArgs& args) {
  const json base = base_config_json(args.config, args.seed);
  const auto cells = expand_grid(read_json_file(args.grid));

  struct Cell {
    json overrides;
    RunConfig config;
    std::string hash;
    std::vector<std::string> warnings;
  };
  std::vector<Cell> plan;
  for (const auto& overrides : cells) {
    json merged = base;
    merged.update(overrides);
    Cell cell;
    cell.overrides = overrides;
    cell.config = config_from_json(merged, &cell.warnings);
    cell.hash = hex64(config_hash(cell.config));
    plan.push_back(std::move(cell));
  }

  const Bundle bundle = load_bundle(args.bundle);
  const auto data = TrainingData::build(bundle.split, bundle.modalities);
  const fs::path cell_dir = args.out_dir / "cells";
  fs::create_directories(cell_dir);

  std::vector<std::size_t> pending;
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto path = cell_dir / (plan[k].hash + ".json");
    if (args.resume && fs::exists(path)) {
      try {
        if (read_json_file(path).at("config_hash") == plan[k].hash) {
          ++skipped;
          continue;
        }
      } catch (const std::exception&) {
        // unreadable cell output: rerun it
      }
    }
    pending.push_back(k);
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(pending.size());
  auto work = [&] {
    for (std::size_t p = next++; p < pending.size(); p = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        const auto& cell = plan[pending[p]];
        const auto outcome = run_strategy_search(data, cell.config, 1);
        auto report = make_run_report(cell.config, bundle.stats, outcome, cell.warnings, seconds_since(start));
        write_json_file(cell_dir / (cell.hash + ".json"), report);
      } catch (...) {
        errors[p] = std::current_exception();
      }
    }
  };
  {
    const std::size_t threads = std::min(std::max<std::size_t>(1, args.workers), std::max<std::size_t>(1, pending.size()));
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  json rows = json::array();
  for (const auto& cell : plan) {
    const json report = read_json_file(cell_dir / (cell.hash + ".json"));
    rows.push_back({{"config_hash", cell.hash},
                    {"overrides", cell.overrides},
                    {"val_ndcg@10", report.at("history").at("best_val_ndcg@10")},
                    {"test", report.at("test").at("metrics")},
                    {"resolved_trigger", report.at("warmup").at("resolved_trigger")}});
  }
  std::vector<json> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const json& a, const json& b) {
    const double va = a.at("val_ndcg@10").get<double>(), vb = b.at("val_ndcg@10").get<double>();
    return va != vb ? va > vb : a.at("config_hash").get<std::string>() < b.at("config_hash").get<std::string>();
  });

  json summary = {{"cells", sorted}, {"executed", pending.size()}, {"skipped", skipped}};
  write_json_file(args.out_dir / "summary.json", summary);

  std::ofstream csv(args.out_dir / "summary.csv", std::ios::binary);
  csv << "config_hash,overrides,val_ndcg@10,test_recall@5,test_recall@10,test_ndcg@5,test_ndcg@10\n";
  for (const auto& r : sorted) {
    std::string ov = r.at("overrides").dump();
    std::replace(ov.begin(), ov.end(), '"', '\'');
    const auto& t = r.at("test");
    csv << r.at("config_hash").get<std::string>() << ",\"" << ov << "\"," << r.at("val_ndcg@10").dump() << ','
        << t.at("recall@5").dump() << ',' << t.at("recall@10").dump() << ',' << t.at("ndcg@5").dump() << ','
        << t.at("ndcg@10").dump() << '\n';
  }
  return summary;
}

json cmd_eval(const EvalArgs& args) {
  const Bundle bundle = load_bundle(args.bundle);
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  if (ck.bundle_hash != bundle.content_hash)
    throw CheckpointError("checkpoint was trained on a different bundle (hash " + hex64(ck.bundle_hash) + " vs " +
                          hex64(bundle.content_hash) + ")");
  if (ck.state.num_users != bundle.split.num_users || ck.state.num_items != bundle.split.num_items ||
      ck.state.tables.size() != bundle.modalities.names.size())
    throw CheckpointError("checkpoint shapes do not match the bundle");
  for (const auto k : args.ks)
    if (k < 1) throw ConfigError("K must be >= 1");

  const auto data = TrainingData::build(bundle.split, bundle.modalities);
  const Backbone backbone(data.graph, ck.config.backbone_options());
  const auto mask = resolve_fusion_mask(ck.config, bundle.modalities.names);
  const auto reps = backbone.forward(ck.state, mask);
  const auto test = evaluate(reps, ck.config.score, data.test_target, data.popularity.user_train_count, args.ks);

  json out = {{"config_hash", hex64(ck.config_hash)}, {"test", to_json(test)}};
  if (args.out) write_json_file(*args.out, out);
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Multimodal graph recommender with virtual-triplet training"};
  app.require_subcommand(1);

  std::string interactions, out_dir;
  std::vector<std::string> modality_specs;
  std::uint64_t prep_seed = 2024;
  auto* prepare = app.add_subcommand("prepare", "Remap, split and validate a dataset into a bundle directory");
  prepare->add_option("--interactions", interactions, "user<TAB>item file")->required();
  prepare->add_option("--modality", modality_specs, "name=features.bin,item_ids.txt (repeatable)");
  prepare->add_option("--out", out_dir, "bundle output directory")->required();
  prepare->add_option("--seed", prep_seed, "split seed");

  TrainArgs train_args;
  std::string train_bundle, train_config, train_out, train_ckpt;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Train with the configured warm-up strategy and write a run report");
  train->add_option("--bundle", train_bundle)->required();
  train->add_option("--config", train_config, "flat JSON config");
  train->add_option("--out", train_out, "run report path")->required();
  train->add_option("--checkpoint", train_ckpt, "checkpoint path (default <out>.ckpt)");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "override config seed");
  train->add_option("--workers", train_args.workers, "parallel candidate runs");

  SweepArgs sweep_args;
  std::string sweep_bundle, sweep_config, sweep_grid, sweep_out;
  std::uint64_t sweep_seed = 0;
  auto* sweep = app.add_subcommand("sweep", "Run every cell of a hyper-parameter grid");
  sweep->add_option("--bundle", sweep_bundle)->required();
  sweep->add_option("--config", sweep_config, "base config");
  sweep->add_option("--grid", sweep_grid, "JSON {key: [values]}")->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();
  auto* sweep_seed_opt = sweep->add_option("--seed", sweep_seed, "override config seed");
  sweep->add_option("--workers", sweep_args.workers, "parallel cells");
  sweep->add_flag("--resume", sweep_args.resume, "skip cells whose output already exists");

  EvalArgs eval_args;
  std::string eval_bundle, eval_ckpt, eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("--bundle", eval_bundle)->required();
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--k", eval_args.ks, "cutoffs (default 5 10)");
  eval->add_option("--out", eval_out, "metrics JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*prepare) {
      PrepareInputs in;
      in.interactions = interactions;
      in.out_dir = out_dir;
      in.seed = prep_seed;
      for (const auto& spec : modality_specs) {
        const auto eq = spec.find('=');
        const auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || comma == std::string::npos)
          throw ConfigError("--modality expects name=features.bin,item_ids.txt, got '" + spec + "'");
        in.modalities.push_back({spec.substr(0, eq), spec.substr(eq + 1, comma - eq - 1), spec.substr(comma + 1)});
      }
      const auto manifest = cmd_prepare(in);
      std::cout << manifest.at("stats").dump(2) << '\n';
    } else if (*train) {
      train_args.bundle = train_bundle;
      if (!train_config.empty()) train_args.config = train_config;
      train_args.out = train_out;
      if (!train_ckpt.empty()) train_args.checkpoint = train_ckpt;
      if (*train_seed_opt) train_args.seed = train_seed;
      const auto report = cmd_train(train_args);
      for (const auto& w : report.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
      std::cout << report.at("test").at("metrics").dump(2) << '\n';
    } else if (*sweep) {
      sweep_args.bundle = sweep_bundle;
      if (!sweep_config.empty()) sweep_args.config = sweep_config;
      sweep_args.grid = sweep_grid;
      sweep_args.out_dir = sweep_out;
      if (*sweep_seed_opt) sweep_args.seed = sweep_seed;
      const auto summary = cmd_sweep(sweep_args);
      std::cout << "executed " << summary.at("executed") << ", skipped " << summary.at("skipped") << '\n';
    } else if (*eval) {
      eval_args.bundle = eval_bundle;
      eval_args.checkpoint = eval_ckpt;
      if (!eval_out.empty()) eval_args.out = eval_out;
      std::cout << cmd_eval(eval_args).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(std::current_exception());
  }
  return kOk;
}

}  // namespace mdvt::cli

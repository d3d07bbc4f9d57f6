#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdvt/bundle.hpp"

namespace mdvt::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDataError = 2,
  kCheckpointError = 3,
  kRuntimeError = 4,
};

int exit_code_for(const std::exception_ptr& error);

nlohmann::json cmd_prepare(const PrepareInputs& inputs);

struct TrainArgs {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> checkpoint;  // default: <out>.ckpt
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
};

nlohmann::json cmd_train(const TrainArgs& args);

struct SweepArgs {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> config;
  std::filesystem::path grid;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool resume = false;
};

/// Cartesian product of a grid spec {key: [values...]}, keys in sorted order.
std::vector<nlohmann::json> expand_grid(const nlohmann::json& grid);

/// Returns the summary (rows sorted by validation NDCG@10, descending) and
/// writes summary.csv / summary.json / cells/<hash>.json under out_dir.
nlohmann::json cmd_sweep(const SweepArgs& args);

struct EvalArgs {
  std::filesystem::path bundle;
  std::filesystem::path checkpoint;
  std::vector<std::size_t> ks{5, 10};
  std::optional<std::filesystem::path> out;
};

nlohmann::json cmd_eval(const EvalArgs& args);

/// Entry point used by the `mdvt` binary.
int run(int argc, char** argv);

}  // namespace mdvt::cli

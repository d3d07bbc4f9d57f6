#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdvt/backbone.hpp"
#include "mdvt/bundle.hpp"
#include "mdvt/config.hpp"
#include "mdvt/evaluator.hpp"
#include "mdvt/trainer.hpp"

namespace mdvt {

inline constexpr const char* kToolVersion = "0.3.0";

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const TrainHistory& history);
nlohmann::json to_json(const WarmupPlan& plan, const std::vector<CandidateResult>& candidates, std::size_t runs);
nlohmann::json to_json(const std::vector<ConvergenceRow>& rows);

/// Run report; `wall_clock_seconds` is the only field that varies between
/// identical invocations.
nlohmann::json make_run_report(const RunConfig& config, const DatasetStats& stats, const SearchOutcome& outcome,
                               const std::vector<std::string>& warnings, double wall_clock_seconds);

// Checkpoint layout: "MDVTCKPT", u64 config hash, u64 bundle hash, u32 config
// JSON length + bytes, u32 table count, then per table u32 name length +
// name + users and items as feature blocks.
inline constexpr char kCheckpointMagic[8] = {'M', 'D', 'V', 'T', 'C', 'K', 'P', 'T'};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::uint64_t bundle_hash = 0;
  RunConfig config;
  EmbeddingState state;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, std::uint64_t bundle_hash,
                     const EmbeddingState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mdvt

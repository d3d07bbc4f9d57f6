#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdvt/backbone.hpp"
#include "mdvt/objective.hpp"
#include "mdvt/triplet_forge.hpp"
#include "mdvt/warmup.hpp"

namespace mdvt {

struct RunConfig {
  std::size_t embed_dim = 64;
  std::size_t layers = 2;
  double lambda = 0.2;
  std::size_t n = 2;
  std::size_t batch_size = 2048;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t max_epochs = 1000;
  std::size_t patience = 20;
  std::uint64_t seed = 2024;

  bool mdvt = true;
  std::vector<std::string> fusion_modalities;  // empty: all modalities
  Constructor constructor = Constructor::kTopN;
  double threshold = 0.9;
  std::size_t n1 = 1;
  std::size_t n2 = 4;
  bool include_seen = false;
  bool virtual_per_user = false;
  std::size_t refresh_chunk = 256;

  bool wo_aggr = false;
  bool wo_scale = false;

  kernels::Norm norm = kernels::Norm::kInvDegree;
  Readout readout = Readout::kSum;
  ScoreMode score = ScoreMode::kPerModality;

  WarmupPlan warmup;

  ObjectiveOptions objective_options() const;
  ForgeOptions forge_options() const;
  AdamOptions adam_options() const;
  BackboneOptions backbone_options() const;
};

/// Parses a flat JSON object. Unknown keys and invalid values are collected
/// and reported together in one ConfigError. Off-grid hyper-parameters are
/// appended to `warnings`.
RunConfig config_from_json(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr);
nlohmann::json config_to_json(const RunConfig& config);

/// Re-validates a config built in code; throws ConfigError listing problems.
void validate_config(const RunConfig& config);

/// FNV-1a over the canonical JSON dump.
std::uint64_t config_hash(const RunConfig& config);
std::string hex64(std::uint64_t v);

/// Resolves fusion modality names to indices into `modalities`.
std::vector<std::size_t> resolve_fusion_mask(const RunConfig& config, const std::vector<std::string>& modalities);

std::vector<std::string> off_grid_warnings(const RunConfig& config);

}  // namespace mdvt

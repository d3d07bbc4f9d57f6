#include "mdvt/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include "mdvt/error.hpp"
#include "mdvt/rng.hpp"

namespace mdvt {

using nlohmann::json;

ObjectiveOptions RunConfig::objective_options() const {
  ObjectiveOptions o;
  o.lambda = lambda;
  o.scaling = wo_scale ? LossScaling::kUnscaled : LossScaling::kAligned;
  o.without_aggregation = wo_aggr;
  o.virtual_per_user = virtual_per_user;
  o.score = score;
  return o;
}

ForgeOptions RunConfig::forge_options() const {
  ForgeOptions o;
  o.tag = constructor;
  o.n = n;
  o.threshold = threshold;
  o.n1 = n1;
  o.n2 = n2;
  o.include_seen = include_seen;
  o.chunk = refresh_chunk;
  return o;
}

AdamOptions RunConfig::adam_options() const {
  AdamOptions o;
  o.lr = lr;
  o.weight_decay = weight_decay;
  return o;
}

BackboneOptions RunConfig::backbone_options() const { return {layers, norm, readout}; }

namespace {

std::string norm_name(kernels::Norm n) { return n == kernels::Norm::kInvDegree ? "inv_degree" : "sym"; }
std::string readout_name(Readout r) { return r == Readout::kSum ? "sum" : "mean"; }
std::string score_name(ScoreMode s) { return s == ScoreMode::kPerModality ? "per_modality" : "fused"; }

using Setter = std::function<void(RunConfig&, const json&)>;

template <typename T>
T as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}

std::size_t as_count(const json& v, const char* key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(std::string(key) + ": expected non-negative integer");
  return v.get<std::size_t>();
}

double as_real(const json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(std::string(key) + ": expected number");
  return v.get<double>();
}

bool as_bool(const json& v, const char* key) {
  if (!v.is_boolean()) throw ConfigError(std::string(key) + ": expected boolean");
  return v.get<bool>();
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"embed_dim", [](RunConfig& c, const json& v) { c.embed_dim = as_count(v, "embed_dim"); }},
      {"layers", [](RunConfig& c, const json& v) { c.layers = as_count(v, "layers"); }},
      {"lambda", [](RunConfig& c, const json& v) { c.lambda = as_real(v, "lambda"); }},
      {"n", [](RunConfig& c, const json& v) { c.n = as_count(v, "n"); }},
      {"batch_size", [](RunConfig& c, const json& v) { c.batch_size = as_count(v, "batch_size"); }},
      {"lr", [](RunConfig& c, const json& v) { c.lr = as_real(v, "lr"); }},
      {"weight_decay", [](RunConfig& c, const json& v) { c.weight_decay = as_real(v, "weight_decay"); }},
      {"max_epochs", [](RunConfig& c, const json& v) { c.max_epochs = as_count(v, "max_epochs"); }},
      {"patience", [](RunConfig& c, const json& v) { c.patience = as_count(v, "patience"); }},
      {"seed", [](RunConfig& c, const json& v) { c.seed = as_count(v, "seed"); }},
      {"mdvt", [](RunConfig& c, const json& v) { c.mdvt = as_bool(v, "mdvt"); }},
      {"fusion_modalities",
       [](RunConfig& c, const json& v) { c.fusion_modalities = as<std::vector<std::string>>(v, "fusion_modalities"); }},
      {"constructor",
       [](RunConfig& c, const json& v) { c.constructor = constructor_from_string(as<std::string>(v, "constructor")); }},
      {"threshold", [](RunConfig& c, const json& v) { c.threshold = as_real(v, "threshold"); }},
      {"n1", [](RunConfig& c, const json& v) { c.n1 = as_count(v, "n1"); }},
      {"n2", [](RunConfig& c, const json& v) { c.n2 = as_count(v, "n2"); }},
      {"include_seen", [](RunConfig& c, const json& v) { c.include_seen = as_bool(v, "include_seen"); }},
      {"virtual_per_user", [](RunConfig& c, const json& v) { c.virtual_per_user = as_bool(v, "virtual_per_user"); }},
      {"refresh_chunk", [](RunConfig& c, const json& v) { c.refresh_chunk = as_count(v, "refresh_chunk"); }},
      {"wo_aggr", [](RunConfig& c, const json& v) { c.wo_aggr = as_bool(v, "wo_aggr"); }},
      {"wo_scale", [](RunConfig& c, const json& v) { c.wo_scale = as_bool(v, "wo_scale"); }},
      {"norm",
       [](RunConfig& c, const json& v) {
         const auto s = as<std::string>(v, "norm");
         if (s == "inv_degree") c.norm = kernels::Norm::kInvDegree;
         else if (s == "sym") c.norm = kernels::Norm::kSymmetric;
         else throw ConfigError("norm: expected 'inv_degree' or 'sym'");
       }},
      {"readout",
       [](RunConfig& c, const json& v) {
         const auto s = as<std::string>(v, "readout");
         if (s == "sum") c.readout = Readout::kSum;
         else if (s == "mean") c.readout = Readout::kMean;
         else throw ConfigError("readout: expected 'sum' or 'mean'");
       }},
      {"score",
       [](RunConfig& c, const json& v) {
         const auto s = as<std::string>(v, "score");
         if (s == "per_modality") c.score = ScoreMode::kPerModality;
         else if (s == "fused") c.score = ScoreMode::kFused;
         else throw ConfigError("score: expected 'per_modality' or 'fused'");
       }},
      {"strategy",
       [](RunConfig& c, const json& v) { c.warmup.strategy = strategy_from_string(as<std::string>(v, "strategy")); }},
      {"static_set",
       [](RunConfig& c, const json& v) { c.warmup.threshold_set = as<std::vector<long long>>(v, "static_set"); }},
      {"g", [](RunConfig& c, const json& v) { c.warmup.g = as_real(v, "g"); }},
      {"s", [](RunConfig& c, const json& v) { c.warmup.s = as_count(v, "s"); }},
  };
  return table;
}

std::vector<std::string> validation_problems(const RunConfig& c) {
  std::vector<std::string> errs;
  if (c.embed_dim < 1) errs.push_back("embed_dim: must be >= 1");
  if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) errs.push_back("lambda: must lie in [0, 1]");
  if (c.n < 1) errs.push_back("n: must be >= 1");
  if (c.batch_size < 1) errs.push_back("batch_size: must be >= 1");
  if (!(c.lr > 0.0)) errs.push_back("lr: must be > 0");
  if (!(c.weight_decay >= 0.0)) errs.push_back("weight_decay: must be >= 0");
  if (c.max_epochs < 1) errs.push_back("max_epochs: must be >= 1");
  if (c.patience < 1) errs.push_back("patience: must be >= 1");
  if (c.refresh_chunk < 1) errs.push_back("refresh_chunk: must be >= 1");
  const bool uses_threshold = c.constructor == Constructor::kThreshold || c.constructor == Constructor::kThresholdTopN ||
                              c.constructor == Constructor::kInterval;
  if (uses_threshold && !(c.threshold > 0.0 && c.threshold < 1.0)) errs.push_back("threshold: must lie in (0, 1)");
  if (c.constructor == Constructor::kInterval && c.n1 > c.n2) errs.push_back("n1: must be <= n2");
  if (c.constructor == Constructor::kInterval && c.n2 < 1) errs.push_back("n2: must be >= 1");
  if (c.warmup.strategy == Strategy::kStatic) {
    if (c.warmup.threshold_set.empty()) errs.push_back("static_set: must be non-empty");
    for (auto v : c.warmup.threshold_set)
      if (v < 0) errs.push_back("static_set: entries must be >= 0");
  }
  if (c.warmup.strategy != Strategy::kStatic && !(c.warmup.g > 0.0 && c.warmup.g < 1.0))
    errs.push_back("g: must lie in (0, 1)");
  if (c.warmup.strategy == Strategy::kHybrid && c.warmup.s < 1) errs.push_back("s: must be >= 1");
  std::set<std::string> seen;
  for (const auto& m : c.fusion_modalities)
    if (!seen.insert(m).second) errs.push_back("fusion_modalities: duplicate '" + m + "'");
  return errs;
}

[[noreturn]] void throw_problems(const std::vector<std::string>& errs) {
  std::string msg = "invalid config:";
  for (const auto& e : errs) msg += "\n  " + e;
  throw ConfigError(msg);
}

template <typename T>
bool on_grid(T value, std::initializer_list<T> grid) {
  for (auto g : grid)
    if (std::abs(static_cast<double>(value) - static_cast<double>(g)) < 1e-12) return true;
  return false;
}

}  // namespace

std::vector<std::string> off_grid_warnings(const RunConfig& c) {
  std::vector<std::string> w;
  if (!on_grid(c.lambda, {0.1, 0.2, 0.3, 0.4, 0.5})) w.push_back("lambda outside the searched grid {0.1..0.5}");
  if (!on_grid<std::size_t>(c.n, {1, 2, 4, 8})) w.push_back("n outside the searched grid {1,2,4,8}");
  if (c.warmup.strategy != Strategy::kStatic && !on_grid(c.warmup.g, {0.1, 0.2, 0.3, 0.4}))
    w.push_back("g outside the searched grid {0.1..0.4}");
  if (c.warmup.strategy == Strategy::kHybrid && !on_grid<std::size_t>(c.warmup.s, {1, 2, 3, 4, 5}))
    w.push_back("s outside the searched grid {1..5}");
  const bool uses_threshold = c.constructor == Constructor::kThreshold || c.constructor == Constructor::kThresholdTopN ||
                              c.constructor == Constructor::kInterval;
  if (uses_threshold && !on_grid(c.threshold, {0.5, 0.6, 0.7, 0.8, 0.9}))
    w.push_back("threshold outside the searched grid {0.5..0.9}");
  if (c.constructor == Constructor::kInterval && !on_grid<std::size_t>(c.n1, {0, 1, 2}))
    w.push_back("n1 outside the searched grid {0,1,2}");
  return w;
}

RunConfig config_from_json(const json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  std::vector<std::string> errs;
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) {
      errs.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->second(c, value);
    } catch (const ConfigError& e) {
      errs.push_back(e.what());
    }
  }
  for (auto& e : validation_problems(c)) errs.push_back(std::move(e));
  if (!errs.empty()) throw_problems(errs);
  if (warnings)
    for (auto& w : off_grid_warnings(c)) warnings->push_back(std::move(w));
  return c;
}

void validate_config(const RunConfig& config) {
  const auto errs = validation_problems(config);
  if (!errs.empty()) throw_problems(errs);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["embed_dim"] = c.embed_dim;
  j["layers"] = c.layers;
  j["lambda"] = c.lambda;
  j["n"] = c.n;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["mdvt"] = c.mdvt;
  j["fusion_modalities"] = c.fusion_modalities;
  j["constructor"] = to_string(c.constructor);
  j["threshold"] = c.threshold;
  j["n1"] = c.n1;
  j["n2"] = c.n2;
  j["include_seen"] = c.include_seen;
  j["virtual_per_user"] = c.virtual_per_user;
  j["refresh_chunk"] = c.refresh_chunk;
  j["wo_aggr"] = c.wo_aggr;
  j["wo_scale"] = c.wo_scale;
  j["norm"] = norm_name(c.norm);
  j["readout"] = readout_name(c.readout);
  j["score"] = score_name(c.score);
  j["strategy"] = to_string(c.warmup.strategy);
  j["static_set"] = c.warmup.threshold_set;
  j["g"] = c.warmup.g;
  j["s"] = c.warmup.s;
  return j;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(config_to_json(config).dump()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::size_t> resolve_fusion_mask(const RunConfig& config, const std::vector<std::string>& modalities) {
  std::vector<std::size_t> mask;
  if (config.fusion_modalities.empty()) {
    for (std::size_t m = 0; m < modalities.size(); ++m) mask.push_back(m);
    return mask;
  }
  for (const auto& name : config.fusion_modalities) {
    auto it = std::find(modalities.begin(), modalities.end(), name);
    if (it == modalities.end()) throw ConfigError("fusion_modalities: unknown modality '" + name + "'");
    mask.push_back(static_cast<std::size_t>(it - modalities.begin()));
  }
  std::sort(mask.begin(), mask.end());
  return mask;
}

}  // namespace mdvt

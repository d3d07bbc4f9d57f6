#include "mdvt/warmup.hpp"

#include <algorithm>
#include <cmath>

#include "mdvt/error.hpp"

namespace mdvt {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kStatic: return "static";
    case Strategy::kDynamic: return "dynamic";
    case Strategy::kHybrid: return "hybrid";
  }
  return "hybrid";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "static") return Strategy::kStatic;
  if (s == "dynamic") return Strategy::kDynamic;
  if (s == "hybrid") return Strategy::kHybrid;
  throw ConfigError("unknown strategy '" + s + "'");
}

std::optional<std::size_t> dynamic_trigger(std::span<const double> losses, double g) {
  if (!(g > 0.0 && g < 1.0)) throw ConfigError("g must lie in (0, 1)");
  for (double l : losses)
    if (!(l > 0.0)) throw TrainingError("dynamic_trigger: loss history must be positive");
  for (std::size_t t = 1; t < losses.size(); ++t) {
    const double rate = std::abs(losses[t - 1] - losses[t]) / losses[t - 1];
    if (rate < g) return t + 1;
  }
  return std::nullopt;
}

std::vector<std::size_t> static_candidates(std::span<const long long> threshold_set) {
  if (threshold_set.empty()) throw ConfigError("static threshold set is empty");
  std::vector<std::size_t> out;
  for (auto v : threshold_set) {
    if (v < 0) throw ConfigError("static threshold set has a negative entry");
    out.push_back(static_cast<std::size_t>(v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> hybrid_candidates(std::size_t current, std::size_t s) {
  const std::size_t lo = current >= s ? current - s : 0;
  std::vector<std::size_t> out;
  for (std::size_t c = lo; c <= current + s; ++c) out.push_back(c);
  return out;
}

void WarmupPlan::validate() const {
  if (strategy == Strategy::kStatic) (void)static_candidates(threshold_set);
  if (strategy != Strategy::kStatic && !(g > 0.0 && g < 1.0)) throw ConfigError("g must lie in (0, 1)");
  if (strategy == Strategy::kHybrid && s < 1) throw ConfigError("s must be >= 1");
}

WarmupGate WarmupGate::never() { return WarmupGate{}; }

WarmupGate WarmupGate::fixed(std::size_t warmup_epochs) {
  WarmupGate gate;
  gate.kind_ = Kind::kFixed;
  gate.trigger_ = warmup_epochs;
  return gate;
}

WarmupGate WarmupGate::dynamic(double g) {
  if (!(g > 0.0 && g < 1.0)) throw ConfigError("g must lie in (0, 1)");
  WarmupGate gate;
  gate.kind_ = Kind::kDynamic;
  gate.g_ = g;
  return gate;
}

bool WarmupGate::is_joint(std::size_t epoch, std::span<const double> losses) {
  switch (kind_) {
    case Kind::kNever: return false;
    case Kind::kFixed: return epoch >= *trigger_;
    case Kind::kDynamic:
      if (!trigger_) trigger_ = dynamic_trigger(losses, g_);  // latches once set
      return trigger_ && epoch >= *trigger_;
  }
  return false;
}

}  // namespace mdvt

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mdvt {

enum class Strategy { kStatic, kDynamic, kHybrid };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// First t >= 2 (1-based position in `losses`) whose relative loss change
/// |L[t-1] - L[t]| / L[t-1] is below g. That t equals the number of warm-up
/// epochs completed when the trigger fires.
std::optional<std::size_t> dynamic_trigger(std::span<const double> losses, double g);

/// Sorted, deduplicated static threshold set.
std::vector<std::size_t> static_candidates(std::span<const long long> threshold_set);

/// Integer range [max(0, current - s), current + s].
std::vector<std::size_t> hybrid_candidates(std::size_t current, std::size_t s);

struct WarmupPlan {
  Strategy strategy = Strategy::kHybrid;
  std::vector<long long> threshold_set{0, 5, 10, 20, 40, 80};
  double g = 0.1;
  std::size_t s = 2;
  std::optional<std::size_t> resolved_trigger;
  std::optional<std::size_t> dynamic_estimate;

  void validate() const;
};

/// Phase gate for a single run. Epoch indices are 0-based; the run is in
/// the joint phase at epoch e when e >= trigger, where trigger counts
/// warm-up epochs.
class WarmupGate {
 public:
  static WarmupGate never();
  static WarmupGate fixed(std::size_t warmup_epochs);
  static WarmupGate dynamic(double g);

  /// `losses` holds the total loss of every completed epoch before `epoch`.
  bool is_joint(std::size_t epoch, std::span<const double> losses);

  std::optional<std::size_t> trigger() const { return trigger_; }
  bool is_dynamic() const { return kind_ == Kind::kDynamic; }

 private:
  enum class Kind { kNever, kFixed, kDynamic };
  Kind kind_ = Kind::kNever;
  double g_ = 0.1;
  std::optional<std::size_t> trigger_;
};

}  // namespace mdvt

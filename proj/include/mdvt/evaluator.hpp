#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdvt/backbone.hpp"
#include "mdvt/dataset.hpp"

namespace mdvt {

/// Items by descending score (ties: ascending index) with `masked` (sorted)
/// removed.
std::vector<std::uint32_t> rank_items(std::span<const double> scores, std::span<const std::uint32_t> masked);

/// The first k entries of rank_items without sorting the tail.
std::vector<std::uint32_t> top_k_items(std::span<const double> scores, std::span<const std::uint32_t> masked,
                                       std::size_t k);

/// `relevant` must be sorted ascending and non-empty.
double recall_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k);
double ndcg_at_k(std::span<const std::uint32_t> ranked, std::span<const std::uint32_t> relevant, std::size_t k);

struct AtK {
  std::size_t k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  bool operator==(const AtK&) const = default;
};

struct UserMetrics {
  std::uint32_t user = 0;
  std::vector<AtK> at;
};

struct SparsityBucket {
  std::size_t lo = 0;
  std::optional<std::size_t> hi;  // inclusive; nullopt means unbounded
  std::size_t count = 0;
  std::vector<AtK> at;            // empty when count == 0
  std::string label() const;
  bool operator==(const SparsityBucket&) const = default;
};

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::vector<AtK> at;
  std::size_t num_users_evaluated = 0;
  std::vector<SparsityBucket> buckets;

  /// Metric value for cutoff k; throws if k was not evaluated.
  const AtK& metric(std::size_t k) const;
  bool operator==(const MetricsReport&) const = default;
};

/// Held-out relevance and masking for one evaluation split.
struct EvalTarget {
  std::vector<std::vector<std::uint32_t>> relevant;  // per user, sorted
  std::vector<std::vector<std::uint32_t>> masked;    // per user, sorted
  std::vector<std::uint32_t> users;                  // evaluated users, ascending
};

/// Users qualify when they have at least one held-out item and one train
/// interaction. `mask_sets` are the interaction lists hidden from ranking.
EvalTarget make_eval_target(std::size_t num_users, const std::vector<Interaction>& held_out,
                            std::span<const std::vector<Interaction>* const> mask_sets,
                            std::span<const std::uint32_t> user_train_count);

std::vector<UserMetrics> evaluate_users(const ScoreTables& tables, const EvalTarget& target,
                                        std::span<const std::size_t> ks);

inline const std::vector<std::size_t> kDefaultBucketEdges{1, 6, 11, 21};

/// Buckets users by train interaction count: [1-5], [6-10], [11-20], [21+].
MetricsReport sparsity_breakdown(const std::vector<UserMetrics>& per_user, std::span<const std::uint32_t> user_train_count,
                                 std::span<const std::size_t> ks);

MetricsReport evaluate(const Representations& reps, ScoreMode mode, const EvalTarget& target,
                       std::span<const std::uint32_t> user_train_count, std::span<const std::size_t> ks);

}  // namespace mdvt

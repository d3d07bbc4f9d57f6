#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdvt/dataset.hpp"
#include "mdvt/matrix.hpp"

namespace mdvt {

enum class Constructor { kTopN, kThreshold, kThresholdTopN, kInterval, kFreqF1, kFreqF2 };

std::string to_string(Constructor c);
Constructor constructor_from_string(const std::string& s);

struct Selection {
  std::vector<std::uint32_t> positives;
  std::vector<std::uint32_t> negatives;
  bool operator==(const Selection&) const = default;
};

/// Virtual positives/negatives for every user. Users that are not trainable
/// (no train interactions) have `present[u] == false`.
struct VirtualTripletSet {
  std::vector<Selection> groups;
  std::vector<bool> present;
  std::size_t built_at_epoch = 0;
  Constructor tag = Constructor::kTopN;

  const Selection* find(std::uint32_t user) const {
    return user < groups.size() && present[user] ? &groups[user] : nullptr;
  }
  bool operator==(const VirtualTripletSet&) const = default;
};

/// Cosine similarity of one user vector against every item row. Zero-norm
/// items map to 0; a zero-norm user is an error.
std::vector<double> cosine_row(std::span<const double> user, const Matrix& items);

/// `exclusion` must be sorted ascending; it removes candidates for positives
/// only. Ties are broken by ascending item index.
Selection select_topn(std::span<const double> row, std::size_t n, std::span<const std::uint32_t> exclusion);

Selection select_threshold(std::span<const double> row, double threshold, std::optional<std::size_t> cap,
                           std::optional<std::size_t> floor, std::span<const std::uint32_t> exclusion);

enum class FrequencyMode { kF1, kF2 };

Selection select_frequency(std::span<const double> row, std::size_t n, std::span<const std::uint32_t> item_counts,
                           FrequencyMode mode, std::span<const std::uint32_t> exclusion);

struct ForgeOptions {
  Constructor tag = Constructor::kTopN;
  std::size_t n = 2;
  double threshold = 0.9;
  std::size_t n1 = 1;
  std::size_t n2 = 4;
  bool include_seen = false;
  std::size_t chunk = 256;
};

/// Applies the configured selector to one similarity row.
Selection select_for_user(std::span<const double> row, const ForgeOptions& options,
                          std::span<const std::uint32_t> item_counts, std::span<const std::uint32_t> exclusion);

/// Rebuilds the virtual triplet set from fused representations for every
/// user with at least one train edge.
VirtualTripletSet refresh(const Matrix& fused_users, const Matrix& fused_items, const InteractionGraph& graph,
                          const PopularityTable& popularity, const ForgeOptions& options, std::size_t epoch);

/// Text dump: `user<TAB>pos:i1,i2<TAB>neg:j1,j2` per present user.
void write_virtual_triplets(std::ostream& out, const VirtualTripletSet& set);

}  // namespace mdvt

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mdvt/matrix.hpp"
#include "mdvt/rng.hpp"

namespace mdvt {

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  bool operator==(const Interaction&) const = default;
};

/// Raw-id to dense-index maps. Dense index k corresponds to names[k].
struct IdMap {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> index;

  std::uint32_t intern(const std::string& raw);
  std::size_t size() const { return names.size(); }
};

struct InteractionSet {
  std::vector<Interaction> records;
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  IdMap users;
  IdMap items;
  std::size_t duplicates_dropped = 0;
};

/// Parses `user<TAB>item` lines; ids are remapped in first-appearance order.
InteractionSet load_interactions(const std::filesystem::path& path);
InteractionSet parse_interactions(std::istream& in);

struct DatasetSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::uint64_t split_seed = 0;
  /// Users with no train record after splitting; kept for bookkeeping only.
  std::vector<std::uint32_t> users_without_train;
};

DatasetSplit split_dataset(const InteractionSet& set, std::uint64_t seed);

/// Bipartite graph in CSR form over the union vertex set: users occupy
/// vertices [0, num_users), item i is vertex num_users + i. Neighbor lists
/// are sorted ascending.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  InteractionGraph(std::size_t num_users, std::size_t num_items, const std::vector<Interaction>& edges);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t num_vertices() const { return num_users_ + num_items_; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }

  std::uint32_t item_vertex(std::uint32_t item) const { return static_cast<std::uint32_t>(num_users_ + item); }

  std::span<const std::uint32_t> neighbors(std::size_t vertex) const {
    return {neighbors_.data() + offsets_[vertex], offsets_[vertex + 1] - offsets_[vertex]};
  }
  std::size_t degree(std::size_t vertex) const { return offsets_[vertex + 1] - offsets_[vertex]; }

  /// Items adjacent to `user`, as item indices (not vertex ids), ascending.
  std::vector<std::uint32_t> user_items(std::uint32_t user) const;
  bool has_edge(std::uint32_t user, std::uint32_t item) const;

  std::vector<std::uint32_t> isolated_items() const;
  std::vector<std::uint32_t> isolated_users() const;

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> neighbors_;
};

InteractionGraph build_graph(std::size_t num_users, std::size_t num_items, const std::vector<Interaction>& train);

/// Rejection-samples an item the user has not interacted with in `graph`.
std::uint32_t sample_negative(std::uint32_t user, const InteractionGraph& graph, Rng& rng);

struct Triplet {
  std::uint32_t user = 0;
  std::uint32_t positive = 0;
  std::uint32_t negative = 0;
  bool operator==(const Triplet&) const = default;
};

using TripletBatch = std::vector<Triplet>;

/// One epoch of shuffled positives, each paired with a fresh negative.
/// `order_rng` drives the shuffle and `negative_rng` the negative draws.
std::vector<TripletBatch> make_batches(const std::vector<Interaction>& train, const InteractionGraph& graph,
                                       std::size_t batch_size, Rng& order_rng, Rng& negative_rng);

struct PopularityTable {
  std::vector<std::uint32_t> item_train_count;
  std::vector<std::uint32_t> user_train_count;
};

PopularityTable compute_popularity(std::size_t num_users, std::size_t num_items, const std::vector<Interaction>& train);

struct ModalityFeatures {
  std::string name;
  Matrix values;  // num_items x f_m
};

/// Modality list; "id" is always present and carries no feature matrix.
struct ModalityBundle {
  std::vector<std::string> names{"id"};
  std::vector<ModalityFeatures> features;

  const ModalityFeatures* find(const std::string& name) const;
};

}  // namespace mdvt

#pragma once

// Planted-group dataset: users and items belong to latent groups, every
// interaction stays within the user's group, and item features are the
// group centroid plus Gaussian noise.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mdvt/dataset.hpp"
#include "mdvt/rng.hpp"

namespace synth {

struct PlantedSpec {
  std::size_t users = 200;
  std::size_t items = 100;
  std::size_t groups = 4;
  std::size_t train_per_user = 3;
  std::size_t val_per_user = 1;
  std::size_t test_per_user = 1;
  std::vector<std::pair<std::string, std::size_t>> modalities{{"visual", 16}, {"textual", 24}};
  double noise = 0.5;
};

struct Planted {
  mdvt::DatasetSplit split;
  mdvt::ModalityBundle modalities;
  std::vector<std::size_t> user_group;
  std::vector<std::size_t> item_group;
};

inline Planted make_planted(const PlantedSpec& spec, std::uint64_t seed) {
  mdvt::Rng rng(mdvt::splitmix64(seed ^ 0x5eedULL));
  Planted p;
  p.item_group.resize(spec.items);
  for (std::size_t i = 0; i < spec.items; ++i) p.item_group[i] = i % spec.groups;
  std::vector<std::vector<std::uint32_t>> members(spec.groups);
  for (std::uint32_t i = 0; i < spec.items; ++i) members[p.item_group[i]].push_back(i);

  p.split.num_users = spec.users;
  p.split.num_items = spec.items;
  p.split.split_seed = seed;
  p.user_group.resize(spec.users);
  const std::size_t per_user = spec.train_per_user + spec.val_per_user + spec.test_per_user;
  for (std::uint32_t u = 0; u < spec.users; ++u) {
    p.user_group[u] = u % spec.groups;
    const auto& pool = members[p.user_group[u]];
    std::set<std::uint32_t> chosen;
    std::vector<std::uint32_t> order;
    while (order.size() < per_user) {
      const auto it = pool[rng.below(pool.size())];
      if (chosen.insert(it).second) order.push_back(it);
    }
    std::size_t k = 0;
    for (; k < spec.train_per_user; ++k) p.split.train.push_back({u, order[k]});
    for (; k < spec.train_per_user + spec.val_per_user; ++k) p.split.validation.push_back({u, order[k]});
    for (; k < per_user; ++k) p.split.test.push_back({u, order[k]});
  }

  for (const auto& [name, width] : spec.modalities) {
    mdvt::Matrix centroids(spec.groups, width);
    for (auto& x : centroids.data) x = rng.normal();
    mdvt::Matrix feats(spec.items, width);
    for (std::size_t i = 0; i < spec.items; ++i)
      for (std::size_t c = 0; c < width; ++c) feats.at(i, c) = centroids.at(p.item_group[i], c) + spec.noise * rng.normal();
    p.modalities.names.push_back(name);
    p.modalities.features.push_back({name, std::move(feats)});
  }
  return p;
}

inline std::vector<std::string> numbered(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

}  // namespace synth

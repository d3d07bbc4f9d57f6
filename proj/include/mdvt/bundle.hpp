#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdvt/dataset.hpp"

namespace mdvt {

struct ModalitySource {
  std::string name;
  std::filesystem::path features;
  std::filesystem::path sidecar;  // raw item id per feature row
};

struct PrepareInputs {
  std::filesystem::path interactions;
  std::vector<ModalitySource> modalities;
  std::filesystem::path out_dir;
  std::uint64_t seed = 2024;
};

struct DatasetStats {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t num_interactions = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  double sparsity = 0.0;
  std::size_t users_without_train = 0;
};

DatasetStats dataset_stats(const DatasetSplit& split);
nlohmann::json to_json(const DatasetStats& stats);

/// A prepared dataset directory: dense splits, id maps and validated features.
struct Bundle {
  DatasetSplit split;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  ModalityBundle modalities;
  std::uint64_t content_hash = 0;
  DatasetStats stats;
};

/// Writes manifest.json, users.txt, items.txt, {train,validation,test}.tsv and
/// features/<modality>.feat into `out_dir`. Returns the manifest.
nlohmann::json prepare_bundle(const PrepareInputs& inputs);

/// Writes an already-split dataset (used for synthetic data and tests).
nlohmann::json write_bundle(const std::filesystem::path& out_dir, const DatasetSplit& split,
                            const std::vector<std::string>& user_ids, const std::vector<std::string>& item_ids,
                            const ModalityBundle& modalities, std::size_t duplicates_dropped);

Bundle load_bundle(const std::filesystem::path& dir);

}  // namespace mdvt

#include "mdvt/bundle.hpp"

#include <fstream>
#include <sstream>

#include "mdvt/error.hpp"
#include "mdvt/feature_io.hpp"
#include "mdvt/rng.hpp"

namespace mdvt {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetStats dataset_stats(const DatasetSplit& split) {
  DatasetStats s;
  s.num_users = split.num_users;
  s.num_items = split.num_items;
  s.train = split.train.size();
  s.validation = split.validation.size();
  s.test = split.test.size();
  s.num_interactions = s.train + s.validation + s.test;
  s.sparsity = 1.0 - static_cast<double>(s.num_interactions) /
                         (static_cast<double>(s.num_users) * static_cast<double>(s.num_items));
  s.users_without_train = split.users_without_train.size();
  return s;
}

json to_json(const DatasetStats& s) {
  return {{"users", s.num_users},        {"items", s.num_items},
          {"interactions", s.num_interactions}, {"train", s.train},
          {"validation", s.validation},  {"test", s.test},
          {"sparsity", s.sparsity},      {"users_without_train", s.users_without_train}};
}

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

void write_pairs(const fs::path& path, const std::vector<Interaction>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << r.user << '\t' << r.item << '\n';
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("bundle: missing " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<Interaction> read_pairs(const fs::path& path, std::size_t num_users, std::size_t num_items) {
  std::vector<Interaction> records;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long u = -1, i = -1;
    if (!(ss >> u >> i) || u < 0 || i < 0 || static_cast<std::size_t>(u) >= num_users ||
        static_cast<std::size_t>(i) >= num_items)
      throw DataError(path.string() + ": bad record at line " + std::to_string(line_no));
    records.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(i)});
  }
  return records;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t hash_bundle_files(const fs::path& dir, const std::vector<std::string>& modalities) {
  std::uint64_t h = fnv1a64("mdvt-bundle");
  for (const char* name : {"users.txt", "items.txt", "train.tsv", "validation.tsv", "test.tsv"})
    h = fnv1a64(slurp(dir / name), h);
  for (const auto& m : modalities)
    if (m != "id") h = fnv1a64(slurp(dir / "features" / (m + ".feat")), h);
  return h;
}

}  // namespace

json write_bundle(const fs::path& out_dir, const DatasetSplit& split, const std::vector<std::string>& user_ids,
                  const std::vector<std::string>& item_ids, const ModalityBundle& modalities,
                  std::size_t duplicates_dropped) {
  fs::create_directories(out_dir / "features");
  write_lines(out_dir / "users.txt", user_ids);
  write_lines(out_dir / "items.txt", item_ids);
  write_pairs(out_dir / "train.tsv", split.train);
  write_pairs(out_dir / "validation.tsv", split.validation);
  write_pairs(out_dir / "test.tsv", split.test);
  for (const auto& f : modalities.features) save_feature_file(out_dir / "features" / (f.name + ".feat"), f.values);

  json manifest;
  manifest["format"] = "mdvt-bundle-1";
  manifest["split_seed"] = split.split_seed;
  manifest["modalities"] = modalities.names;
  manifest["stats"] = to_json(dataset_stats(split));
  manifest["duplicates_dropped"] = duplicates_dropped;
  manifest["users_without_train"] = split.users_without_train;
  manifest["content_hash"] = hash_bundle_files(out_dir, modalities.names);
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << '\n';
  return manifest;
}

json prepare_bundle(const PrepareInputs& inputs) {
  const auto set = load_interactions(inputs.interactions);
  auto split = split_dataset(set, inputs.seed);

  ModalityBundle modalities;
  for (const auto& src : inputs.modalities) {
    if (src.name == "id") throw ConfigError("modality 'id' is implicit and takes no feature file");
    for (const auto& existing : modalities.names)
      if (existing == src.name) throw ConfigError("duplicate modality '" + src.name + "'");
    if (!fs::exists(src.features)) throw DataError("missing feature file for modality '" + src.name + "': " + src.features.string());
    Matrix raw = read_feature_file(src.features);
    Matrix ordered = reorder_rows_by_sidecar(raw, src.sidecar, set.items);
    if (ordered.cols < 1) throw DataError(src.features.string() + ": zero feature columns");
    modalities.names.push_back(src.name);
    modalities.features.push_back({src.name, std::move(ordered)});
  }
  return write_bundle(inputs.out_dir, split, set.users.names, set.items.names, modalities, set.duplicates_dropped);
}

Bundle load_bundle(const fs::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw DataError("bundle: missing manifest.json in " + dir.string());
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw DataError(std::string("bundle: bad manifest: ") + e.what());
  }
  Bundle b;
  b.user_ids = read_lines(dir / "users.txt");
  b.item_ids = read_lines(dir / "items.txt");
  b.split.num_users = b.user_ids.size();
  b.split.num_items = b.item_ids.size();
  b.split.split_seed = manifest.value("split_seed", std::uint64_t{0});
  b.split.train = read_pairs(dir / "train.tsv", b.split.num_users, b.split.num_items);
  b.split.validation = read_pairs(dir / "validation.tsv", b.split.num_users, b.split.num_items);
  b.split.test = read_pairs(dir / "test.tsv", b.split.num_users, b.split.num_items);
  if (b.split.train.empty()) throw DataError("bundle: empty train split");
  std::vector<bool> has_train(b.split.num_users, false);
  for (const auto& r : b.split.train) has_train[r.user] = true;
  for (std::uint32_t u = 0; u < b.split.num_users; ++u)
    if (!has_train[u]) b.split.users_without_train.push_back(u);

  b.modalities.names = manifest.at("modalities").get<std::vector<std::string>>();
  for (const auto& name : b.modalities.names) {
    if (name == "id") continue;
    b.modalities.features.push_back(
        load_modality_features(dir / "features" / (name + ".feat"), name, b.split.num_items));
  }
  b.content_hash = hash_bundle_files(dir, b.modalities.names);
  b.stats = dataset_stats(b.split);
  return b;
}

}  // namespace mdvt

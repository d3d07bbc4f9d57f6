#include "mdvt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "mdvt/error.hpp"

namespace mdvt {

std::uint32_t IdMap::intern(const std::string& raw) {
  auto [it, inserted] = index.try_emplace(raw, static_cast<std::uint32_t>(names.size()));
  if (inserted) names.push_back(raw);
  return it->second;
}

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

InteractionSet parse_interactions(std::istream& in) {
  InteractionSet set;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim_cr(line);
    if (text.empty() || text.front() == '#') continue;
    const auto tab = text.find('\t');
    if (tab == std::string_view::npos || text.find('\t', tab + 1) != std::string_view::npos || tab == 0 ||
        tab + 1 == text.size()) {
      throw DataError("interactions: malformed line " + std::to_string(line_no) + ": expected user<TAB>item");
    }
    const auto u = set.users.intern(std::string(text.substr(0, tab)));
    const auto i = set.items.intern(std::string(text.substr(tab + 1)));
    const auto key = (static_cast<std::uint64_t>(u) << 32) | i;
    if (!seen.insert(key).second) {
      ++set.duplicates_dropped;
      continue;
    }
    set.records.push_back({u, i});
  }
  if (set.records.empty()) throw DataError("interactions: no records");
  set.num_users = set.users.size();
  set.num_items = set.items.size();
  return set;
}

InteractionSet load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("interactions: cannot open " + path.string());
  return parse_interactions(in);
}

DatasetSplit split_dataset(const InteractionSet& set, std::uint64_t seed) {
  const std::size_t n = set.records.size();
  if (n < 10) throw DataError("split: need at least 10 records, got " + std::to_string(n));
  std::vector<Interaction> shuffled = set.records;
  Rng rng(derive_seed(seed, Stream::kSplit));
  shuffle(shuffled, rng);

  const auto tenth = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  DatasetSplit split;
  split.num_users = set.num_users;
  split.num_items = set.num_items;
  split.split_seed = seed;
  split.test.assign(shuffled.begin(), shuffled.begin() + tenth);
  split.validation.assign(shuffled.begin() + tenth, shuffled.begin() + 2 * tenth);
  split.train.assign(shuffled.begin() + 2 * tenth, shuffled.end());

  std::vector<bool> has_train(set.num_users, false);
  for (const auto& r : split.train) has_train[r.user] = true;
  for (std::uint32_t u = 0; u < set.num_users; ++u)
    if (!has_train[u]) split.users_without_train.push_back(u);
  return split;
}

InteractionGraph::InteractionGraph(std::size_t num_users, std::size_t num_items, const std::vector<Interaction>& edges)
    : num_users_(num_users), num_items_(num_items) {
  const std::size_t nv = num_users + num_items;
  std::vector<std::size_t> deg(nv, 0);
  for (const auto& e : edges) {
    ++deg[e.user];
    ++deg[num_users + e.item];
  }
  offsets_.assign(nv + 1, 0);
  for (std::size_t v = 0; v < nv; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  neighbors_.resize(offsets_[nv]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges) {
    const auto iv = static_cast<std::uint32_t>(num_users + e.item);
    neighbors_[cursor[e.user]++] = iv;
    neighbors_[cursor[iv]++] = e.user;
  }
  for (std::size_t v = 0; v < nv; ++v)
    std::sort(neighbors_.begin() + offsets_[v], neighbors_.begin() + offsets_[v + 1]);
}

std::vector<std::uint32_t> InteractionGraph::user_items(std::uint32_t user) const {
  std::vector<std::uint32_t> out;
  for (auto v : neighbors(user)) out.push_back(static_cast<std::uint32_t>(v - num_users_));
  return out;
}

bool InteractionGraph::has_edge(std::uint32_t user, std::uint32_t item) const {
  const auto nb = neighbors(user);
  return std::binary_search(nb.begin(), nb.end(), item_vertex(item));
}

std::vector<std::uint32_t> InteractionGraph::isolated_items() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < num_items_; ++i)
    if (degree(num_users_ + i) == 0) out.push_back(i);
  return out;
}

std::vector<std::uint32_t> InteractionGraph::isolated_users() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t u = 0; u < num_users_; ++u)
    if (degree(u) == 0) out.push_back(u);
  return out;
}

InteractionGraph build_graph(std::size_t num_users, std::size_t num_items, const std::vector<Interaction>& train) {
  if (train.empty()) throw DataError("build_graph: empty train set");
  for (const auto& r : train)
    if (r.user >= num_users || r.item >= num_items) throw DataError("build_graph: index out of range");
  return InteractionGraph(num_users, num_items, train);
}

std::uint32_t sample_negative(std::uint32_t user, const InteractionGraph& graph, Rng& rng) {
  if (graph.degree(user) >= graph.num_items())
    throw DataError("sample_negative: user " + std::to_string(user) + " interacted with every item");
  for (;;) {
    const auto item = static_cast<std::uint32_t>(rng.below(graph.num_items()));
    if (!graph.has_edge(user, item)) return item;
  }
}

std::vector<TripletBatch> make_batches(const std::vector<Interaction>& train, const InteractionGraph& graph,
                                       std::size_t batch_size, Rng& order_rng, Rng& negative_rng) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::uint32_t> order(train.size());
  for (std::uint32_t k = 0; k < order.size(); ++k) order[k] = k;
  shuffle(order, order_rng);

  std::vector<TripletBatch> batches;
  batches.reserve((train.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    TripletBatch batch;
    batch.reserve(end - start);
    for (std::size_t k = start; k < end; ++k) {
      const auto& r = train[order[k]];
      batch.push_back({r.user, r.item, sample_negative(r.user, graph, negative_rng)});
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

PopularityTable compute_popularity(std::size_t num_users, std::size_t num_items, const std::vector<Interaction>& train) {
  PopularityTable table;
  table.item_train_count.assign(num_items, 0);
  table.user_train_count.assign(num_users, 0);
  for (const auto& r : train) {
    ++table.item_train_count[r.item];
    ++table.user_train_count[r.user];
  }
  return table;
}

const ModalityFeatures* ModalityBundle::find(const std::string& name) const {
  for (const auto& f : features)
    if (f.name == name) return &f;
  return nullptr;
}

}  // namespace mdvt

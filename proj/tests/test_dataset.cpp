#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mdvt/dataset.hpp"
#include "mdvt/error.hpp"
#include "mdvt/feature_io.hpp"

using namespace mdvt;

namespace {

InteractionSet parse(const std::string& text) {
  std::istringstream in(text);
  return parse_interactions(in);
}

InteractionSet numbered_set(std::size_t n) {
  std::string text;
  for (std::size_t k = 0; k < n; ++k) text += "u" + std::to_string(k % 3) + "\ti" + std::to_string(k) + "\n";
  return parse(text);
}

}  // namespace

TEST_CASE("load_interactions remaps in first-appearance order") {
  const auto set = parse("a\tx\na\ty\nb\tx\n");
  CHECK(set.num_users == 2);
  CHECK(set.num_items == 2);
  CHECK(set.records.size() == 3);
  CHECK(set.users.names == std::vector<std::string>{"a", "b"});
  CHECK(set.records[2] == Interaction{1, 0});
}

TEST_CASE("load_interactions drops duplicates and skips comments") {
  const auto set = parse("# header\na\tx\na\tx\n\n");
  CHECK(set.records.size() == 1);
  CHECK(set.duplicates_dropped == 1);
}

TEST_CASE("load_interactions rejects malformed lines with the line number") {
  CHECK_THROWS_WITH_AS(parse("a\n"), doctest::Contains("line 1"), DataError);
  CHECK_THROWS_WITH_AS(parse("a\tb\nc\td\te\n"), doctest::Contains("line 2"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(load_interactions("/nonexistent/file.tsv"), DataError);
}

TEST_CASE("id maps are invertible") {
  const auto set = parse("p\tq\nr\ts\np\ts\n");
  for (std::uint32_t k = 0; k < set.users.size(); ++k) CHECK(set.users.index.at(set.users.names[k]) == k);
  for (std::uint32_t k = 0; k < set.items.size(); ++k) CHECK(set.items.index.at(set.items.names[k]) == k);
}

TEST_CASE("split_dataset sizes, determinism and coverage") {
  SUBCASE("N=10 gives 8/1/1") {
    const auto split = split_dataset(numbered_set(10), 7);
    CHECK(split.train.size() == 8);
    CHECK(split.validation.size() == 1);
    CHECK(split.test.size() == 1);
  }
  SUBCASE("fixed seed is deterministic") {
    const auto set = numbered_set(20);
    const auto a = split_dataset(set, 11), b = split_dataset(set, 11);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
  }
  SUBCASE("N=9 is rejected") { CHECK_THROWS_AS(split_dataset(numbered_set(9), 1), DataError); }
  SUBCASE("partition is exact for many sizes") {
    for (std::size_t n = 10; n < 60; ++n) {
      const auto set = numbered_set(n);
      const auto split = split_dataset(set, n);
      std::multiset<std::pair<std::uint32_t, std::uint32_t>> all, parts;
      for (auto r : set.records) all.insert({r.user, r.item});
      for (const auto* part : {&split.train, &split.validation, &split.test})
        for (auto r : *part) parts.insert({r.user, r.item});
      CHECK(all == parts);
      const auto tenth = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
      CHECK(split.test.size() == tenth);
      CHECK(split.validation.size() == tenth);
    }
  }
}

TEST_CASE("split_dataset records users without train interactions") {
  // Ten users with one record each: two of them necessarily lose theirs.
  std::string text;
  for (int k = 0; k < 10; ++k) text += "u" + std::to_string(k) + "\ti\n";
  const auto split = split_dataset(parse(text), 3);
  CHECK(split.users_without_train.size() == 2);
}

TEST_CASE("build_graph degrees") {
  SUBCASE("single edge") {
    const auto g = build_graph(1, 1, {{0, 0}});
    CHECK(g.degree(0) == 1);
    CHECK(g.degree(g.item_vertex(0)) == 1);
  }
  SUBCASE("user with two items") {
    const auto g = build_graph(1, 2, {{0, 0}, {0, 1}});
    CHECK(g.degree(0) == 2);
  }
  SUBCASE("item with two users") {
    const auto g = build_graph(2, 1, {{0, 0}, {1, 0}});
    CHECK(g.degree(g.item_vertex(0)) == 2);
  }
  SUBCASE("bidirectional, bipartite, isolated items flagged") {
    const auto g = build_graph(2, 3, {{0, 0}, {1, 0}, {1, 2}});
    for (std::uint32_t u = 0; u < 2; ++u)
      for (auto v : g.neighbors(u)) {
        CHECK(v >= 2);
        const auto back = g.neighbors(v);
        CHECK(std::find(back.begin(), back.end(), u) != back.end());
      }
    CHECK(g.isolated_items() == std::vector<std::uint32_t>{1});
    CHECK(g.num_edges() == 3);
  }
  CHECK_THROWS_AS(build_graph(1, 1, {}), DataError);
}

TEST_CASE("sample_negative") {
  SUBCASE("forced choice") {
    const auto g = build_graph(1, 3, {{0, 0}, {0, 1}});
    Rng rng(5);
    for (int k = 0; k < 50; ++k) CHECK(sample_negative(0, g, rng) == 2);
  }
  SUBCASE("user saturated") {
    const auto g = build_graph(1, 3, {{0, 0}, {0, 1}, {0, 2}});
    Rng rng(5);
    CHECK_THROWS_AS(sample_negative(0, g, rng), DataError);
  }
  SUBCASE("uniform over free items") {
    // Binomial(1000, 0.5) has sd ~15.8; +/-100 is beyond six sigma.
    const auto g = build_graph(1, 4, {{0, 0}, {0, 2}});
    Rng rng(99);
    int ones = 0, threes = 0;
    for (int k = 0; k < 1000; ++k) {
      const auto i = sample_negative(0, g, rng);
      ones += i == 1;
      threes += i == 3;
    }
    CHECK(ones + threes == 1000);
    CHECK(std::abs(ones - 500) <= 100);
    CHECK(std::abs(threes - 500) <= 100);
  }
  SUBCASE("never returns an interacted item on random graphs") {
    Rng gen(1234);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t nu = 1 + gen.below(5), ni = 2 + gen.below(8);
      std::vector<Interaction> edges;
      for (std::uint32_t u = 0; u < nu; ++u) {
        std::set<std::uint32_t> items{static_cast<std::uint32_t>(gen.below(ni))};
        const auto extra = gen.below(ni - 1);
        for (std::uint64_t k = 0; k < extra; ++k) items.insert(static_cast<std::uint32_t>(gen.below(ni)));
        if (items.size() == ni) items.erase(items.begin());
        for (auto i : items) edges.push_back({u, i});
      }
      const auto g = build_graph(nu, ni, edges);
      Rng rng(trial);
      for (std::uint32_t u = 0; u < nu; ++u)
        for (int k = 0; k < 20; ++k) CHECK_FALSE(g.has_edge(u, sample_negative(u, g, rng)));
    }
  }
}

TEST_CASE("make_batches") {
  std::vector<Interaction> train{{0, 0}, {0, 1}, {1, 0}, {1, 2}, {2, 3}};
  const auto g = build_graph(3, 5, train);
  SUBCASE("sizes") {
    Rng a(1), b(2);
    const auto batches = make_batches(train, g, 2, a, b);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 2);
    CHECK(batches[1].size() == 2);
    CHECK(batches[2].size() == 1);
  }
  SUBCASE("one full batch") {
    std::vector<Interaction> big;
    for (std::uint32_t u = 0; u < 2048; ++u) big.push_back({u, 0});
    const auto gb = build_graph(2048, 2, big);
    Rng a(1), b(2);
    CHECK(make_batches(big, gb, 2048, a, b).size() == 1);
  }
  SUBCASE("deterministic and covers every record once with valid negatives") {
    Rng a1(3), b1(4), a2(3), b2(4);
    const auto x = make_batches(train, g, 2, a1, b1);
    const auto y = make_batches(train, g, 2, a2, b2);
    CHECK(x == y);
    std::multiset<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& batch : x)
      for (const auto& t : batch) {
        seen.insert({t.user, t.positive});
        CHECK(g.has_edge(t.user, t.positive));
        CHECK_FALSE(g.has_edge(t.user, t.negative));
      }
    std::multiset<std::pair<std::uint32_t, std::uint32_t>> expect;
    for (auto r : train) expect.insert({r.user, r.item});
    CHECK(seen == expect);
  }
  SUBCASE("zero batch size") {
    Rng a(1), b(2);
    CHECK_THROWS_AS(make_batches(train, g, 0, a, b), ConfigError);
  }
}

TEST_CASE("compute_popularity") {
  const auto p = compute_popularity(2, 3, {{0, 0}, {1, 0}});
  CHECK(p.item_train_count == std::vector<std::uint32_t>{2, 0, 0});
  CHECK(p.user_train_count == std::vector<std::uint32_t>{1, 1});
  const auto q = compute_popularity(1, 1, {{0, 0}});
  CHECK(q.user_train_count[0] == 1);
}

TEST_CASE("feature files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "mdvt_feature_test";
  fs::create_directories(dir);

  SUBCASE("round trip is bit exact for float32 values") {
    Matrix m(2, 2);
    m.data = {1.5, -0.25, 3.0, 1e-3f};
    save_feature_file(dir / "ok.feat", m);
    const auto back = load_modality_features(dir / "ok.feat", "visual", 2);
    CHECK(back.values == m);
  }
  SUBCASE("header layout") {
    Matrix m(3, 1, 2.0);
    save_feature_file(dir / "layout.feat", m);
    std::ifstream in(dir / "layout.feat", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 16 + 12);
    CHECK(bytes.substr(0, 8) == "MDVTFEAT");
    CHECK(static_cast<unsigned char>(bytes[8]) == 3);
    CHECK(static_cast<unsigned char>(bytes[12]) == 1);
    // 2.0f == 0x40000000 little-endian
    CHECK(static_cast<unsigned char>(bytes[19]) == 0x40);
  }
  SUBCASE("row count mismatch") {
    save_feature_file(dir / "rows.feat", Matrix(3, 2));
    CHECK_THROWS_AS(load_modality_features(dir / "rows.feat", "visual", 4), DataError);
  }
  SUBCASE("NaN is reported with its cell") {
    Matrix m(2, 2);
    m.at(0, 1) = std::nan("");
    save_feature_file(dir / "nan.feat", m);
    CHECK_THROWS_WITH_AS(load_modality_features(dir / "nan.feat", "visual", 2), doctest::Contains("(0,1)"), DataError);
  }
  SUBCASE("bad magic") {
    std::ofstream(dir / "bad.feat", std::ios::binary) << "NOTMAGIC\x01\0\0\0\x01\0\0\0";
    CHECK_THROWS_AS(load_modality_features(dir / "bad.feat", "visual", 1), DataError);
  }
  SUBCASE("sidecar reorders rows into dense item order") {
    Matrix raw(3, 1);
    raw.data = {10, 20, 30};
    std::ofstream(dir / "ids.txt") << "y\nunused\nx\n";
    IdMap items;
    items.intern("x");
    items.intern("y");
    const auto dense = reorder_rows_by_sidecar(raw, dir / "ids.txt", items);
    CHECK(dense.data == std::vector<double>{30, 10});
    std::ofstream(dir / "short.txt") << "y\nunused\nz\n";
    CHECK_THROWS_AS(reorder_rows_by_sidecar(raw, dir / "short.txt", items), DataError);
  }
  fs::remove_all(dir);
}

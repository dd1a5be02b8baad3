#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "pg2net/error.hpp"
#include "pg2net/graph/embedding_io.hpp"
#include "pg2net/graph/graph.hpp"
#include "pg2net/graph/node2vec.hpp"

using namespace pg2net;
using namespace pg2net::graph;

namespace {

data::Session session_of(std::vector<Index> locs, data::Split split = data::Split::kTrain,
                         std::vector<Index> cats = {}) {
  data::Session s;
  s.split = split;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    data::Visit v;
    v.location = locs[i];
    v.category = cats.empty() ? 0 : cats[i];
    s.visits.push_back(v);
  }
  return s;
}

data::Dataset dataset_with(std::size_t locations, std::size_t categories, std::vector<data::Session> sessions) {
  data::Dataset d;
  for (std::size_t i = 0; i < locations; ++i) d.vocab.locations.add("l" + std::to_string(i));
  for (std::size_t i = 0; i < categories; ++i) d.vocab.categories.add("c" + std::to_string(i));
  d.vocab.users.add("u");
  d.sessions = std::move(sessions);
  return d;
}

WalkConfig small_config() {
  WalkConfig c;
  c.walks_per_node = 4;
  c.walk_length = 12;
  c.embedding_dim = 8;
  c.epochs = 1;
  c.seed = 17;
  return c;
}

bool walks_valid(const TransitionGraph& g, const std::vector<Walk>& walks, std::size_t max_len) {
  for (const Walk& w : walks) {
    if (w.empty() || w.size() > max_len) return false;
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (!g.has_edge(w[i - 1], w[i])) return false;
    }
    // a walk shorter than the limit must have stopped at a sink
    if (w.size() < max_len && !g.out_edges(w.back()).empty()) return false;
  }
  return true;
}

TransitionGraph barbell(std::size_t clique) {
  TransitionGraph g(2 * clique);
  for (std::size_t side = 0; side < 2; ++side) {
    for (std::size_t i = 0; i < clique; ++i) {
      for (std::size_t j = 0; j < clique; ++j) {
        if (i != j) g.add_transition(static_cast<Index>(side * clique + i), static_cast<Index>(side * clique + j), 5);
      }
    }
  }
  g.add_transition(0, static_cast<Index>(clique));
  g.add_transition(static_cast<Index>(clique), 0);
  return g;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pg2net_graph_" + name);
}

}  // namespace

TEST_CASE("transition counts come from consecutive training visits only") {
  auto d = dataset_with(3, 2,
                        {session_of({0, 1, 0, 1}), session_of({2, 2}), session_of({1, 2}, data::Split::kTest)});
  const auto g = build_transition_graph(d, Level::kLocation);
  CHECK(g.node_count() == 3);
  CHECK(g.weight(0, 1) == 2);
  CHECK(g.weight(1, 0) == 1);
  CHECK(g.weight(2, 2) == 1);  // self loop kept
  CHECK(g.weight(1, 2) == 0);  // test session ignored
  CHECK(g.edge_count() == 3);
  const auto edges = g.out_edges(0);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].to == 1);
}

TEST_CASE("category graph skips unknown categories and needs categories") {
  auto d = dataset_with(3, 2, {session_of({0, 1, 2}, data::Split::kTrain, {0, data::kUnknown, 1})});
  const auto g = build_transition_graph(d, Level::kCategory);
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 0);
  d.mode = data::DatasetMode::kCdr;
  CHECK_THROWS_AS(build_transition_graph(d, Level::kCategory), DataError);
  CHECK(parse_level("category") == Level::kCategory);
  CHECK_THROWS_AS(parse_level("poi"), DataError);
}

TEST_CASE("edges are sorted by target regardless of insertion order") {
  TransitionGraph g(5);
  for (Index t : {4u, 1u, 3u, 1u, 0u}) g.add_transition(2, t);
  std::vector<Index> targets;
  for (const Edge& e : g.out_edges(2)) targets.push_back(e.to);
  CHECK(targets == std::vector<Index>{0, 1, 3, 4});
  CHECK(g.weight(2, 1) == 2);
  CHECK_THROWS_AS(g.add_transition(0, 9), DataError);
}

TEST_CASE("alias table reproduces normalized weights") {
  const std::vector<double> w{1.0, 0.0, 3.0, 6.0, 0.5};
  const AliasTable table(w);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(table.probability(i) == doctest::Approx(w[i] / total).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::vector<std::size_t> hits(w.size());
  const std::size_t draws = 200000;
  for (std::size_t k = 0; k < draws; ++k) ++hits[table.sample(rng)];
  CHECK(hits[1] == 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(static_cast<double>(hits[i]) / draws == doctest::Approx(w[i] / total).epsilon(0.02));
  }
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}), DataError);
}

TEST_CASE("nodes without out-edges start no walks and walks stop at sinks") {
  TransitionGraph g(4);  // 0 → 1 → 2, node 3 isolated
  g.add_transition(0, 1);
  g.add_transition(1, 2);
  auto c = small_config();
  const auto walks = node2vec_walks(g, c);
  CHECK(walks.size() == 2 * c.walks_per_node);
  for (const Walk& w : walks) {
    CHECK(w.front() != 3);
    CHECK(w.back() == 2);
    if (w.front() == 0) CHECK(w == Walk{0, 1, 2});
    if (w.front() == 1) CHECK(w == Walk{1, 2});
  }
}

TEST_CASE("unbiased first steps follow edge weights") {
  TransitionGraph g(4);
  g.add_transition(0, 1, 1);
  g.add_transition(0, 2, 3);
  g.add_transition(0, 3, 6);
  for (Index v = 1; v < 4; ++v) g.add_transition(v, 0);
  auto c = small_config();
  c.walks_per_node = 100000;
  c.walk_length = 2;
  const auto walks = node2vec_walks(g, c);
  std::map<Index, double> hits;
  double from_zero = 0;
  for (const Walk& w : walks) {
    if (w.front() != 0) continue;
    from_zero += 1;
    hits[w[1]] += 1;
  }
  REQUIRE(from_zero == 100000);
  CHECK(std::abs(hits[1] / from_zero - 0.1) < 0.02);
  CHECK(std::abs(hits[2] / from_zero - 0.3) < 0.02);
  CHECK(std::abs(hits[3] / from_zero - 0.6) < 0.02);
}

TEST_CASE("second-order steps match a counting oracle") {
  // 0 ↔ 1, 1 → 2, 0 → 2, 1 → 3. From (prev=0, cur=1): back to 0 costs 1/p,
  // 2 is a neighbour of 0 (weight 1), 3 is not (1/q).
  TransitionGraph g(4);
  g.add_transition(0, 1);
  g.add_transition(1, 0, 2);
  g.add_transition(1, 2);
  g.add_transition(0, 2);
  g.add_transition(1, 3, 3);
  g.add_transition(2, 0);
  g.add_transition(3, 0);
  auto c = small_config();
  c.p = 0.5;
  c.q = 4.0;
  c.walk_length = 3;
  c.walks_per_node = 60000;
  const auto walks = node2vec_walks(g, c);
  CHECK(walks_valid(g, walks, c.walk_length));

  std::map<Index, double> oracle{{0, 2.0 / c.p}, {2, 1.0}, {3, 3.0 / c.q}};
  const double z = oracle[0] + oracle[2] + oracle[3];
  std::map<Index, double> hits;
  double n = 0;
  for (const Walk& w : walks) {
    if (w.size() == 3 && w[0] == 0 && w[1] == 1) {
      hits[w[2]] += 1;
      n += 1;
    }
  }
  REQUIRE(n > 10000);
  for (auto [node, weight] : oracle) CHECK(std::abs(hits[node] / n - weight / z) < 0.01);
}

TEST_CASE("walks are valid and deterministic across worker counts") {
  const auto g = barbell(5);
  auto c = small_config();
  c.p = 2.0;
  c.q = 0.5;
  const auto one = node2vec_walks(g, c, 1);
  const auto three = node2vec_walks(g, c, 3);
  CHECK(walks_valid(g, one, c.walk_length));
  CHECK(one == three);
  CHECK(one == node2vec_walks(g, c, 1));
  c.seed = 18;
  CHECK(one != node2vec_walks(g, c, 1));
}

TEST_CASE("relabelling nodes relabels walks and graph") {
  // Walk seeds depend on node index, so compare structure, not walks.
  std::mt19937_64 rng(5);
  std::vector<std::pair<Index, Index>> transitions;
  for (int k = 0; k < 60; ++k) transitions.emplace_back(rng() % 8, rng() % 8);
  std::vector<Index> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TransitionGraph a(8), b(8);
  for (auto [x, y] : transitions) a.add_transition(x, y);
  std::reverse(transitions.begin(), transitions.end());
  for (auto [x, y] : transitions) b.add_transition(perm[x], perm[y]);
  CHECK(a.edge_count() == b.edge_count());
  for (Index x = 0; x < 8; ++x) {
    for (Index y = 0; y < 8; ++y) CHECK(a.weight(x, y) == b.weight(perm[x], perm[y]));
  }
}

TEST_CASE("skip-gram separates the two halves of a barbell graph") {
  const std::size_t clique = 6;
  const auto g = barbell(clique);
  WalkConfig c;
  c.walks_per_node = 20;
  c.walk_length = 20;
  c.embedding_dim = 16;
  c.epochs = 3;
  c.seed = 7;
  const auto table = train_skipgram(node2vec_walks(g, c), g.node_count(), c);
  CHECK(table.rows == 2 * clique);
  CHECK(table.dim == 16);
  CHECK(table.frozen);
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (std::size_t i = 0; i < 2 * clique; ++i) {
    for (std::size_t j = i + 1; j < 2 * clique; ++j) {
      const double s = cosine_similarity(table.row(i), table.row(j));
      if ((i < clique) == (j < clique)) {
        intra += s;
        ++ni;
      } else {
        inter += s;
        ++nx;
      }
    }
  }
  CHECK(intra / ni > inter / nx + 0.2);
  CHECK(train_skipgram(node2vec_walks(g, c), g.node_count(), c).checksum() == table.checksum());
}

TEST_CASE("skip-gram rejects walks that carry no context") {
  auto c = small_config();
  CHECK_THROWS_AS(train_skipgram({{0}, {1}}, 2, c), DataError);
  CHECK_THROWS_AS(train_skipgram({{0, 5}}, 2, c), DataError);
}

TEST_CASE("random tables are bounded and seeded") {
  const auto t = random_table(10, 4, 9);
  for (double v : t.values) CHECK(std::abs(v) <= 0.5 / 4);
  CHECK(t.checksum() == random_table(10, 4, 9).checksum());
  CHECK(t.checksum() != random_table(10, 4, 10).checksum());
}

TEST_CASE("walk configuration validation") {
  auto c = small_config();
  c.p = 0.0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = small_config();
  c.walk_length = 0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = small_config();
  auto d = small_config();
  CHECK(c.canonical() == d.canonical());
  d.q = 2.0;
  CHECK(c.canonical() != d.canonical());
}

TEST_CASE("embedding files round-trip and guard their vocabulary") {
  const auto path = temp_file("emb.bin").string();
  const auto table = random_table(3, 5, 1);
  EmbeddingHeader h;
  h.level = Level::kCategory;
  h.vocab_size = 3;
  h.dim = 5;
  h.seed = 1;
  h.config_digest = 42;
  h.vocab_digest = vocabulary_digest({"a", "b", "c"});
  write_embedding(path, table, h);

  EmbeddingHeader got;
  const auto back = read_embedding(path, Level::kCategory, h.vocab_digest, &got);
  CHECK(back.values == table.values);
  CHECK(got.config_digest == 42);
  CHECK(got.dim == 5);
  CHECK_THROWS_AS(read_embedding(path, Level::kCategory, vocabulary_digest({"a", "c", "b"})), DataError);
  CHECK_THROWS_AS(read_embedding(path, Level::kLocation, h.vocab_digest), DataError);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(read_embedding(path, Level::kCategory, h.vocab_digest), DataError);
  {
    std::ofstream(path, std::ios::binary) << "not an embedding";
  }
  CHECK_THROWS_AS(read_embedding(path, Level::kCategory, h.vocab_digest), DataError);
  std::filesystem::remove(path);
}

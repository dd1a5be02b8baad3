#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pg2net/graph/graph.hpp"

namespace pg2net::graph {

struct WalkConfig {
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 80;
  std::size_t window = 5;
  std::size_t negative_samples = 5;
  std::size_t embedding_dim = 500;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
  /// Canonical text of every field; hashed into embedding file headers.
  std::string canonical() const;
};

using Walk = std::vector<Index>;

/// Second-order biased walks. From (prev, cur) the next node x is drawn with
/// weight w(cur,x)·{1/p if x = prev; 1 if prev→x is an edge; 1/q otherwise}.
/// Nodes without out-edges start no walks; walks stop early at sinks.
/// Walk r of node n uses the seed derive_seed(seed, n, r), so output does not
/// depend on `workers`.
std::vector<Walk> node2vec_walks(const TransitionGraph& graph, const WalkConfig& config, std::size_t workers = 1);

/// Frozen [rows × dim] embedding matrix.
struct EmbeddingTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  bool frozen = true;

  std::span<const double> row(std::size_t i) const { return std::span(values).subspan(i * dim, dim); }
  std::uint64_t checksum() const;
};

/// Skip-gram with negative sampling over walk contexts (window each side,
/// negatives from the unigram^0.75 distribution, linearly decaying step).
EmbeddingTable train_skipgram(const std::vector<Walk>& walks, std::size_t node_count, const WalkConfig& config);

/// Uniform(−0.5/dim, 0.5/dim) table, the stand-in for ablations without
/// graph embedding.
EmbeddingTable random_table(std::size_t rows, std::size_t dim, std::uint64_t seed);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace pg2net::graph

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pg2net/data/dataset.hpp"

namespace pg2net::graph {

using data::Index;

enum class Level { kLocation, kCategory };

std::string to_string(Level level);
Level parse_level(const std::string& text);

struct Edge {
  Index to;
  std::uint64_t weight;
};

/// Directed graph whose edge weights count consecutive visits.
class TransitionGraph {
 public:
  explicit TransitionGraph(std::size_t node_count = 0) : adjacency_(node_count) {}

  void add_transition(Index from, Index to, std::uint64_t count = 1);

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const;
  /// Out-edges sorted by target index.
  std::span<const Edge> out_edges(Index node) const { return adjacency_.at(node); }
  std::uint64_t weight(Index from, Index to) const;  // 0 when absent
  bool has_edge(Index from, Index to) const { return weight(from, to) > 0; }

 private:
  std::vector<std::vector<Edge>> adjacency_;
};

/// Counts every within-session consecutive pair of training sessions (self
/// loops included). Every vocabulary entry of the level is a node.
TransitionGraph build_transition_graph(const data::Dataset& dataset, Level level);

/// Walker's alias method over non-negative weights; O(1) draws.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  bool empty() const { return prob_.empty(); }
  std::size_t sample(std::mt19937_64& rng) const;
  /// Probability mass assigned to outcome i (for tests).
  double probability(std::size_t i) const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace pg2net::graph

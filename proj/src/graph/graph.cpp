#include "pg2net/graph/graph.hpp"

#include <algorithm>
#include <numeric>

#include "pg2net/error.hpp"

namespace pg2net::graph {

std::string to_string(Level level) { return level == Level::kLocation ? "location" : "category"; }

Level parse_level(const std::string& text) {
  if (text == "location") return Level::kLocation;
  if (text == "category") return Level::kCategory;
  throw DataError("unknown graph level '" + text + "' (expected location or category)");
}

void TransitionGraph::add_transition(Index from, Index to, std::uint64_t count) {
  if (from >= adjacency_.size() || to >= adjacency_.size()) throw DataError("transition endpoint outside the vocabulary");
  auto& edges = adjacency_[from];
  auto it = std::lower_bound(edges.begin(), edges.end(), to, [](const Edge& e, Index t) { return e.to < t; });
  if (it != edges.end() && it->to == to) {
    it->weight += count;
  } else {
    edges.insert(it, Edge{to, count});
  }
}

std::size_t TransitionGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : adjacency_) n += e.size();
  return n;
}

std::uint64_t TransitionGraph::weight(Index from, Index to) const {
  const auto& edges = adjacency_.at(from);
  auto it = std::lower_bound(edges.begin(), edges.end(), to, [](const Edge& e, Index t) { return e.to < t; });
  return it != edges.end() && it->to == to ? it->weight : 0;
}

TransitionGraph build_transition_graph(const data::Dataset& dataset, Level level) {
  if (level == Level::kCategory && !dataset.has_categories()) throw DataError("category graph requested for a dataset without categories");
  const std::size_t n = level == Level::kLocation ? dataset.location_count() : dataset.category_count();
  TransitionGraph g(n);
  for (const data::Session* s : dataset.train_sessions()) {
    for (std::size_t k = 1; k < s->visits.size(); ++k) {
      const Index a = level == Level::kLocation ? s->visits[k - 1].location : s->visits[k - 1].category;
      const Index b = level == Level::kLocation ? s->visits[k].location : s->visits[k].category;
      if (a == data::kUnknown || b == data::kUnknown) continue;
      g.add_transition(a, b);
    }
  }
  return g;
}

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (n == 0 || !(total > 0.0)) throw DataError("alias table needs a positive total weight");
  prob_.resize(n);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) prob_[i] = 1.0;
  for (std::size_t i : small) prob_[i] = 1.0;
}

std::size_t AliasTable::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, prob_.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::size_t i = pick(rng);
  return coin(rng) < prob_[i] ? i : alias_[i];
}

double AliasTable::probability(std::size_t i) const {
  const double n = static_cast<double>(prob_.size());
  double p = prob_[i] / n;
  for (std::size_t j = 0; j < prob_.size(); ++j) {
    if (alias_[j] == i && prob_[j] < 1.0) p += (1.0 - prob_[j]) / n;
  }
  return p;
}

}  // namespace pg2net::graph

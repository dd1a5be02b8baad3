#include "pg2net/graph/node2vec.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "pg2net/digest.hpp"
#include "pg2net/error.hpp"

namespace pg2net::graph {
namespace {

/// Alias tables for the first step of a walk and for every (prev → cur) edge.
class TransitionSampler {
 public:
  TransitionSampler(const TransitionGraph& g, const WalkConfig& c) : graph_(g), second_order_(c.p != 1.0 || c.q != 1.0) {
    const std::size_t n = g.node_count();
    first_.resize(n);
    edge_offset_.assign(n + 1, 0);
    for (Index v = 0; v < n; ++v) {
      auto edges = g.out_edges(v);
      edge_offset_[v + 1] = edge_offset_[v] + edges.size();
      if (edges.empty()) continue;
      std::vector<double> w;
      for (const Edge& e : edges) w.push_back(static_cast<double>(e.weight));
      first_[v] = AliasTable(w);
    }
    if (!second_order_) return;
    biased_.resize(edge_offset_[n]);
    for (Index prev = 0; prev < n; ++prev) {
      auto edges = g.out_edges(prev);
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const Index cur = edges[k].to;
        auto next = g.out_edges(cur);
        if (next.empty()) continue;
        std::vector<double> w;
        for (const Edge& e : next) {
          double bias = 1.0 / c.q;
          if (e.to == prev) {
            bias = 1.0 / c.p;
          } else if (g.has_edge(prev, e.to)) {
            bias = 1.0;
          }
          w.push_back(static_cast<double>(e.weight) * bias);
        }
        biased_[edge_offset_[prev] + k] = AliasTable(w);
      }
    }
  }

  Index first_step(Index cur, std::mt19937_64& rng) const { return graph_.out_edges(cur)[first_[cur].sample(rng)].to; }

  Index next_step(Index prev, Index cur, std::mt19937_64& rng) const {
    if (!second_order_) return first_step(cur, rng);
    auto prev_edges = graph_.out_edges(prev);
    auto it = std::lower_bound(prev_edges.begin(), prev_edges.end(), cur, [](const Edge& e, Index t) { return e.to < t; });
    const std::size_t k = static_cast<std::size_t>(it - prev_edges.begin());
    return graph_.out_edges(cur)[biased_[edge_offset_[prev] + k].sample(rng)].to;
  }

 private:
  const TransitionGraph& graph_;
  bool second_order_;
  std::vector<AliasTable> first_;
  std::vector<std::size_t> edge_offset_;
  std::vector<AliasTable> biased_;
};

}  // namespace

void WalkConfig::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) throw DataError("node2vec p and q must be > 0");
  if (walks_per_node == 0 || walk_length == 0 || window == 0 || negative_samples == 0 || embedding_dim == 0 || epochs == 0) {
    throw DataError("node2vec counts (walks, length, window, negatives, dim, epochs) must be positive");
  }
  if (!(learning_rate > 0.0)) throw DataError("skip-gram learning rate must be > 0");
}

std::string WalkConfig::canonical() const {
  return fmt::format("p={};q={};walks={};length={};window={};negatives={};dim={};epochs={};lr={};seed={}", p, q,
                     walks_per_node, walk_length, window, negative_samples, embedding_dim, epochs, learning_rate, seed);
}

std::vector<Walk> node2vec_walks(const TransitionGraph& graph, const WalkConfig& config, std::size_t workers) {
  config.validate();
  if (graph.node_count() == 0) throw DataError("node2vec_walks: empty graph");
  const TransitionSampler sampler(graph, config);
  std::vector<Index> starts;
  for (Index v = 0; v < graph.node_count(); ++v) {
    if (!graph.out_edges(v).empty()) starts.push_back(v);
  }
  std::vector<Walk> walks(starts.size() * config.walks_per_node);
  auto generate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t slot = begin; slot < end; ++slot) {
      const std::size_t round = slot / starts.size();
      const Index start = starts[slot % starts.size()];
      std::mt19937_64 rng(derive_seed(config.seed, start, round));
      Walk& walk = walks[slot];
      walk.push_back(start);
      while (walk.size() < config.walk_length) {
        const Index cur = walk.back();
        if (graph.out_edges(cur).empty()) break;
        walk.push_back(walk.size() == 1 ? sampler.first_step(cur, rng) : sampler.next_step(walk[walk.size() - 2], cur, rng));
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, walks.size()));
  if (workers == 1) {
    generate(0, walks.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t per = (walks.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * per, end = std::min(walks.size(), begin + per);
      if (begin < end) pool.emplace_back(generate, begin, end);
    }
  }
  return walks;
}

std::uint64_t EmbeddingTable::checksum() const {
  return digest64(std::string_view(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double)));
}

EmbeddingTable random_table(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(dim), 0.5 / static_cast<double>(dim));
  EmbeddingTable t{rows, dim, std::vector<double>(rows * dim), true};
  for (double& v : t.values) v = init(rng);
  return t;
}

EmbeddingTable train_skipgram(const std::vector<Walk>& walks, std::size_t node_count, const WalkConfig& config) {
  config.validate();
  bool any_pair = false;
  std::vector<double> frequency(node_count, 0.0);
  std::size_t total_positions = 0;
  for (const Walk& w : walks) {
    any_pair = any_pair || w.size() >= 2;
    for (Index v : w) {
      if (v >= node_count) throw DataError(fmt::format("walk node {} outside vocabulary of {}", v, node_count));
      frequency[v] += 1.0;
    }
    total_positions += w.size();
  }
  if (!any_pair) throw DataError("skip-gram needs at least one walk of length >= 2");

  const std::size_t dim = config.embedding_dim;
  EmbeddingTable input = random_table(node_count, dim, derive_seed(config.seed, 0x5eed));
  input.frozen = false;
  std::vector<double> output(node_count * dim, 0.0);
  for (double& f : frequency) f = std::pow(f, 0.75);
  const AliasTable negatives(frequency);
  std::mt19937_64 rng(derive_seed(config.seed, 0x6e6567));

  std::vector<double> hidden_grad(dim);
  const double total_steps = static_cast<double>(total_positions * config.epochs);
  std::size_t processed = 0;
  auto sgd_pair = [&](Index center, Index target, double label, double lr) {
    double* in = input.values.data() + static_cast<std::size_t>(center) * dim;
    double* out = output.data() + static_cast<std::size_t>(target) * dim;
    double score = 0.0;
    for (std::size_t d = 0; d < dim; ++d) score += in[d] * out[d];
    const double g = lr * (label - 1.0 / (1.0 + std::exp(-std::clamp(score, -30.0, 30.0))));
    for (std::size_t d = 0; d < dim; ++d) {
      hidden_grad[d] += g * out[d];
      out[d] += g * in[d];
    }
  };
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const Walk& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, ++processed) {
        const double lr = config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(processed) / total_steps);
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + config.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          std::fill(hidden_grad.begin(), hidden_grad.end(), 0.0);
          sgd_pair(walk[i], walk[j], 1.0, lr);
          for (std::size_t k = 0; k < config.negative_samples; ++k) {
            const auto neg = static_cast<Index>(negatives.sample(rng));
            if (neg == walk[j]) continue;
            sgd_pair(walk[i], neg, 0.0, lr);
          }
          double* in = input.values.data() + static_cast<std::size_t>(walk[i]) * dim;
          for (std::size_t d = 0; d < dim; ++d) in[d] += hidden_grad[d];
        }
      }
    }
  }
  input.frozen = true;
  return input;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace pg2net::graph

#include "pg2net/train/markov.hpp"

namespace pg2net::train {
namespace {

void normalize(std::map<Index, double>& m) {
  double total = 0.0;
  for (const auto& [k, v] : m) total += v;
  for (auto& [k, v] : m) v /= total;
}

}  // namespace

const std::map<Index, double>& MarkovModel::row(Index current) const {
  static const std::map<Index, double> empty;
  return current < rows_.size() ? rows_[current] : empty;
}

double MarkovModel::probability(Index current, Index next) const {
  const auto& r = row(current);
  auto it = r.find(next);
  return it == r.end() ? 0.0 : it->second;
}

std::vector<double> MarkovModel::scores(Index user, Index current) const {
  const std::map<Index, double>* source = &row(current);
  if (source->empty() && user < user_frequency_.size()) source = &user_frequency_[user];
  if (source->empty()) return global_;
  std::vector<double> s(global_.size(), 0.0);
  for (const auto& [k, v] : *source) s[k] = v;
  return s;
}

MarkovModel fit_markov(const data::Dataset& dataset) {
  MarkovModel m;
  const std::size_t L = dataset.location_count();
  m.rows_.resize(L);
  m.user_frequency_.resize(dataset.user_count());
  m.global_.assign(L, 0.0);
  double total = 0.0;
  for (const data::Session* s : dataset.train_sessions()) {
    for (std::size_t k = 0; k < s->visits.size(); ++k) {
      const Index cur = s->visits[k].location;
      if (cur == data::kUnknown) continue;
      m.user_frequency_[s->user][cur] += 1.0;
      m.global_[cur] += 1.0;
      total += 1.0;
      if (k > 0 && s->visits[k - 1].location != data::kUnknown) m.rows_[s->visits[k - 1].location][cur] += 1.0;
    }
  }
  for (auto& r : m.rows_) normalize(r);
  for (auto& r : m.user_frequency_) normalize(r);
  if (total > 0.0) {
    for (double& g : m.global_) g /= total;
  }
  return m;
}

std::vector<QueryRecord> evaluate_markov(const MarkovModel& markov, const std::vector<data::QueryGroup>& groups) {
  std::vector<QueryRecord> out;
  for (const auto& g : groups) {
    for (std::size_t k : g.target_positions) {
      QueryRecord q;
      q.user = g.user;
      q.session = g.session;
      q.position = k;
      q.target = g.visits[k].location;
      const auto s = markov.scores(g.user, g.visits[k - 1].location);
      q.predicted = top1(s);
      if (q.target != data::kUnknown) {
        q.rank = rank_target(s, q.target);
      }
      out.push_back(q);
    }
  }
  return out;
}

}  // namespace pg2net::train

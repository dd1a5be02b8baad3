#pragma once

#include <map>
#include <vector>

#include "pg2net/data/dataset.hpp"
#include "pg2net/data/queries.hpp"
#include "pg2net/train/metrics.hpp"

namespace pg2net::train {

/// First-order transition model over training sessions.
class MarkovModel {
 public:
  std::size_t location_count() const { return global_.size(); }
  /// P(next | current); empty when the row was never observed.
  const std::map<Index, double>& row(Index current) const;
  double probability(Index current, Index next) const;
  /// Scores for the next location after `current`: the transition row, else
  /// the user's visit frequencies, else global visit frequencies.
  std::vector<double> scores(Index user, Index current) const;

 private:
  friend MarkovModel fit_markov(const data::Dataset& dataset);
  std::vector<std::map<Index, double>> rows_;
  std::vector<std::map<Index, double>> user_frequency_;
  std::vector<double> global_;
};

MarkovModel fit_markov(const data::Dataset& dataset);

/// Ranks every sample of every group against the model's scores.
std::vector<QueryRecord> evaluate_markov(const MarkovModel& markov, const std::vector<data::QueryGroup>& groups);

}  // namespace pg2net::train

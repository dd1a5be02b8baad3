#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pg2net/data/queries.hpp"
#include "pg2net/model/model.hpp"
#include "pg2net/priors/priors.hpp"
#include "pg2net/train/metrics.hpp"

namespace pg2net::train {

/// Share of each preference part in the prediction logits: per query
/// ‖W_p[:, block]·x‖₁ over the sum across parts, averaged over queries. This
/// column-block L1 attribution is one choice among several; shares sum to 1.
std::vector<std::pair<std::string, double>> weight_proportions(const model::Pg2NetModel& model,
                                                               const std::vector<data::QueryGroup>& groups);

struct DistanceHistogram {
  std::vector<double> edges;  // bins [e_i, e_{i+1}); the last bin is open-ended
  std::vector<double> actual;
  std::vector<double> predicted;
};

/// Distances from the current location to the true next location and to the
/// top-1 prediction, binned and normalized to proportions.
DistanceHistogram distance_distribution(const std::vector<data::QueryGroup>& groups,
                                        const std::vector<QueryRecord>& records, const priors::GeoTable& geo,
                                        const std::vector<double>& edges);

std::vector<double> default_distance_edges();

/// Columns bin_low,bin_high,actual_prop,predicted_prop.
std::string to_csv(const DistanceHistogram& h);

}  // namespace pg2net::train

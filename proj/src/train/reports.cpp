#include "pg2net/train/reports.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "pg2net/error.hpp"

namespace pg2net::train {

std::vector<std::pair<std::string, double>> weight_proportions(const model::Pg2NetModel& model,
                                                               const std::vector<data::QueryGroup>& groups) {
  std::vector<model::ConcatBlock> parts;
  for (const auto& b : model.concat_layout()) {
    if (b.part != "V_u") parts.push_back(b);
  }
  const auto W = model.prediction.data();
  const std::size_t rows = model.prediction.dim(0), cols = model.prediction.dim(1);
  std::vector<double> shares(parts.size(), 0.0);
  std::size_t queries = 0;
  for (const auto& g : groups) {
    numeric::Tape tape(false);
    const auto out = model.forward(tape, g, true);
    for (const auto& s : out.samples) {
      const auto& d = *s.details;
      std::vector<double> norms;
      for (const auto& b : parts) {
        const numeric::Tensor& x = b.part == "P_u" ? d.personal : b.part == "P_L" ? d.long_term : d.short_term;
        double l1 = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (std::size_t c = b.begin; c < b.end; ++c) acc += W[r * cols + c] * x.at(c - b.begin);
          l1 += std::abs(acc);
        }
        norms.push_back(l1);
      }
      double total = 0.0;
      for (double n : norms) total += n;
      for (std::size_t i = 0; i < parts.size(); ++i) shares[i] += total > 0.0 ? norms[i] / total : 1.0 / static_cast<double>(parts.size());
      ++queries;
    }
  }
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < parts.size(); ++i) out.emplace_back(parts[i].part, queries ? shares[i] / static_cast<double>(queries) : 0.0);
  return out;
}

std::vector<double> default_distance_edges() { return {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0}; }

DistanceHistogram distance_distribution(const std::vector<data::QueryGroup>& groups,
                                        const std::vector<QueryRecord>& records, const priors::GeoTable& geo,
                                        const std::vector<double>& edges) {
  if (edges.empty() || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw DataError("distance bin edges must be strictly increasing");
  }
  std::map<std::size_t, const data::QueryGroup*> by_session;
  for (const auto& g : groups) by_session[g.session] = &g;
  DistanceHistogram h{edges, std::vector<double>(edges.size(), 0.0), std::vector<double>(edges.size(), 0.0)};
  auto bin = [&](double d) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), d);
    return it == edges.begin() ? std::size_t{0} : static_cast<std::size_t>(it - edges.begin()) - 1;
  };
  std::size_t n = 0;
  for (const auto& q : records) {
    auto it = by_session.find(q.session);
    if (it == by_session.end() || q.position == 0 || q.position >= it->second->visits.size()) {
      throw DataError(fmt::format("record (session {}, position {}) has no matching query", q.session, q.position));
    }
    const auto& visits = it->second->visits;
    const priors::Coord here = geo.of(visits[q.position - 1]);
    h.actual[bin(priors::haversine_km(here, geo.of(visits[q.position])))] += 1.0;
    h.predicted[bin(priors::haversine_km(here, geo.at(q.predicted)))] += 1.0;
    ++n;
  }
  if (n > 0) {
    for (double& v : h.actual) v /= static_cast<double>(n);
    for (double& v : h.predicted) v /= static_cast<double>(n);
  }
  return h;
}

std::string to_csv(const DistanceHistogram& h) {
  std::string out = "bin_low,bin_high,actual_prop,predicted_prop\n";
  for (std::size_t i = 0; i < h.edges.size(); ++i) {
    const std::string high = i + 1 < h.edges.size() ? fmt::format("{}", h.edges[i + 1]) : "inf";
    out += fmt::format("{},{},{:.17g},{:.17g}\n", h.edges[i], high, h.actual[i], h.predicted[i]);
  }
  return out;
}

}  // namespace pg2net::train

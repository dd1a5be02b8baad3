#include "pg2net/data/queries.hpp"

namespace pg2net::data {

std::vector<QueryGroup> build_query_groups(const Dataset& dataset, Split split, const QueryOptions& options) {
  std::vector<QueryGroup> groups;
  const auto& sessions = dataset.sessions;
  for (std::size_t begin = 0; begin < sessions.size();) {
    std::size_t end = begin;
    while (end < sessions.size() && sessions[end].user == sessions[begin].user) ++end;
    for (std::size_t i = begin; i < end; ++i) {
      const Session& current = sessions[i];
      if (current.split != split || current.visits.size() < 2) continue;
      QueryGroup g;
      g.user = current.user;
      g.session = i;
      for (std::size_t j = begin; j < i; ++j) {
        const Session& earlier = sessions[j];
        const bool usable = earlier.split == Split::kTrain ||
                            (split == Split::kTest && options.test_history_includes_test);
        if (usable) g.history.insert(g.history.end(), earlier.visits.begin(), earlier.visits.end());
      }
      if (g.history.empty()) continue;
      g.visits = current.visits;
      for (std::size_t k = 1; k < current.visits.size(); ++k) g.target_positions.push_back(k);
      groups.push_back(std::move(g));
    }
    begin = end;
  }
  return groups;
}

std::vector<QuerySample> expand(const QueryGroup& group) {
  std::vector<QuerySample> out;
  for (std::size_t k : group.target_positions) {
    QuerySample q;
    q.user = group.user;
    q.session = group.session;
    q.history = group.history;
    q.recent.assign(group.visits.begin(), group.visits.begin() + static_cast<std::ptrdiff_t>(k));
    q.target = group.visits[k];
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QuerySample> build_queries(const Dataset& dataset, Split split, const QueryOptions& options) {
  std::vector<QuerySample> out;
  for (const QueryGroup& g : build_query_groups(dataset, split, options)) {
    auto samples = expand(g);
    std::move(samples.begin(), samples.end(), std::back_inserter(out));
  }
  return out;
}

std::size_t sample_count(const std::vector<QueryGroup>& groups) {
  std::size_t n = 0;
  for (const QueryGroup& g : groups) n += g.sample_count();
  return n;
}

}  // namespace pg2net::data

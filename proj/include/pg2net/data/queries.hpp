#pragma once

#include <cstddef>
#include <vector>

#include "pg2net/data/dataset.hpp"

namespace pg2net::data {

/// One prediction instance: given history and the recent prefix, predict
/// the visit that follows the prefix.
struct QuerySample {
  Index user = 0;
  std::size_t session = 0;  // index into Dataset::sessions
  std::vector<Visit> history;
  std::vector<Visit> recent;
  Visit target;
};

/// All samples drawn from one session share the history and the session's
/// visits; sample k has recent = visits[0, k) and target visits[k], for
/// k in target_positions.
struct QueryGroup {
  Index user = 0;
  std::size_t session = 0;
  std::vector<Visit> history;
  std::vector<Visit> visits;
  std::vector<std::size_t> target_positions;

  std::size_t sample_count() const { return target_positions.size(); }
};

struct QueryOptions {
  /// Whether test histories may include earlier test sessions.
  bool test_history_includes_test = true;
};

/// Training groups come from training sessions with training-only history;
/// test groups come from test sessions. A user's first session (empty
/// history) yields nothing.
std::vector<QueryGroup> build_query_groups(const Dataset& dataset, Split split, const QueryOptions& options = {});

std::vector<QuerySample> expand(const QueryGroup& group);
std::vector<QuerySample> build_queries(const Dataset& dataset, Split split, const QueryOptions& options = {});

std::size_t sample_count(const std::vector<QueryGroup>& groups);

}  // namespace pg2net::data

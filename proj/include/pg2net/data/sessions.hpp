#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pg2net/data/records.hpp"

namespace pg2net::data {

struct SessionizeOptions {
  std::int64_t merge_gap_seconds = 10 * 60;
  std::int64_t window_seconds = 3 * 24 * 3600;
  std::size_t min_length = 5;
  std::size_t max_length = 10;
  std::size_t min_sessions = 5;
  std::size_t max_sessions = 10;
};

/// A sub-trajectory of one user before vocabulary indexing.
struct RawSession {
  std::string user_id;
  std::vector<CheckinRecord> records;
  std::size_t window = 0;  // ordinal of the 3-day window it came from
};

/// Sessionizes one user's chronologically sorted records:
///  1. a record closer than merge_gap to the last kept record is merged into
///     it (the earlier record survives);
///  2. records are cut into windows of window_seconds; the first window starts
///     at the user's first record, each later one at the first record not
///     covered by its predecessor;
///  3. windows longer than max_length are split greedily into chunks of
///     max_length and chunks shorter than min_length are dropped;
///  4. only the max_sessions most recent sessions are kept, never keeping a
///     window without its first chunk; users left with fewer than
///     min_sessions sessions yield nothing.
std::vector<RawSession> sessionize_user(std::span<const CheckinRecord> records, const SessionizeOptions& options = {});

/// Applies sessionize_user per user; output ordered by user id then time.
std::vector<RawSession> sessionize(const std::vector<CheckinRecord>& records, const SessionizeOptions& options = {});

enum class Split { kTrain, kTest };

struct SplitAssignment {
  std::size_t train_count = 0;  // first train_count sessions are training
  std::size_t test_count = 0;
};

/// Chronological split of one user's sessions: the first ⌈fraction·n⌉ are
/// training, the rest test; an empty test remainder takes the last session.
SplitAssignment split_train_test(std::size_t session_count, double train_fraction = 0.8);

}  // namespace pg2net::data

#include "pg2net/data/sessions.hpp"

#include <algorithm>
#include <cmath>

#include "pg2net/error.hpp"

namespace pg2net::data {

std::vector<RawSession> sessionize_user(std::span<const CheckinRecord> records, const SessionizeOptions& options) {
  if (records.empty()) return {};
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].utc_seconds < records[i - 1].utc_seconds) throw DataError("sessionize: records of user '" + records[0].user_id + "' are not time-sorted");
  }

  std::vector<CheckinRecord> kept;
  for (const CheckinRecord& r : records) {
    if (!kept.empty() && r.utc_seconds - kept.back().utc_seconds < options.merge_gap_seconds) continue;
    kept.push_back(r);
  }

  struct Chunk {
    std::size_t window;
    std::size_t index_in_window;
    std::vector<CheckinRecord> records;
  };
  std::vector<Chunk> chunks;
  std::size_t window = 0;
  for (std::size_t begin = 0; begin < kept.size(); ++window) {
    const std::int64_t end_time = kept[begin].utc_seconds + options.window_seconds;
    std::size_t end = begin;
    while (end < kept.size() && kept[end].utc_seconds < end_time) ++end;
    std::size_t chunk_index = 0;
    for (std::size_t c = begin; c < end; c += options.max_length, ++chunk_index) {
      const std::size_t stop = std::min(end, c + options.max_length);
      if (stop - c < options.min_length) continue;
      chunks.push_back({window, chunk_index, {kept.begin() + c, kept.begin() + stop}});
    }
    begin = end;
  }

  std::size_t first = chunks.size() > options.max_sessions ? chunks.size() - options.max_sessions : 0;
  while (first < chunks.size() && chunks[first].index_in_window != 0) ++first;
  if (chunks.size() - first < options.min_sessions) return {};

  std::vector<RawSession> sessions;
  for (std::size_t i = first; i < chunks.size(); ++i) {
    sessions.push_back({records[0].user_id, std::move(chunks[i].records), chunks[i].window});
  }
  return sessions;
}

std::vector<RawSession> sessionize(const std::vector<CheckinRecord>& records, const SessionizeOptions& options) {
  std::vector<CheckinRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CheckinRecord& a, const CheckinRecord& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.utc_seconds < b.utc_seconds;
  });
  std::vector<RawSession> out;
  for (std::size_t begin = 0; begin < sorted.size();) {
    std::size_t end = begin;
    while (end < sorted.size() && sorted[end].user_id == sorted[begin].user_id) ++end;
    auto user_sessions = sessionize_user(std::span(sorted).subspan(begin, end - begin), options);
    std::move(user_sessions.begin(), user_sessions.end(), std::back_inserter(out));
    begin = end;
  }
  return out;
}

SplitAssignment split_train_test(std::size_t session_count, double train_fraction) {
  if (session_count == 0) return {};
  auto train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(session_count) - 1e-9));
  train = std::min(train, session_count);
  if (train == session_count) train = session_count - 1;
  return {train, session_count - train};
}

}  // namespace pg2net::data

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pg2net::data {

enum class DatasetMode { kCheckin, kCdr };

std::string to_string(DatasetMode mode);
DatasetMode parse_mode(const std::string& text);

/// One raw visit event. `local_seconds` is the local civil time expressed as
/// seconds since 1970-01-01T00:00 (no zone); `utc_seconds` is the absolute
/// instant used for ordering and gaps.
struct CheckinRecord {
  std::string user_id;
  std::string location_id;
  std::optional<std::string> category_id;  // present iff check-in mode
  double latitude = 0.0;
  double longitude = 0.0;
  std::int64_t utc_seconds = 0;
  std::int64_t local_seconds = 0;
};

struct ParseOptions {
  DatasetMode mode = DatasetMode::kCheckin;
  char delimiter = ',';
  bool header = false;
  double max_malformed_fraction = 0.01;
};

struct ParseResult {
  std::vector<CheckinRecord> records;  // grouped by user id, chronological within a user
  std::size_t total_lines = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based line numbers
  std::vector<std::string> warnings;
};

/// Reads a check-in or CDR file. Check-in columns: user_id, location_id,
/// category_id, category_name, latitude, longitude, tz_offset_minutes,
/// utc_timestamp. CDR columns: user_id, cell_id, latitude, longitude,
/// local_timestamp. Throws DataError for a bad header or when more than
/// max_malformed_fraction of the data lines are malformed.
ParseResult parse_records(std::istream& in, const ParseOptions& options);
ParseResult parse_records(const std::string& path, const ParseOptions& options);

/// Accepts unix seconds, "YYYY-MM-DD[ T]HH:MM:SS[Z]" and the Foursquare dump
/// form "Tue Apr 03 18:00:09 +0000 2012". Returns seconds since the epoch of
/// the civil time written (any "+hhmm" offset is applied to yield UTC).
std::optional<std::int64_t> parse_timestamp(const std::string& text);

/// Hour-of-week slot: weekday hour h → h, Saturday/Sunday hour h → 24 + h.
int slot_of(std::int64_t local_seconds);

inline constexpr int kSlotCount = 48;

/// Drops every user with fewer than `min_records` records.
std::vector<CheckinRecord> filter_users(std::vector<CheckinRecord> records, std::size_t min_records = 10);

}  // namespace pg2net::data

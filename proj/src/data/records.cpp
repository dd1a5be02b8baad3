#include "pg2net/data/records.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pg2net/error.hpp"

namespace pg2net::data {
namespace {

constexpr std::int64_t kDay = 86400;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> civil_seconds(int y, int mo, int d, int h, int mi, int s) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return days * kDay + h * 3600 + mi * 60 + s;
}

const std::vector<std::string> kCheckinColumns = {"user_id",   "location_id", "category_id", "category_name",
                                                   "latitude", "longitude",   "tz_offset_minutes", "utc_timestamp"};
const std::vector<std::string> kCdrColumns = {"user_id", "cell_id", "latitude", "longitude", "local_timestamp"};

bool valid_coordinates(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

std::optional<CheckinRecord> parse_line(std::string_view line, const ParseOptions& options) {
  const auto f = split_fields(line, options.delimiter);
  CheckinRecord r;
  if (options.mode == DatasetMode::kCheckin) {
    if (f.size() != kCheckinColumns.size()) return std::nullopt;
    if (f[0].empty() || f[1].empty() || f[2].empty()) return std::nullopt;
    r.user_id = f[0];
    r.location_id = f[1];
    r.category_id = std::string(f[2]);
    auto lat = parse_number<double>(f[4]);
    auto lon = parse_number<double>(f[5]);
    auto offset = parse_number<int>(f[6]);
    auto utc = parse_timestamp(std::string(f[7]));
    if (!lat || !lon || !offset || !utc || std::abs(*offset) > 24 * 60) return std::nullopt;
    r.latitude = *lat;
    r.longitude = *lon;
    r.utc_seconds = *utc;
    r.local_seconds = *utc + static_cast<std::int64_t>(*offset) * 60;
  } else {
    if (f.size() != kCdrColumns.size()) return std::nullopt;
    if (f[0].empty() || f[1].empty()) return std::nullopt;
    r.user_id = f[0];
    r.location_id = f[1];
    auto lat = parse_number<double>(f[2]);
    auto lon = parse_number<double>(f[3]);
    auto local = parse_timestamp(std::string(f[4]));
    if (!lat || !lon || !local) return std::nullopt;
    r.latitude = *lat;
    r.longitude = *lon;
    r.local_seconds = *local;
    r.utc_seconds = *local;
  }
  if (!valid_coordinates(r.latitude, r.longitude)) return std::nullopt;
  return r;
}

}  // namespace

std::string to_string(DatasetMode mode) { return mode == DatasetMode::kCheckin ? "checkin" : "cdr"; }

DatasetMode parse_mode(const std::string& text) {
  if (text == "checkin") return DatasetMode::kCheckin;
  if (text == "cdr") return DatasetMode::kCdr;
  throw DataError("unknown dataset mode '" + text + "' (expected checkin or cdr)");
}

std::optional<std::int64_t> parse_timestamp(const std::string& raw) {
  const std::string text(trim(raw));
  if (text.empty()) return std::nullopt;
  if (auto epoch = parse_number<std::int64_t>(text)) return *epoch;

  int y, mo, d, h, mi, s;
  char sep;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &s, &consumed) == 7 &&
      (sep == 'T' || sep == ' ')) {
    const std::string rest = text.substr(consumed);
    if (!rest.empty() && rest != "Z") return std::nullopt;
    return civil_seconds(y, mo, d, h, mi, s);
  }

  static const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  char dow[4], mon[4], zone[6];
  if (std::sscanf(text.c_str(), "%3s %3s %d %d:%d:%d %5s %d%n", dow, mon, &d, &h, &mi, &s, zone, &y, &consumed) == 8 &&
      static_cast<std::size_t>(consumed) == text.size()) {
    const auto it = std::find_if(std::begin(kMonths), std::end(kMonths), [&](const char* m) { return std::strcmp(m, mon) == 0; });
    if (it == std::end(kMonths)) return std::nullopt;
    auto base = civil_seconds(y, static_cast<int>(it - std::begin(kMonths)) + 1, d, h, mi, s);
    if (!base) return std::nullopt;
    const std::string z = zone;
    if (z.size() != 5 || (z[0] != '+' && z[0] != '-')) return std::nullopt;
    auto hh = parse_number<int>(std::string_view(z).substr(1, 2));
    auto mm = parse_number<int>(std::string_view(z).substr(3, 2));
    if (!hh || !mm) return std::nullopt;
    const std::int64_t offset = (*hh * 3600 + *mm * 60) * (z[0] == '-' ? -1 : 1);
    return *base - offset;
  }
  return std::nullopt;
}

int slot_of(std::int64_t local_seconds) {
  using namespace std::chrono;
  const std::int64_t days = local_seconds >= 0 ? local_seconds / kDay : -((-local_seconds + kDay - 1) / kDay);
  const int hour = static_cast<int>((local_seconds - days * kDay) / 3600);
  const weekday wd{sys_days{std::chrono::days{days}}};
  const bool weekend = wd == Saturday || wd == Sunday;
  return weekend ? 24 + hour : hour;
}

ParseResult parse_records(std::istream& in, const ParseOptions& options) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_lines = 0;
  if (options.header) {
    if (!std::getline(in, line)) {
      result.warnings.push_back("empty input");
      return result;
    }
    ++line_no;
    const auto& expected = options.mode == DatasetMode::kCheckin ? kCheckinColumns : kCdrColumns;
    const auto fields = split_fields(line, options.delimiter);
    std::vector<std::string> got(fields.begin(), fields.end());
    if (got != expected) {
      throw DataError(fmt::format("unparseable header on line 1: expected columns [{}], got [{}]", fmt::join(expected, ", "),
                                  fmt::join(got, ", ")));
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++data_lines;
    if (auto r = parse_line(line, options)) {
      result.records.push_back(std::move(*r));
    } else {
      result.malformed_lines.push_back(line_no);
    }
  }
  result.total_lines = data_lines;
  if (data_lines == 0) {
    result.warnings.push_back("empty input");
    return result;
  }
  const double fraction = static_cast<double>(result.malformed_lines.size()) / static_cast<double>(data_lines);
  if (fraction > options.max_malformed_fraction) {
    std::vector<std::size_t> shown(result.malformed_lines.begin(),
                                   result.malformed_lines.begin() + std::min<std::size_t>(result.malformed_lines.size(), 20));
    throw DataError(fmt::format("{} of {} lines malformed ({:.2f}% > {:.2f}%), lines: {}{}", result.malformed_lines.size(),
                                data_lines, 100.0 * fraction, 100.0 * options.max_malformed_fraction, fmt::join(shown, ", "),
                                shown.size() < result.malformed_lines.size() ? ", ..." : ""));
  }
  if (!result.malformed_lines.empty()) {
    result.warnings.push_back(fmt::format("skipped {} malformed lines", result.malformed_lines.size()));
  }
  std::stable_sort(result.records.begin(), result.records.end(), [](const CheckinRecord& a, const CheckinRecord& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.utc_seconds < b.utc_seconds;
  });
  return result;
}

ParseResult parse_records(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return parse_records(in, options);
}

std::vector<CheckinRecord> filter_users(std::vector<CheckinRecord> records, std::size_t min_records) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.user_id];
  std::erase_if(records, [&](const CheckinRecord& r) { return counts[r.user_id] < min_records; });
  return records;
}

}  // namespace pg2net::data

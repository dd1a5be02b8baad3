#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "pg2net/data/dataset.hpp"
#include "pg2net/data/queries.hpp"
#include "pg2net/data/records.hpp"
#include "pg2net/data/session_io.hpp"
#include "pg2net/data/sessions.hpp"
#include "pg2net/error.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace pg2net;
using namespace pg2net::data;
using pg2net::testing::local_time;

namespace {

CheckinRecord rec(const std::string& user, const std::string& loc, std::int64_t t) {
  CheckinRecord r;
  r.user_id = user;
  r.location_id = loc;
  r.category_id = "cat";
  r.utc_seconds = r.local_seconds = t;
  r.latitude = 40.7;
  r.longitude = -74.0;
  return r;
}

std::vector<CheckinRecord> flatten(const std::vector<RawSession>& sessions) {
  std::vector<CheckinRecord> out;
  for (const auto& s : sessions) out.insert(out.end(), s.records.begin(), s.records.end());
  return out;
}

bool same_sessions(const std::vector<RawSession>& a, const std::vector<RawSession>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].user_id != b[i].user_id || a[i].records.size() != b[i].records.size()) return false;
    for (std::size_t k = 0; k < a[i].records.size(); ++k) {
      if (a[i].records[k].utc_seconds != b[i].records[k].utc_seconds ||
          a[i].records[k].location_id != b[i].records[k].location_id)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("slot_of fixtures") {
  CHECK(slot_of(local_time(0, 13)) == 13);  // Monday 13:00
  CHECK(slot_of(local_time(6, 0)) == 24);   // Sunday 00:00
  CHECK(slot_of(local_time(5, 23)) == 47);  // Saturday 23:00
  CHECK(slot_of(local_time(4, 23, 59)) == 23);
}

TEST_CASE("slot_of covers every slot exactly once per simulated week") {
  std::map<int, int> hits;
  for (int day = 0; day < 7; ++day) {
    for (int hour = 0; hour < 24; ++hour) ++hits[slot_of(local_time(day, hour, 30))];
  }
  REQUIRE(hits.size() == 48);
  for (int s = 0; s < 24; ++s) CHECK(hits[s] == 5);   // five weekdays per weekday-hour slot
  for (int s = 24; s < 48; ++s) CHECK(hits[s] == 2);  // Saturday and Sunday
}

TEST_CASE("timestamp formats") {
  const auto iso = parse_timestamp("2012-04-03T18:00:09Z");
  REQUIRE(iso);
  CHECK(parse_timestamp("2012-04-03 18:00:09") == iso);
  CHECK(parse_timestamp("Tue Apr 03 18:00:09 +0000 2012") == iso);
  CHECK(parse_timestamp("Tue Apr 03 20:00:09 +0200 2012") == iso);
  CHECK(parse_timestamp(std::to_string(*iso)) == iso);
  CHECK_FALSE(parse_timestamp("2012-02-30 10:00:00"));
  CHECK_FALSE(parse_timestamp("yesterday"));
}

TEST_CASE("parse_records") {
  ParseOptions opts;
  SUBCASE("empty input gives no records and a warning") {
    std::istringstream in("");
    auto r = parse_records(in, opts);
    CHECK(r.records.empty());
    CHECK(!r.warnings.empty());
  }
  SUBCASE("one check-in line resolves local time from the offset") {
    std::istringstream in("u1,v1,c1,Coffee Shop,40.71,-74.00,-240,2012-04-03T18:00:00Z\n");
    auto r = parse_records(in, opts);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].category_id == "c1");
    CHECK(r.records[0].local_seconds == r.records[0].utc_seconds - 240 * 60);
    CHECK(slot_of(r.records[0].local_seconds) == 14);  // Tuesday 14:00 local
  }
  SUBCASE("CDR rows have no category") {
    ParseOptions cdr{.mode = DatasetMode::kCdr, .delimiter = '\t', .header = true};
    std::istringstream in("user_id\tcell_id\tlatitude\tlongitude\tlocal_timestamp\nu1\tcell9\t31.2\t121.5\t2014-03-01 08:15:00\n");
    auto r = parse_records(in, cdr);
    REQUIRE(r.records.size() == 1);
    CHECK_FALSE(r.records[0].category_id.has_value());
    CHECK(slot_of(r.records[0].local_seconds) == 24 + 8);  // 2014-03-01 was a Saturday
  }
  SUBCASE("bad header is a hard failure") {
    opts.header = true;
    std::istringstream in("user,venue\nu1,v1,c1,x,40,-74,0,0\n");
    CHECK_THROWS_AS(parse_records(in, opts), DataError);
  }
  SUBCASE("malformed lines: tolerated below 1%, fatal above with line numbers") {
    std::ostringstream good;
    for (int i = 0; i < 200; ++i) good << "u" << i % 3 << ",v1,c1,x,40.7,-74.0,0," << 1333400000 + i * 3600 << "\n";
    std::string text = good.str() + "u1,v1,c1,x,400,-74.0,0,1333400000\n";  // 1 of 201
    std::istringstream in1(text);
    auto r = parse_records(in1, opts);
    CHECK(r.records.size() == 200);
    CHECK(r.malformed_lines == std::vector<std::size_t>{201});
    text += "garbage\nmore garbage\n";  // 3 of 203
    std::istringstream in2(text);
    CHECK_THROWS_WITH_AS(parse_records(in2, opts), doctest::Contains("202"), DataError);
  }
  SUBCASE("records come back grouped by user and time-sorted") {
    std::istringstream in("b,v1,c,x,1,1,0,300\na,v1,c,x,1,1,0,200\nb,v2,c,x,1,1,0,100\n");
    auto r = parse_records(in, opts);
    REQUIRE(r.records.size() == 3);
    CHECK(r.records[0].user_id == "a");
    CHECK(r.records[1].utc_seconds == 100);
    CHECK(r.records[2].utc_seconds == 300);
  }
}

TEST_CASE("filter_users") {
  std::vector<CheckinRecord> records;
  for (int i = 0; i < 9; ++i) records.push_back(rec("nine", "v", i * 3600));
  for (int i = 0; i < 10; ++i) records.push_back(rec("ten", "v", i * 3600));
  auto kept = filter_users(records);
  CHECK(kept.size() == 10);
  CHECK(std::all_of(kept.begin(), kept.end(), [](const auto& r) { return r.user_id == "ten"; }));

  auto corpus = testing::random_corpus(5, 40, 20, 4, 1, 30);
  std::map<std::string, int> counts;
  for (const auto& r : corpus) ++counts[r.user_id];
  const auto expected = std::count_if(counts.begin(), counts.end(), [](const auto& kv) { return kv.second >= 10; });
  std::set<std::string> survivors;
  for (const auto& r : filter_users(corpus)) survivors.insert(r.user_id);
  CHECK(survivors.size() == static_cast<std::size_t>(expected));
}

TEST_CASE("sessionize fixtures") {
  SessionizeOptions one_session{.min_sessions = 1};
  SUBCASE("12 records in one window → chunk of 10 kept, chunk of 2 dropped") {
    std::vector<CheckinRecord> r;
    for (int i = 0; i < 12; ++i) r.push_back(rec("u", "v" + std::to_string(i), local_time(0, 6) + i * 3600));
    auto s = sessionize_user(r, one_session);
    REQUIRE(s.size() == 1);
    CHECK(s[0].records.size() == 10);
  }
  SUBCASE("records 9 minutes apart merge, the earlier one survives") {
    std::vector<CheckinRecord> r;
    r.push_back(rec("u", "first", local_time(0, 6)));
    r.push_back(rec("u", "second", local_time(0, 6, 9)));
    for (int i = 1; i < 6; ++i) r.push_back(rec("u", "v", local_time(0, 6) + i * 3600));
    auto s = sessionize_user(r, one_session);
    REQUIRE(s.size() == 1);
    CHECK(s[0].records.size() == 6);
    CHECK(s[0].records[0].location_id == "first");
  }
  SUBCASE("users with fewer than 5 sessions are dropped, more than 10 keep the latest") {
    std::vector<CheckinRecord> r;
    for (int w = 0; w < 4; ++w)
      for (int i = 0; i < 5; ++i) r.push_back(rec("u", "v", local_time(4 * w, 8 + i)));
    CHECK(sessionize_user(r).empty());
    for (int w = 4; w < 13; ++w)
      for (int i = 0; i < 5; ++i) r.push_back(rec("u", "v", local_time(4 * w, 8 + i)));
    auto s = sessionize_user(r);
    REQUIRE(s.size() == 10);
    CHECK(s.front().records.front().utc_seconds == local_time(12, 8));
  }
  SUBCASE("unsorted input is rejected") {
    std::vector<CheckinRecord> r{rec("u", "v", 100000), rec("u", "v", 0)};
    CHECK_THROWS_AS(sessionize_user(r), DataError);
  }
}

TEST_CASE("sessionization invariants and idempotence on random corpora") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto corpus = filter_users(testing::random_corpus(seed, 30, 40, 6, 5, 160));
    auto sessions = sessionize(corpus);
    CHECK(sessions.size() > 20);
    CHECK(testing::scan_session_invariants(sessions).empty());
    auto again = sessionize(flatten(sessions));
    CHECK(same_sessions(sessions, again));
    CHECK(same_sessions(sessions, sessionize(corpus)));
  }
}

TEST_CASE("split_train_test") {
  CHECK(split_train_test(10).train_count == 8);
  CHECK(split_train_test(10).test_count == 2);
  CHECK(split_train_test(5).train_count == 4);
  CHECK(split_train_test(5).test_count == 1);
  CHECK(split_train_test(6).train_count == 5);
  CHECK(split_train_test(3).test_count == 1);  // remainder would be empty

  auto corpus = filter_users(testing::random_corpus(3, 30, 40, 6, 5, 160));
  auto ds = build_dataset(sessionize(corpus), DatasetMode::kCheckin);
  CHECK(testing::scan_split_invariants(ds).empty());
  std::map<Index, std::pair<int, int>> per_user;
  for (const auto& s : ds.sessions) (s.split == Split::kTrain ? per_user[s.user].first : per_user[s.user].second)++;
  for (const auto& [u, c] : per_user) {
    CHECK(c.first > 0);
    CHECK(c.second > 0);
  }
}

TEST_CASE("vocabulary is built from training sessions and round-trips") {
  auto corpus = filter_users(testing::random_corpus(4, 25, 60, 6, 5, 160));
  auto ds = build_dataset(sessionize(corpus), DatasetMode::kCheckin);
  for (std::size_t i = 0; i < ds.vocab.locations.size(); ++i) {
    CHECK(ds.vocab.locations.index_of(ds.vocab.locations.id_of(static_cast<Index>(i))) == i);
  }
  std::set<Index> train_locs;
  bool saw_unknown = false;
  for (const auto& s : ds.sessions) {
    for (const auto& v : s.visits) {
      if (s.split == Split::kTrain) {
        CHECK(v.location != kUnknown);
        train_locs.insert(v.location);
      }
      saw_unknown = saw_unknown || v.location == kUnknown;
      CHECK(v.slot >= 0);
      CHECK(v.slot < 48);
    }
  }
  CHECK(train_locs.size() == ds.location_count());
  (void)saw_unknown;
  CHECK_THROWS_AS(ds.vocab.locations.id_of(static_cast<Index>(ds.location_count())), DataError);
}

TEST_CASE("build_queries") {
  // Two sessions of lengths 5 and 6 for one user, by hand.
  Dataset ds;
  ds.vocab.users.add("u");
  auto make_session = [](std::size_t ordinal, std::size_t n, std::int64_t t0) {
    Session s;
    s.ordinal = ordinal;
    for (std::size_t k = 0; k < n; ++k) s.visits.push_back(Visit{static_cast<Index>(k), 0, 0, t0 + static_cast<std::int64_t>(k) * 3600, 0, 0});
    return s;
  };
  ds.sessions.push_back(make_session(0, 5, 0));
  ds.sessions.push_back(make_session(1, 6, 100000));
  auto train = build_queries(ds, Split::kTrain);
  REQUIRE(train.size() == 5);
  for (std::size_t i = 0; i < train.size(); ++i) {
    CHECK(train[i].history.size() == 5);
    CHECK(train[i].recent.size() == i + 1);
    CHECK(train[i].target.location == i + 1);
  }
  // Session of length 5 after a first session → 4 samples; the first session alone → none.
  ds.sessions.pop_back();
  CHECK(build_queries(ds, Split::kTrain).empty());
  ds.sessions.push_back(make_session(1, 5, 100000));
  CHECK(build_queries(ds, Split::kTrain).size() == 4);
}

TEST_CASE("query targets are strictly later than their context; training never sees test sessions") {
  auto corpus = filter_users(testing::random_corpus(9, 25, 40, 6, 5, 160));
  auto ds = build_dataset(sessionize(corpus), DatasetMode::kCheckin);
  for (Split split : {Split::kTrain, Split::kTest}) {
    auto groups = build_query_groups(ds, split);
    auto samples = build_queries(ds, split);
    CHECK(sample_count(groups) == samples.size());
    for (const auto& q : samples) {
      CHECK(!q.history.empty());
      CHECK(!q.recent.empty());
      for (const auto& v : q.history) CHECK(v.utc_seconds < q.target.utc_seconds);
      for (const auto& v : q.recent) CHECK(v.utc_seconds < q.target.utc_seconds);
      CHECK(ds.sessions[q.session].split == split);
    }
  }
  std::size_t train_history_visits = 0;
  for (const auto& g : build_query_groups(ds, Split::kTrain)) {
    std::size_t expected = 0;
    for (std::size_t j = 0; j < g.session; ++j)
      if (ds.sessions[j].user == g.user) expected += ds.sessions[j].visits.size();
    CHECK(g.history.size() == expected);
    train_history_visits += expected;
  }
  CHECK(train_history_visits > 0);
  auto without = build_query_groups(ds, Split::kTest, {.test_history_includes_test = false});
  for (const auto& g : without) {
    std::size_t expected = 0;
    for (std::size_t j = 0; j < g.session; ++j)
      if (ds.sessions[j].user == g.user && ds.sessions[j].split == Split::kTrain) expected += ds.sessions[j].visits.size();
    CHECK(g.history.size() == expected);
  }
}

TEST_CASE("session files round-trip") {
  auto corpus = filter_users(testing::random_corpus(12, 12, 30, 5, 20, 120));
  auto ds = build_dataset(sessionize(corpus), DatasetMode::kCheckin);
  const auto dir = std::filesystem::temp_directory_path() / "pg2net_trajectory_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "sessions.jsonl").string();
  write_dataset(ds, path, vocab_path_for(path));
  auto back = read_dataset(path, vocab_path_for(path));
  REQUIRE(back.sessions.size() == ds.sessions.size());
  CHECK(back.vocab.locations.ids() == ds.vocab.locations.ids());
  CHECK(back.vocab.users.counts() == ds.vocab.users.counts());
  for (std::size_t i = 0; i < ds.sessions.size(); ++i) {
    REQUIRE(back.sessions[i].visits.size() == ds.sessions[i].visits.size());
    CHECK(back.sessions[i].split == ds.sessions[i].split);
    for (std::size_t k = 0; k < ds.sessions[i].visits.size(); ++k) {
      const auto& a = ds.sessions[i].visits[k];
      const auto& b = back.sessions[i].visits[k];
      CHECK(a.location == b.location);
      CHECK(a.category == b.category);
      CHECK(a.latitude == b.latitude);
      CHECK(a.utc_seconds == b.utc_seconds);
    }
  }
  std::filesystem::remove_all(dir);
}

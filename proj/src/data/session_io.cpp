#include "pg2net/data/session_io.hpp"

#include <fstream>

#include <json.hpp>

#include "pg2net/error.hpp"

namespace pg2net::data {
namespace {

using nlohmann::json;

std::int64_t encode_index(Index i) { return i == kUnknown ? -1 : static_cast<std::int64_t>(i); }

Index decode_index(const json& j) {
  const auto v = j.get<std::int64_t>();
  return v < 0 ? kUnknown : static_cast<Index>(v);
}

json table_json(const IdTable& t) { return {{"ids", t.ids()}, {"counts", t.counts()}}; }

IdTable table_from(const json& j) {
  IdTable t;
  const auto ids = j.at("ids").get<std::vector<std::string>>();
  const auto counts = j.at("counts").get<std::vector<std::uint64_t>>();
  if (ids.size() != counts.size()) throw DataError("vocabulary table ids/counts length mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (t.add(ids[i], counts[i]) != i) throw DataError("duplicate vocabulary id '" + ids[i] + "'");
  }
  return t;
}

}  // namespace

std::string vocab_path_for(const std::string& sessions_path) { return sessions_path + ".vocab.json"; }

void write_dataset(const Dataset& dataset, const std::string& sessions_path, const std::string& vocab_path) {
  std::ofstream out(sessions_path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + sessions_path + "'");
  for (const Session& s : dataset.sessions) {
    json visits = json::array();
    for (const Visit& v : s.visits) {
      json jv = {{"location", encode_index(v.location)}, {"slot", v.slot}, {"utc", v.utc_seconds},
                 {"lat", v.latitude}, {"lon", v.longitude}};
      if (dataset.has_categories()) jv["category"] = encode_index(v.category);
      visits.push_back(std::move(jv));
    }
    json line = {{"user", s.user}, {"ordinal", s.ordinal}, {"split", s.split == Split::kTrain ? "train" : "test"},
                 {"visits", std::move(visits)}};
    out << line.dump() << '\n';
  }
  if (!out) throw DataError("write to '" + sessions_path + "' failed");

  std::ofstream vout(vocab_path, std::ios::trunc);
  if (!vout) throw DataError("cannot write '" + vocab_path + "'");
  json vocab = {{"mode", to_string(dataset.mode)},
                {"users", table_json(dataset.vocab.users)},
                {"locations", table_json(dataset.vocab.locations)},
                {"categories", table_json(dataset.vocab.categories)}};
  vout << vocab.dump(1) << '\n';
}

Dataset read_dataset(const std::string& sessions_path, const std::string& vocab_path) {
  Dataset ds;
  try {
    std::ifstream vin(vocab_path);
    if (!vin) throw DataError("cannot open vocabulary '" + vocab_path + "'");
    const json vocab = json::parse(vin);
    ds.mode = parse_mode(vocab.at("mode").get<std::string>());
    ds.vocab.users = table_from(vocab.at("users"));
    ds.vocab.locations = table_from(vocab.at("locations"));
    ds.vocab.categories = table_from(vocab.at("categories"));

    std::ifstream in(sessions_path);
    if (!in) throw DataError("cannot open sessions '" + sessions_path + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      Session s;
      s.user = j.at("user").get<Index>();
      s.ordinal = j.at("ordinal").get<std::size_t>();
      const auto split = j.at("split").get<std::string>();
      if (split != "train" && split != "test") throw DataError("bad split tag '" + split + "'");
      s.split = split == "train" ? Split::kTrain : Split::kTest;
      if (s.user >= ds.vocab.users.size()) throw DataError("session user index out of vocabulary range");
      for (const json& jv : j.at("visits")) {
        Visit v;
        v.location = decode_index(jv.at("location"));
        v.category = ds.has_categories() ? decode_index(jv.at("category")) : kUnknown;
        v.slot = jv.at("slot").get<int>();
        v.utc_seconds = jv.at("utc").get<std::int64_t>();
        v.latitude = jv.at("lat").get<double>();
        v.longitude = jv.at("lon").get<double>();
        if (v.slot < 0 || v.slot >= kSlotCount) throw DataError("slot out of range in '" + sessions_path + "'");
        if (v.location != kUnknown && v.location >= ds.vocab.locations.size()) throw DataError("location index out of range");
        if (v.category != kUnknown && v.category >= ds.vocab.categories.size()) throw DataError("category index out of range");
        s.visits.push_back(v);
      }
      ds.sessions.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed session/vocabulary file: ") + e.what());
  }
  return ds;
}

}  // namespace pg2net::data

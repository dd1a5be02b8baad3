#include "pg2net/priors/priors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "pg2net/binary_io.hpp"
#include "pg2net/error.hpp"

namespace pg2net::priors {
namespace {

constexpr char kMagic[9] = "PG2PRI\0";

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

template <std::size_t N>
std::array<double, N> softmax(const std::array<double, N>& x) {
  const double top = *std::max_element(x.begin(), x.end());
  std::array<double, N> out{};
  double z = 0.0;
  for (std::size_t i = 0; i < N; ++i) z += out[i] = std::exp(x[i] - top);
  for (double& v : out) v /= z;
  return out;
}

void check_slot(int slot) {
  if (slot < 0 || slot >= static_cast<int>(kSlots)) throw DataError(fmt::format("time slot {} outside [0, 47]", slot));
}

}  // namespace

double haversine_km(const Coord& a, const Coord& b) {
  const double dlat = radians(b.latitude - a.latitude);
  const double dlon = radians(b.longitude - a.longitude);
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(radians(a.latitude)) * std::cos(radians(b.latitude)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

void GeoTable::set(Index location, const Coord& c) {
  if (location >= coords_.size()) throw DataError("geo table: location index out of range");
  coords_[location] = c;
  known_[location] = true;
}

const Coord& GeoTable::at(Index location) const {
  if (!has(location)) throw DataError(fmt::format("geo table: no coordinates for location {}", location));
  return coords_[location];
}

GeoTable build_geo_table(const data::Dataset& dataset) {
  GeoTable geo(dataset.location_count());
  for (const data::Session* s : dataset.train_sessions()) {
    for (const data::Visit& v : s->visits) {
      if (v.location != data::kUnknown && !geo.has(v.location)) geo.set(v.location, {v.latitude, v.longitude});
    }
  }
  return geo;
}

std::vector<double> distance_weights(const Coord& current, std::span<const Coord> sequence, double min_km) {
  if (sequence.empty()) throw DataError("distance_weights: empty sequence");
  if (!(min_km > 0.0)) throw DataError("distance clamp must be > 0 km");
  std::vector<double> w(sequence.size());
  for (std::size_t k = 0; k < sequence.size(); ++k) w[k] = 1.0 / std::max(haversine_km(current, sequence[k]), min_km);
  const double top = *std::max_element(w.begin(), w.end());
  double z = 0.0;
  for (double& v : w) z += v = std::exp(v - top);
  for (double& v : w) v /= z;
  return w;
}

TimeCorrelation build_time_correlation(const data::Dataset& dataset) {
  std::array<std::set<Index>, kSlots> visited;
  for (const data::Session* s : dataset.train_sessions()) {
    for (const data::Visit& v : s->visits) {
      if (v.location != data::kUnknown) visited[static_cast<std::size_t>(v.slot)].insert(v.location);
    }
  }
  TimeCorrelation tc;
  for (std::size_t i = 0; i < kSlots; ++i) {
    tc.nonempty[i] = !visited[i].empty();
    for (std::size_t j = i; j < kSlots; ++j) {
      std::size_t both = 0;
      for (Index l : visited[i]) both += visited[j].count(l);
      const std::size_t either = visited[i].size() + visited[j].size() - both;
      tc.gamma[i][j] = tc.gamma[j][i] = either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
    }
  }
  return tc;
}

std::array<double, kSlots> time_slot_distribution(int current_slot, const TimeCorrelation& tc) {
  check_slot(current_slot);
  return softmax(tc.gamma[static_cast<std::size_t>(current_slot)]);
}

std::vector<double> time_weights(int current_slot, std::span<const int> sequence_slots, const TimeCorrelation& tc) {
  const auto beta = time_slot_distribution(current_slot, tc);
  std::vector<double> w;
  w.reserve(sequence_slots.size());
  for (int s : sequence_slots) {
    check_slot(s);
    w.push_back(beta[static_cast<std::size_t>(s)]);
  }
  return w;
}

ActivityGraph build_activity_graph(const data::Dataset& dataset) {
  if (!dataset.has_categories()) throw DataError("activity graph needs categories, which CDR data does not have");
  ActivityGraph g;
  g.categories = dataset.category_count();
  g.counts.assign(g.categories * kSlots, 0.0);
  for (const data::Session* s : dataset.train_sessions()) {
    for (const data::Visit& v : s->visits) {
      if (v.category != data::kUnknown) g.counts[v.category * kSlots + static_cast<std::size_t>(v.slot)] += 1.0;
    }
  }
  return g;
}

std::array<double, kSlots> activity_slot_distribution(Index category, const ActivityGraph& w) {
  std::array<double, kSlots> row{};
  if (category != data::kUnknown) {
    if (category >= w.categories) throw DataError(fmt::format("category {} outside the activity graph", category));
    const double* r = w.counts.data() + category * kSlots;
    const double top = *std::max_element(r, r + kSlots);
    if (top > 0.0) {
      for (std::size_t t = 0; t < kSlots; ++t) row[t] = r[t] / top;
    }
  }
  return softmax(row);
}

std::vector<double> activity_weights(int current_slot, std::span<const Index> sequence_categories, const ActivityGraph& w) {
  check_slot(current_slot);
  std::map<Index, double> cache;
  std::vector<double> out;
  out.reserve(sequence_categories.size());
  for (Index c : sequence_categories) {
    auto it = cache.find(c);
    if (it == cache.end()) it = cache.emplace(c, activity_slot_distribution(c, w)[static_cast<std::size_t>(current_slot)]).first;
    out.push_back(it->second);
  }
  return out;
}

PriorBundle build_priors(const data::Dataset& dataset, const PriorOptions& options) {
  if (!(options.min_distance_km > 0.0)) throw DataError("priors.min_distance_km must be > 0");
  PriorBundle b;
  b.options = options;
  b.time = build_time_correlation(dataset);
  b.geo = build_geo_table(dataset);
  b.has_activity = dataset.has_categories() && options.use_activity;
  if (b.has_activity) b.activity = build_activity_graph(dataset);
  b.options.use_activity = b.has_activity;
  return b;
}

SequenceWeights sequence_weights(const PriorBundle& priors, const data::Visit& reference,
                                 std::span<const data::Visit> sequence) {
  SequenceWeights w;
  std::vector<Coord> coords;
  std::vector<int> slots;
  coords.reserve(sequence.size());
  slots.reserve(sequence.size());
  for (const data::Visit& v : sequence) {
    coords.push_back(priors.geo.of(v));
    slots.push_back(v.slot);
  }
  w.distance = distance_weights(priors.geo.of(reference), coords, priors.options.min_distance_km);
  w.time = time_weights(reference.slot, slots, priors.time);
  if (priors.has_activity) {
    std::vector<Index> cats;
    cats.reserve(sequence.size());
    for (const data::Visit& v : sequence) cats.push_back(v.category);
    w.activity = activity_weights(reference.slot, cats, priors.activity);
  }
  return w;
}

void write_priors(const std::string& path, const PriorBundle& bundle) {
  binary::Writer w(path);
  w.bytes(kMagic, 8);
  w.value<std::uint32_t>(kPriorsVersion);
  w.value<std::uint64_t>(bundle.config_digest);
  w.value<double>(bundle.options.min_distance_km);
  w.value<std::uint32_t>(bundle.has_activity ? 5 : 4);
  auto section = [&](const std::string& name, std::size_t rows, std::size_t cols, std::span<const double> values) {
    w.string(name);
    w.value<std::uint64_t>(rows);
    w.value<std::uint64_t>(cols);
    w.doubles(values);
  };
  std::vector<double> gamma;
  for (const auto& row : bundle.time.gamma) gamma.insert(gamma.end(), row.begin(), row.end());
  section("time_correlation", kSlots, kSlots, gamma);
  std::vector<double> nonempty(bundle.time.nonempty.begin(), bundle.time.nonempty.end());
  section("slot_nonempty", 1, kSlots, nonempty);
  std::vector<double> coords, known;
  for (Index l = 0; l < bundle.geo.size(); ++l) {
    const Coord c = bundle.geo.has(l) ? bundle.geo.at(l) : Coord{};
    coords.push_back(c.latitude);
    coords.push_back(c.longitude);
    known.push_back(bundle.geo.has(l) ? 1.0 : 0.0);
  }
  section("coordinates", bundle.geo.size(), 2, coords);
  section("coordinate_known", 1, bundle.geo.size(), known);
  if (bundle.has_activity) section("activity", bundle.activity.categories, kSlots, bundle.activity.counts);
  w.finish();
}

PriorBundle read_priors(const std::string& path) {
  binary::Reader r(path);
  r.expect_magic(kMagic);
  const auto version = r.value<std::uint32_t>();
  if (version != kPriorsVersion) throw DataError(fmt::format("priors '{}' has unsupported version {}", path, version));
  PriorBundle b;
  b.config_digest = r.value<std::uint64_t>();
  b.options.min_distance_km = r.value<double>();
  const auto count = r.value<std::uint32_t>();
  std::map<std::string, std::pair<std::array<std::uint64_t, 2>, std::vector<double>>> sections;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = r.string(256);
    const auto rows = r.value<std::uint64_t>();
    const auto cols = r.value<std::uint64_t>();
    if (rows > (1u << 24) || cols > (1u << 24)) throw DataError(fmt::format("priors '{}': corrupt section '{}'", path, name));
    sections[name] = {{rows, cols}, r.doubles(rows * cols)};
  }
  if (!r.at_end()) throw DataError(fmt::format("priors '{}' has trailing bytes", path));
  auto take = [&](const std::string& name, std::optional<std::uint64_t> rows, std::optional<std::uint64_t> cols) {
    auto it = sections.find(name);
    if (it == sections.end()) throw DataError(fmt::format("priors '{}' lacks section '{}'", path, name));
    const auto [shape, values] = it->second;
    if ((rows && shape[0] != *rows) || (cols && shape[1] != *cols)) {
      throw DataError(fmt::format("priors '{}': section '{}' has shape {}x{}", path, name, shape[0], shape[1]));
    }
    return it->second;
  };
  const auto gamma = take("time_correlation", kSlots, kSlots).second;
  for (std::size_t i = 0; i < kSlots; ++i) {
    for (std::size_t j = 0; j < kSlots; ++j) b.time.gamma[i][j] = gamma[i * kSlots + j];
  }
  const auto nonempty = take("slot_nonempty", 1, kSlots).second;
  for (std::size_t i = 0; i < kSlots; ++i) b.time.nonempty[i] = nonempty[i] != 0.0;
  const auto [coord_shape, coords] = take("coordinates", std::nullopt, 2);
  const auto known = take("coordinate_known", 1, coord_shape[0]).second;
  b.geo = GeoTable(coord_shape[0]);
  for (Index l = 0; l < coord_shape[0]; ++l) {
    if (known[l] != 0.0) b.geo.set(l, {coords[2 * l], coords[2 * l + 1]});
  }
  if (sections.count("activity")) {
    auto [shape, counts] = take("activity", std::nullopt, kSlots);
    b.has_activity = true;
    b.activity.categories = shape[0];
    b.activity.counts = std::move(counts);
  }
  b.options.use_activity = b.has_activity;
  return b;
}

}  // namespace pg2net::priors

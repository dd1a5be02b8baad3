#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pg2net/data/dataset.hpp"

namespace pg2net::priors {

using data::Index;
inline constexpr std::size_t kSlots = data::kSlotCount;

struct Coord {
  double latitude = 0.0;
  double longitude = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance (haversine form).
double haversine_km(const Coord& a, const Coord& b);

/// Coordinates of each training location, taken from its first training
/// occurrence.
class GeoTable {
 public:
  explicit GeoTable(std::size_t locations = 0) : coords_(locations), known_(locations, false) {}

  void set(Index location, const Coord& c);
  bool has(Index location) const { return location < known_.size() && known_[location]; }
  const Coord& at(Index location) const;
  std::size_t size() const { return coords_.size(); }
  /// Coordinates for a visit: the table entry when known, else the visit's own.
  Coord of(const data::Visit& v) const { return has(v.location) ? coords_[v.location] : Coord{v.latitude, v.longitude}; }
  double distance_km(Index a, Index b) const { return haversine_km(at(a), at(b)); }

 private:
  std::vector<Coord> coords_;
  std::vector<bool> known_;
};

GeoTable build_geo_table(const data::Dataset& dataset);

/// Position weights softmax(1/max(d, min_km)) over the sequence.
std::vector<double> distance_weights(const Coord& current, std::span<const Coord> sequence, double min_km = 0.01);

using SlotMatrix = std::array<std::array<double, kSlots>, kSlots>;

/// Jaccard similarity of the location sets visited in each pair of slots.
struct TimeCorrelation {
  SlotMatrix gamma{};
  std::array<bool, kSlots> nonempty{};
};

TimeCorrelation build_time_correlation(const data::Dataset& dataset);

/// softmax over the 48 entries of Γ[current].
std::array<double, kSlots> time_slot_distribution(int current_slot, const TimeCorrelation& tc);
/// β[slot of each position]; weights need not sum to 1 over positions.
std::vector<double> time_weights(int current_slot, std::span<const int> sequence_slots, const TimeCorrelation& tc);

/// Training counts of (category, slot) co-occurrence.
struct ActivityGraph {
  std::size_t categories = 0;
  std::vector<double> counts;  // [categories × 48], row-major

  double count(Index category, int slot) const { return counts[category * kSlots + static_cast<std::size_t>(slot)]; }
};

ActivityGraph build_activity_graph(const data::Dataset& dataset);

/// softmax over slots of the category's row divided by its maximum. Unknown
/// categories and empty rows give 1/48 everywhere.
std::array<double, kSlots> activity_slot_distribution(Index category, const ActivityGraph& w);
std::vector<double> activity_weights(int current_slot, std::span<const Index> sequence_categories, const ActivityGraph& w);

struct PriorOptions {
  double min_distance_km = 0.01;
  bool use_activity = true;  // ignored (forced off) without categories
};

/// Everything the model needs to weight history and recent positions.
struct PriorBundle {
  PriorOptions options;
  bool has_activity = false;
  TimeCorrelation time;
  ActivityGraph activity;
  GeoTable geo;
  std::uint64_t config_digest = 0;
};

PriorBundle build_priors(const data::Dataset& dataset, const PriorOptions& options = {});

/// The three (two without categories) weight vectors for one sequence,
/// relative to the reference visit.
struct SequenceWeights {
  std::vector<double> distance;
  std::vector<double> time;
  std::vector<double> activity;  // empty when the bundle has no activity graph
};

SequenceWeights sequence_weights(const PriorBundle& priors, const data::Visit& reference,
                                 std::span<const data::Visit> sequence);

inline constexpr std::uint32_t kPriorsVersion = 1;

/// Layout: magic "PG2PRI\0\0", u32 version, u64 config digest, f64 minimum
/// distance, u32 section count, then named sections (u32-length name, u64
/// rows, u64 cols, rows·cols f64). Sections: time_correlation [48×48],
/// slot_nonempty [1×48], coordinates [L×2], coordinate_known [1×L] and, with
/// categories, activity [K×48].
void write_priors(const std::string& path, const PriorBundle& bundle);
PriorBundle read_priors(const std::string& path);

}  // namespace pg2net::priors

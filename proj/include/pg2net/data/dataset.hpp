#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pg2net/data/records.hpp"
#include "pg2net/data/sessions.hpp"

namespace pg2net::data {

using Index = std::uint32_t;
/// Location or category never seen in training data.
inline constexpr Index kUnknown = std::numeric_limits<Index>::max();

/// Dense id ↔ index map with per-entry counts.
class IdTable {
 public:
  /// Index of `id`, inserting it at the end when new.
  Index add(const std::string& id, std::uint64_t count = 1);
  Index index_of(const std::string& id) const;  // kUnknown when absent
  const std::string& id_of(Index index) const;
  std::uint64_t count(Index index) const { return counts_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::vector<std::string> ids_;
  std::vector<std::uint64_t> counts_;
  std::map<std::string, Index> lookup_;
};

struct Vocab {
  IdTable users;
  IdTable locations;
  IdTable categories;
};

struct Visit {
  Index location = kUnknown;
  Index category = kUnknown;
  int slot = 0;
  std::int64_t utc_seconds = 0;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct Session {
  Index user = 0;
  std::size_t ordinal = 0;  // position in the user's chronology
  Split split = Split::kTrain;
  std::vector<Visit> visits;
};

/// Indexed, split corpus. Sessions are ordered by user index, then ordinal.
struct Dataset {
  DatasetMode mode = DatasetMode::kCheckin;
  Vocab vocab;
  std::vector<Session> sessions;

  bool has_categories() const { return mode == DatasetMode::kCheckin; }
  std::size_t location_count() const { return vocab.locations.size(); }
  std::size_t category_count() const { return vocab.categories.size(); }
  std::size_t user_count() const { return vocab.users.size(); }
  std::vector<const Session*> train_sessions() const;
};

/// Splits each user's sessions, builds the vocabulary from training sessions
/// only (users in id order, then first appearance) and indexes everything.
/// Test-only locations and categories map to kUnknown.
Dataset build_dataset(const std::vector<RawSession>& sessions, DatasetMode mode, double train_fraction = 0.8);

}  // namespace pg2net::data

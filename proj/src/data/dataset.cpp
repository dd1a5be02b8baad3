#include "pg2net/data/dataset.hpp"

#include "pg2net/error.hpp"

namespace pg2net::data {

Index IdTable::add(const std::string& id, std::uint64_t count) {
  auto [it, inserted] = lookup_.emplace(id, static_cast<Index>(ids_.size()));
  if (inserted) {
    ids_.push_back(id);
    counts_.push_back(0);
  }
  counts_[it->second] += count;
  return it->second;
}

Index IdTable::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  return it == lookup_.end() ? kUnknown : it->second;
}

const std::string& IdTable::id_of(Index index) const {
  if (index >= ids_.size()) throw DataError("vocabulary index " + std::to_string(index) + " out of range");
  return ids_[index];
}

std::vector<const Session*> Dataset::train_sessions() const {
  std::vector<const Session*> out;
  for (const Session& s : sessions) {
    if (s.split == Split::kTrain) out.push_back(&s);
  }
  return out;
}

Dataset build_dataset(const std::vector<RawSession>& raw, DatasetMode mode, double train_fraction) {
  Dataset ds;
  ds.mode = mode;

  // Sessions arrive grouped by user in id order; find each user's run.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t begin = 0; begin < raw.size();) {
    std::size_t end = begin;
    while (end < raw.size() && raw[end].user_id == raw[begin].user_id) ++end;
    runs.emplace_back(begin, end);
    begin = end;
  }

  std::vector<Split> split_of(raw.size(), Split::kTrain);
  for (auto [begin, end] : runs) {
    const auto assignment = split_train_test(end - begin, train_fraction);
    for (std::size_t i = begin + assignment.train_count; i < end; ++i) split_of[i] = Split::kTest;
    ds.vocab.users.add(raw[begin].user_id, 0);
    for (std::size_t i = begin; i < begin + assignment.train_count; ++i) {
      for (const CheckinRecord& r : raw[i].records) {
        ds.vocab.users.add(r.user_id);
        ds.vocab.locations.add(r.location_id);
        if (mode == DatasetMode::kCheckin) {
          if (!r.category_id) throw DataError("check-in record without category for user '" + r.user_id + "'");
          ds.vocab.categories.add(*r.category_id);
        }
      }
    }
  }

  for (auto [begin, end] : runs) {
    for (std::size_t i = begin; i < end; ++i) {
      Session s;
      s.user = ds.vocab.users.index_of(raw[i].user_id);
      s.ordinal = i - begin;
      s.split = split_of[i];
      for (const CheckinRecord& r : raw[i].records) {
        Visit v;
        v.location = ds.vocab.locations.index_of(r.location_id);
        v.category = mode == DatasetMode::kCheckin && r.category_id ? ds.vocab.categories.index_of(*r.category_id) : kUnknown;
        v.slot = slot_of(r.local_seconds);
        v.utc_seconds = r.utc_seconds;
        v.latitude = r.latitude;
        v.longitude = r.longitude;
        s.visits.push_back(v);
      }
      ds.sessions.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace pg2net::data

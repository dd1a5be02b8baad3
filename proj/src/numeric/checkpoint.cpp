#include "pg2net/numeric/checkpoint.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "pg2net/binary_io.hpp"
#include "pg2net/error.hpp"

namespace pg2net::numeric {
namespace {
constexpr char kMagic[9] = "PG2CKPT";
}

void save_checkpoint(const std::string& path, std::span<const NamedTensor> params) {
  binary::Writer w(path);
  w.bytes(kMagic, 8);
  w.value<std::uint32_t>(kCheckpointVersion);
  w.value<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const NamedTensor& p : params) {
    w.string(p.name);
    w.value<std::uint32_t>(static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) w.value<std::uint64_t>(d);
    w.doubles(p.tensor.data());
  }
  w.finish();
}

std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  binary::Reader r(path);
  r.expect_magic(kMagic);
  const auto version = r.value<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format("checkpoint '{}' has unsupported format version {}", path, version));
  }
  const auto count = r.value<std::uint32_t>();
  std::vector<CheckpointEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = r.string();
    const auto rank = r.value<std::uint32_t>();
    if (rank == 0 || rank > 8) throw DataError(fmt::format("checkpoint '{}': corrupt rank for '{}'", path, e.name));
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(r.value<std::uint64_t>());
    e.data = r.doubles(element_count(e.shape));
    entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw DataError(fmt::format("checkpoint '{}': trailing bytes", path));
  return entries;
}

void load_checkpoint(const std::string& path, std::span<NamedTensor> params) {
  std::map<std::string, CheckpointEntry> by_name;
  for (auto& e : read_checkpoint(path)) {
    std::string name = e.name;
    if (!by_name.emplace(name, std::move(e)).second) throw DataError(fmt::format("checkpoint '{}': duplicate entry '{}'", path, name));
  }
  for (NamedTensor& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DataError(fmt::format("checkpoint '{}' lacks parameter '{}'", path, p.name));
    if (it->second.shape != p.tensor.shape()) {
      throw DataError(fmt::format("checkpoint '{}': '{}' has shape {}, model expects {}", path, p.name,
                                  to_string(it->second.shape), to_string(p.tensor.shape())));
    }
  }
  if (by_name.size() != params.size()) {
    throw DataError(fmt::format("checkpoint '{}' has {} entries, model has {} parameters", path, by_name.size(), params.size()));
  }
  for (NamedTensor& p : params) {
    const auto& src = by_name.at(p.name).data;
    std::copy(src.begin(), src.end(), p.tensor.mutable_data().begin());
  }
}

}  // namespace pg2net::numeric

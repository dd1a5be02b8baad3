#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pg2net/numeric/optim.hpp"

namespace pg2net::numeric {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// One saved parameter.
struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

/// Layout: magic "PG2CKPT\0", u32 version, u32 entry count, then per entry
/// {u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data[]}, all
/// little-endian.
void save_checkpoint(const std::string& path, std::span<const NamedTensor> params);
std::vector<CheckpointEntry> read_checkpoint(const std::string& path);

/// Copies saved values into `params`, matching by name. Every parameter must
/// be present with an identical shape; extra entries are an error too.
void load_checkpoint(const std::string& path, std::span<NamedTensor> params);

}  // namespace pg2net::numeric

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pg2net/graph/node2vec.hpp"

namespace pg2net::graph {

inline constexpr std::uint32_t kEmbeddingVersion = 1;

struct EmbeddingHeader {
  Level level = Level::kLocation;
  std::uint64_t vocab_size = 0;
  std::uint64_t dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::uint64_t vocab_digest = 0;
};

/// Digest of an ordered id list; ties embeddings to one vocabulary.
std::uint64_t vocabulary_digest(const std::vector<std::string>& ids);

/// Layout: magic "PG2EMB\0\0", u32 version, u32 level, u64 vocab size, u64
/// dim, u64 seed, u64 config digest, u64 vocabulary digest, then
/// vocab_size·dim little-endian f64 values, row-major.
void write_embedding(const std::string& path, const EmbeddingTable& table, const EmbeddingHeader& header);

/// Reads a table and checks it against the expected level and vocabulary.
EmbeddingTable read_embedding(const std::string& path, Level level, std::uint64_t expected_vocab_digest,
                              EmbeddingHeader* header = nullptr);

}  // namespace pg2net::graph

#include "pg2net/graph/embedding_io.hpp"

#include <fmt/format.h>

#include "pg2net/binary_io.hpp"
#include "pg2net/digest.hpp"

namespace pg2net::graph {
namespace {
constexpr char kMagic[9] = "PG2EMB\0";
}

std::uint64_t vocabulary_digest(const std::vector<std::string>& ids) {
  std::string joined;
  for (const auto& id : ids) {
    joined += id;
    joined += '\n';
  }
  return digest64(joined);
}

void write_embedding(const std::string& path, const EmbeddingTable& table, const EmbeddingHeader& header) {
  if (table.rows != header.vocab_size || table.dim != header.dim || table.values.size() != table.rows * table.dim) {
    throw InvariantError("embedding header does not describe the table");
  }
  binary::Writer w(path);
  w.bytes(kMagic, 8);
  w.value<std::uint32_t>(kEmbeddingVersion);
  w.value<std::uint32_t>(header.level == Level::kLocation ? 0 : 1);
  w.value<std::uint64_t>(header.vocab_size);
  w.value<std::uint64_t>(header.dim);
  w.value<std::uint64_t>(header.seed);
  w.value<std::uint64_t>(header.config_digest);
  w.value<std::uint64_t>(header.vocab_digest);
  w.doubles(table.values);
  w.finish();
}

EmbeddingTable read_embedding(const std::string& path, Level level, std::uint64_t expected_vocab_digest,
                              EmbeddingHeader* header_out) {
  binary::Reader r(path);
  r.expect_magic(kMagic);
  const auto version = r.value<std::uint32_t>();
  if (version != kEmbeddingVersion) throw DataError(fmt::format("embedding '{}' has unsupported version {}", path, version));
  EmbeddingHeader h;
  const auto tag = r.value<std::uint32_t>();
  if (tag > 1) throw DataError(fmt::format("embedding '{}' has unknown level tag {}", path, tag));
  h.level = tag == 0 ? Level::kLocation : Level::kCategory;
  h.vocab_size = r.value<std::uint64_t>();
  h.dim = r.value<std::uint64_t>();
  h.seed = r.value<std::uint64_t>();
  h.config_digest = r.value<std::uint64_t>();
  h.vocab_digest = r.value<std::uint64_t>();
  if (h.level != level) throw DataError(fmt::format("embedding '{}' is a {} table, expected {}", path, to_string(h.level), to_string(level)));
  if (h.vocab_digest != expected_vocab_digest) {
    throw DataError(fmt::format("embedding '{}' was built for a different vocabulary", path));
  }
  if (h.dim == 0 || h.dim > (1u << 20)) throw DataError(fmt::format("embedding '{}' has corrupt dim", path));
  EmbeddingTable t;
  t.rows = h.vocab_size;
  t.dim = h.dim;
  t.values = r.doubles(h.vocab_size * h.dim);
  t.frozen = true;
  if (!r.at_end()) throw DataError(fmt::format("embedding '{}' has trailing bytes", path));
  if (header_out) *header_out = h;
  return t;
}

}  // namespace pg2net::graph

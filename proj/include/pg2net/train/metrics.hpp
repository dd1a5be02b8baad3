#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pg2net/data/dataset.hpp"

namespace pg2net::train {

using data::Index;

inline constexpr std::array<std::size_t, 3> kCutoffs{1, 5, 10};

/// 1 + number of locations scoring strictly higher; equal scores at lower
/// indices also rank ahead, so ties resolve by ascending index.
std::size_t rank_target(std::span<const double> scores, Index target);
Index top1(std::span<const double> scores);

double recall_at_k(std::size_t rank, std::size_t k);  // rank 0 = miss
double ndcg_at_k(std::size_t rank, std::size_t k);

/// One evaluated prediction.
struct QueryRecord {
  Index user = 0;
  std::size_t session = 0;
  std::size_t position = 0;
  Index target = data::kUnknown;
  std::size_t rank = 0;  // 0 when the target is not in the vocabulary
  Index predicted = 0;   // top-1 location
  double nll = 0.0;
  double aux_error = 0.0;
};

struct EvalReport {
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t queries = 0;
  std::size_t unknown_targets = 0;
  bool user_macro = false;
  std::array<double, kCutoffs.size()> recall{};
  std::array<double, kCutoffs.size()> ndcg{};
  double mean_aux_error = 0.0;  // over known targets
  double runtime_seconds = 0.0;  // not serialized (keeps reports reproducible)
  std::vector<QueryRecord> records;

  double recall_at(std::size_t k) const;
  double ndcg_at(std::size_t k) const;
};

/// Per-query means; with `user_macro` the per-user means are averaged
/// instead, weighting every user equally.
EvalReport summarize(std::vector<QueryRecord> records, const std::string& variant, std::uint64_t seed,
                     bool user_macro = false);

std::string to_json(const EvalReport& report, bool with_records = true);
EvalReport report_from_json(const std::string& text);
/// Aligned plain-text table, one row per report.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace pg2net::train

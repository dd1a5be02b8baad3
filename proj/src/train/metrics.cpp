#include "pg2net/train/metrics.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "pg2net/error.hpp"

namespace pg2net::train {

std::size_t rank_target(std::span<const double> scores, Index target) {
  if (target >= scores.size()) throw DataError(fmt::format("rank_target: target {} outside {} scores", target, scores.size()));
  const double t = scores[target];
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > t || (scores[j] == t && j < target)) ++ahead;
  }
  return ahead + 1;
}

Index top1(std::span<const double> scores) {
  if (scores.empty()) throw DataError("top1: no scores");
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return static_cast<Index>(best);
}

double recall_at_k(std::size_t rank, std::size_t k) { return rank >= 1 && rank <= k ? 1.0 : 0.0; }

double ndcg_at_k(std::size_t rank, std::size_t k) {
  return rank >= 1 && rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

double EvalReport::recall_at(std::size_t k) const {
  for (std::size_t i = 0; i < kCutoffs.size(); ++i) {
    if (kCutoffs[i] == k) return recall[i];
  }
  throw DataError(fmt::format("no Recall@{} in report", k));
}

double EvalReport::ndcg_at(std::size_t k) const {
  for (std::size_t i = 0; i < kCutoffs.size(); ++i) {
    if (kCutoffs[i] == k) return ndcg[i];
  }
  throw DataError(fmt::format("no NDCG@{} in report", k));
}

EvalReport summarize(std::vector<QueryRecord> records, const std::string& variant, std::uint64_t seed, bool user_macro) {
  EvalReport r;
  r.variant = variant;
  r.seed = seed;
  r.user_macro = user_macro;
  r.queries = records.size();
  std::size_t known = 0;
  for (const auto& q : records) {
    if (q.target == data::kUnknown) {
      ++r.unknown_targets;
    } else {
      r.mean_aux_error += q.aux_error;
      ++known;
    }
  }
  if (known > 0) r.mean_aux_error /= static_cast<double>(known);
  if (!records.empty()) {
    // Group by user (ordered map) so the reduction order is fixed.
    std::map<Index, std::vector<const QueryRecord*>> by_user;
    if (user_macro) {
      for (const auto& q : records) by_user[q.user].push_back(&q);
    } else {
      for (const auto& q : records) by_user[0].push_back(&q);
    }
    for (std::size_t i = 0; i < kCutoffs.size(); ++i) {
      double rec = 0.0, gain = 0.0;
      for (const auto& [user, qs] : by_user) {
        double ur = 0.0, ug = 0.0;
        for (const QueryRecord* q : qs) {
          ur += recall_at_k(q->rank, kCutoffs[i]);
          ug += ndcg_at_k(q->rank, kCutoffs[i]);
        }
        rec += ur / static_cast<double>(qs.size());
        gain += ug / static_cast<double>(qs.size());
      }
      r.recall[i] = rec / static_cast<double>(by_user.size());
      r.ndcg[i] = gain / static_cast<double>(by_user.size());
    }
  }
  r.records = std::move(records);
  return r;
}

std::string to_json(const EvalReport& report, bool with_records) {
  nlohmann::ordered_json j;
  j["variant"] = report.variant;
  j["seed"] = report.seed;
  j["queries"] = report.queries;
  j["unknown_targets"] = report.unknown_targets;
  j["aggregation"] = report.user_macro ? "user-macro" : "per-query";
  for (std::size_t i = 0; i < kCutoffs.size(); ++i) j[fmt::format("recall@{}", kCutoffs[i])] = report.recall[i];
  for (std::size_t i = 0; i < kCutoffs.size(); ++i) j[fmt::format("ndcg@{}", kCutoffs[i])] = report.ndcg[i];
  j["mean_aux_error"] = report.mean_aux_error;
  if (with_records) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& q : report.records) {
      rows.push_back({q.user, q.session, q.position, q.target == data::kUnknown ? -1 : static_cast<std::int64_t>(q.target),
                      q.rank, q.predicted, q.nll, q.aux_error});
    }
    j["record_fields"] = {"user", "session", "position", "target", "rank", "predicted", "nll", "aux_error"};
    j["records"] = std::move(rows);
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<QueryRecord> records;
    if (j.contains("records")) {
      for (const auto& row : j.at("records")) {
        QueryRecord q;
        q.user = row.at(0).get<Index>();
        q.session = row.at(1).get<std::size_t>();
        q.position = row.at(2).get<std::size_t>();
        const auto t = row.at(3).get<std::int64_t>();
        q.target = t < 0 ? data::kUnknown : static_cast<Index>(t);
        q.rank = row.at(4).get<std::size_t>();
        q.predicted = row.at(5).get<Index>();
        q.nll = row.at(6).get<double>();
        q.aux_error = row.at(7).get<double>();
        records.push_back(q);
      }
    }
    const bool macro = j.at("aggregation").get<std::string>() == "user-macro";
    EvalReport r = summarize(std::move(records), j.at("variant").get<std::string>(), j.at("seed").get<std::uint64_t>(), macro);
    if (r.records.empty()) {
      r.queries = j.at("queries").get<std::size_t>();
      for (std::size_t i = 0; i < kCutoffs.size(); ++i) {
        r.recall[i] = j.at(fmt::format("recall@{}", kCutoffs[i])).get<double>();
        r.ndcg[i] = j.at(fmt::format("ndcg@{}", kCutoffs[i])).get<double>();
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string format_table(const std::vector<EvalReport>& reports) {
  std::string out = fmt::format("{:<14} {:>7}", "model", "queries");
  for (std::size_t k : kCutoffs) out += fmt::format(" {:>8}", fmt::format("Rec@{}", k));
  for (std::size_t k : kCutoffs) out += fmt::format(" {:>8}", fmt::format("NDCG@{}", k));
  out += "\n";
  for (const auto& r : reports) {
    out += fmt::format("{:<14} {:>7}", r.variant, r.queries);
    for (double v : r.recall) out += fmt::format(" {:>8.4f}", v);
    for (double v : r.ndcg) out += fmt::format(" {:>8.4f}", v);
    out += "\n";
  }
  return out;
}

}  // namespace pg2net::train

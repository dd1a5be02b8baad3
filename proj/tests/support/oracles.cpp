#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pg2net::testing {

using numeric::NamedTensor;
using numeric::Tape;
using numeric::Tensor;

GradCheckResult gradient_check(const LossFn& loss, std::vector<NamedTensor> params, double h, double floor) {
  for (NamedTensor& p : params) p.tensor.zero_grad();
  {
    Tape tape;
    Tensor l = loss(tape);
    tape.backward(l);
  }
  auto evaluate = [&] {
    Tape tape(false);
    return loss(tape).item();
  };
  GradCheckResult result;
  for (NamedTensor& p : params) {
    const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    auto data = p.tensor.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = evaluate();
      data[i] = saved - h;
      const double down = evaluate();
      data[i] = saved;
      const double numeric_grad = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric_grad), floor});
      const double rel = std::abs(analytic[i] - numeric_grad) / denom;
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
        result.analytic = analytic[i];
        result.numeric = numeric_grad;
      }
    }
  }
  return result;
}

void ScalarLstm::step(const std::vector<double>& x, double& h, double& c) const {
  double pre[4];
  for (int g = 0; g < 4; ++g) {
    pre[g] = b[g] + wh[g] * h;
    for (std::size_t j = 0; j < x.size(); ++j) pre[g] += wx[g][j] * x[j];
  }
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double i = sig(pre[0]);
  const double f = sig(pre[1]);
  const double g = std::tanh(pre[2]);
  const double o = sig(pre[3]);
  c = f * c + i * g;
  h = o * std::tanh(c);
}

double spherical_law_of_cosines_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kDeg = M_PI / 180.0;
  const double cosine = std::sin(lat1 * kDeg) * std::sin(lat2 * kDeg) +
                        std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::cos((lon2 - lon1) * kDeg);
  return 6371.0 * std::acos(std::clamp(cosine, -1.0, 1.0));
}

}  // namespace pg2net::testing

#include <fmt/format.h>

namespace pg2net::testing {

std::vector<std::string> scan_session_invariants(const std::vector<data::RawSession>& sessions) {
  std::vector<std::string> problems;
  std::map<std::string, std::size_t> per_user;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& recs = sessions[i].records;
    ++per_user[sessions[i].user_id];
    if (recs.size() < 5 || recs.size() > 10) problems.push_back(fmt::format("session {} has {} records", i, recs.size()));
    if (recs.empty()) continue;
    for (std::size_t k = 1; k < recs.size(); ++k) {
      if (recs[k].utc_seconds - recs[k - 1].utc_seconds < 600) problems.push_back(fmt::format("session {} gap < 10 min at {}", i, k));
    }
    if (recs.back().utc_seconds - recs.front().utc_seconds > 3 * 86400) problems.push_back(fmt::format("session {} spans > 3 days", i));
    for (const auto& r : recs) {
      if (r.user_id != sessions[i].user_id) problems.push_back(fmt::format("session {} mixes users", i));
    }
    if (i > 0 && sessions[i - 1].user_id == sessions[i].user_id &&
        sessions[i - 1].records.back().utc_seconds >= recs.front().utc_seconds) {
      problems.push_back(fmt::format("session {} overlaps its predecessor", i));
    }
  }
  for (const auto& [user, n] : per_user) {
    if (n < 5 || n > 10) problems.push_back(fmt::format("user {} keeps {} sessions", user, n));
  }
  return problems;
}

std::vector<std::string> scan_split_invariants(const data::Dataset& dataset) {
  std::vector<std::string> problems;
  std::map<data::Index, std::vector<const data::Session*>> by_user;
  for (const auto& s : dataset.sessions) by_user[s.user].push_back(&s);
  for (const auto& [user, list] : by_user) {
    std::size_t train = 0;
    bool seen_test = false;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i]->ordinal != i) problems.push_back(fmt::format("user {} ordinal gap", user));
      if (i > 0 && list[i - 1]->visits.back().utc_seconds >= list[i]->visits.front().utc_seconds) {
        problems.push_back(fmt::format("user {} sessions out of order", user));
      }
      if (list[i]->split == data::Split::kTrain) {
        ++train;
        if (seen_test) problems.push_back(fmt::format("user {} has train after test", user));
      } else {
        seen_test = true;
      }
    }
    const std::size_t n = list.size();
    std::size_t expected = (4 * n + 4) / 5;  // ⌈0.8 n⌉ in integers
    if (expected == n) expected = n - 1;
    if (train != expected) problems.push_back(fmt::format("user {} has {} train of {}, expected {}", user, train, n, expected));
    if (train == 0 || train == n) problems.push_back(fmt::format("user {} missing a split side", user));
  }
  return problems;
}

}  // namespace pg2net::testing

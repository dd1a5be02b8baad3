#include "pg2net/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pg2net/digest.hpp"
#include "pg2net/error.hpp"
#include "pg2net/numeric/ops.hpp"
#include "pg2net/numeric/optim.hpp"

namespace pg2net::train {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<double>> snapshot(const std::vector<numeric::NamedTensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void restore(std::vector<numeric::NamedTensor>& params, const std::vector<std::vector<double>>& saved) {
  for (std::size_t i = 0; i < params.size(); ++i) std::copy(saved[i].begin(), saved[i].end(), params[i].tensor.mutable_data().begin());
}

[[noreturn]] void non_finite(const data::QueryGroup& g, const model::GroupOutput& out) {
  std::size_t position = g.target_positions.empty() ? 0 : g.target_positions.front();
  for (const auto& s : out.samples) {
    if (!std::isfinite(s.nll) || !std::isfinite(s.aux_error)) {
      position = s.position;
      break;
    }
  }
  throw NumericError(fmt::format("non-finite loss at sample (user {}, session {}, position {})", g.user, g.session, position));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DataError("train.learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw DataError("train.weight_decay must be >= 0");
  if (!(clip_norm > 0.0)) throw DataError("train.clip_norm must be > 0");
  if (accumulation == 0) throw DataError("train.accumulation must be positive");
  if (patience == 0) throw DataError("train.patience must be positive");
}

std::pair<std::vector<data::QueryGroup>, std::vector<data::QueryGroup>> split_heldout(
    const std::vector<data::QueryGroup>& groups) {
  std::vector<data::QueryGroup> train, heldout;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const bool last_of_user = i + 1 == groups.size() || groups[i + 1].user != groups[i].user;
    const bool only_of_user = last_of_user && (i == 0 || groups[i - 1].user != groups[i].user);
    (last_of_user && !only_of_user ? heldout : train).push_back(groups[i]);
  }
  return {std::move(train), std::move(heldout)};
}

double mean_loss(const model::SequenceModel& model, const std::vector<data::QueryGroup>& groups) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    numeric::Tape tape(false);
    const auto out = model.forward(tape, g);
    if (out.trained == 0) continue;
    total += out.loss.item();
    n += out.trained;
  }
  return n == 0 ? kNaN : total / static_cast<double>(n);
}

FitResult fit(const model::SequenceModel& model, const std::vector<data::QueryGroup>& train_groups,
              const std::vector<data::QueryGroup>& heldout, const TrainConfig& config,
              const std::vector<data::QueryGroup>* test_groups) {
  config.validate();
  auto params = model.parameters();
  numeric::AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  opts.weight_decay = config.weight_decay;
  numeric::AdamState adam(opts, params);
  numeric::zero_grads(params);

  FitResult result;
  result.best_heldout = heldout.empty() ? kNaN : mean_loss(model, heldout);
  auto best = snapshot(params);
  std::size_t stale = 0;
  std::vector<std::size_t> order(train_groups.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(config.seed, 0x7472, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    std::size_t epoch_samples = 0, pending = 0;
    auto step = [&] {
      if (pending == 0) return;
      for (auto& p : params) {
        if (!p.tensor.has_grad()) continue;
        for (double& gval : p.tensor.mutable_grad()) gval /= static_cast<double>(pending);
      }
      numeric::clip_global_norm(params, config.clip_norm);
      numeric::adam_step(params, adam);
      numeric::zero_grads(params);
      pending = 0;
      ++result.steps;
    };
    for (std::size_t idx : order) {
      const auto& g = train_groups[idx];
      numeric::Tape tape;
      const auto out = model.forward(tape, g);
      if (out.trained == 0) continue;
      const double value = out.loss.item();
      if (!std::isfinite(value)) non_finite(g, out);
      tape.backward(out.loss);
      epoch_loss += value;
      epoch_samples += out.trained;
      pending += out.trained;
      if (pending >= config.accumulation) step();
    }
    step();

    LossPoint point;
    point.epoch = epoch;
    point.train_loss = epoch_samples == 0 ? kNaN : epoch_loss / static_cast<double>(epoch_samples);
    point.heldout_loss = heldout.empty() ? kNaN : mean_loss(model, heldout);
    point.test_loss = test_groups ? mean_loss(model, *test_groups) : kNaN;
    result.curve.push_back(point);
    spdlog::debug("{} epoch {}: train {:.5f} held-out {:.5f}", model.name(), epoch, point.train_loss, point.heldout_loss);

    if (heldout.empty() || std::isnan(point.heldout_loss)) {
      best = snapshot(params);
      result.best_epoch = epoch;
      continue;
    }
    if (std::isnan(result.best_heldout) || point.heldout_loss < result.best_heldout) {
      result.best_heldout = point.heldout_loss;
      result.best_epoch = epoch;
      best = snapshot(params);
      stale = 0;
    } else if (++stale >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  restore(params, best);
  return result;
}

std::vector<QueryRecord> evaluate_model(const model::SequenceModel& model, const std::vector<data::QueryGroup>& groups,
                                        std::size_t workers) {
  std::vector<std::vector<QueryRecord>> per_group(groups.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      numeric::Tape tape(false);
      const auto out = model.forward(tape, groups[i]);
      for (const auto& s : out.samples) {
        QueryRecord q;
        q.user = groups[i].user;
        q.session = groups[i].session;
        q.position = s.position;
        q.target = s.target;
        q.predicted = top1(s.log_probs.data());
        if (s.target_known()) q.rank = rank_target(s.log_probs.data(), s.target);
        q.nll = s.nll;
        q.aux_error = s.aux_error;
        per_group[i].push_back(q);
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, groups.size()));
  if (workers == 1) {
    run(0, groups.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t per = (groups.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * per, end = std::min(groups.size(), begin + per);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
  }
  std::vector<QueryRecord> records;
  for (auto& g : per_group) records.insert(records.end(), g.begin(), g.end());
  return records;
}

std::string loss_curve_csv(const FitResult& fit) {
  std::string out = "epoch,train_loss,test_loss\n";
  for (const auto& p : fit.curve) {
    out += fmt::format("{},{:.17g},{:.17g}\n", p.epoch, p.train_loss, std::isnan(p.test_loss) ? p.heldout_loss : p.test_loss);
  }
  return out;
}

}  // namespace pg2net::train

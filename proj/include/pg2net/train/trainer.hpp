#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pg2net/data/queries.hpp"
#include "pg2net/model/model.hpp"
#include "pg2net/train/metrics.hpp"

namespace pg2net::train {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  double clip_norm = 5.0;
  std::size_t epochs = 30;
  std::size_t accumulation = 32;  // samples per optimizer step
  std::size_t patience = 5;       // epochs without held-out improvement
  std::uint64_t seed = 1;

  void validate() const;
};

struct LossPoint {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;  // NaN without held-out groups
  double test_loss = 0.0;     // NaN without test groups
};

struct FitResult {
  std::vector<LossPoint> curve;
  std::size_t best_epoch = 0;  // 0 = initialization
  double best_heldout = 0.0;
  std::size_t steps = 0;
  bool stopped_early = false;
};

/// Splits off each user's last training group as the early-stopping set.
/// Users with a single training group keep it for training.
std::pair<std::vector<data::QueryGroup>, std::vector<data::QueryGroup>> split_heldout(
    const std::vector<data::QueryGroup>& groups);

/// Mean per-sample loss without recording gradients.
double mean_loss(const model::SequenceModel& model, const std::vector<data::QueryGroup>& groups);

/// Seeded shuffled passes over the groups. Gradients of the summed sample
/// losses accumulate until at least `accumulation` samples are seen, are then
/// averaged, clipped and applied with AdamW. The parameters with the lowest
/// held-out loss are restored at the end. Non-finite losses throw
/// NumericError naming the sample.
FitResult fit(const model::SequenceModel& model, const std::vector<data::QueryGroup>& train_groups,
              const std::vector<data::QueryGroup>& heldout, const TrainConfig& config,
              const std::vector<data::QueryGroup>* test_groups = nullptr);

/// Forward passes on `workers` threads against fixed parameters; records
/// come back in group order regardless of worker count.
std::vector<QueryRecord> evaluate_model(const model::SequenceModel& model, const std::vector<data::QueryGroup>& groups,
                                        std::size_t workers = 1);

/// Rows "epoch,train_loss,test_loss" (held-out loss stands in for test loss
/// when no test groups were monitored).
std::string loss_curve_csv(const FitResult& fit);

}  // namespace pg2net::train

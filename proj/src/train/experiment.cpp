#include "pg2net/train/experiment.hpp"

#include <chrono>

#include "pg2net/digest.hpp"
#include "pg2net/error.hpp"
#include "pg2net/train/markov.hpp"

namespace pg2net::train {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TrainedRun train_and_evaluate(const Experiment& ex, std::unique_ptr<model::SequenceModel> m, const std::string& tag) {
  const auto start = std::chrono::steady_clock::now();
  TrainedRun run;
  run.fit = fit(*m, ex.fit_groups, ex.heldout, ex.train, &ex.test);
  run.report = summarize(evaluate_model(*m, ex.test, ex.workers), tag, ex.train.seed, ex.user_macro);
  run.report.runtime_seconds = seconds_since(start);
  run.model = std::move(m);
  return run;
}

}  // namespace

Experiment prepare_experiment(const data::Dataset& dataset, std::shared_ptr<const priors::PriorBundle> priors,
                              graph::EmbeddingTable locations, graph::EmbeddingTable categories,
                              const model::ModelConfig& dims, const TrainConfig& train,
                              const data::QueryOptions& queries) {
  Experiment ex;
  ex.dataset = &dataset;
  ex.priors = std::move(priors);
  ex.model = dims;
  ex.model.has_categories = dataset.has_categories();
  ex.model.users = dataset.user_count();
  ex.model.locations = dataset.location_count();
  ex.model.categories = dataset.has_categories() ? dataset.category_count() : 0;
  ex.model.location_dim = locations.dim;
  ex.locations = std::move(locations);
  if (ex.model.has_categories) {
    ex.model.category_dim = categories.dim;
    ex.categories = std::move(categories);
  }
  ex.train = train;
  const std::uint64_t table_seed = stage_seed(train.seed, "random-tables");
  ex.random_locations = graph::random_table(ex.model.locations, ex.model.location_dim, table_seed);
  if (ex.model.has_categories) {
    ex.random_categories = graph::random_table(ex.model.categories, ex.model.category_dim, derive_seed(table_seed, 1));
  }
  auto [fit_groups, heldout] = split_heldout(data::build_query_groups(dataset, data::Split::kTrain, queries));
  ex.fit_groups = std::move(fit_groups);
  ex.heldout = std::move(heldout);
  ex.test = data::build_query_groups(dataset, data::Split::kTest, queries);
  if (ex.fit_groups.empty()) throw DataError("no training queries (every user needs at least two training sessions)");
  return ex;
}

std::unique_ptr<model::Pg2NetModel> build_model(const Experiment& ex, model::Variant variant) {
  auto config = ex.model;
  config.variant = variant;
  const bool random = variant == model::Variant::kNoNode2vec;
  const auto& loc = random ? ex.random_locations : ex.locations;
  const auto* cat = config.has_categories ? (random ? &ex.random_categories : &ex.categories) : nullptr;
  return std::make_unique<model::Pg2NetModel>(config, loc, cat, ex.priors, stage_seed(ex.train.seed, "model-init"));
}

TrainedRun run_variant(const Experiment& ex, model::Variant variant) {
  return train_and_evaluate(ex, build_model(ex, variant), model::to_string(variant));
}

TrainedRun run_lstm_baseline(const Experiment& ex) {
  auto m = std::make_unique<model::LstmBaseline>(ex.model.hidden, ex.model.time_dim, ex.locations,
                                                 ex.model.has_categories ? &ex.categories : nullptr,
                                                 stage_seed(ex.train.seed, "baseline-init"));
  return train_and_evaluate(ex, std::move(m), "lstm");
}

EvalReport run_markov(const Experiment& ex) {
  const auto start = std::chrono::steady_clock::now();
  auto report = summarize(evaluate_markov(fit_markov(*ex.dataset), ex.test), "markov", ex.train.seed, ex.user_macro);
  report.runtime_seconds = seconds_since(start);
  return report;
}

}  // namespace pg2net::train

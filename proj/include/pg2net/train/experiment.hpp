#pragma once

#include <memory>

#include "pg2net/data/dataset.hpp"
#include "pg2net/data/queries.hpp"
#include "pg2net/graph/node2vec.hpp"
#include "pg2net/model/model.hpp"
#include "pg2net/priors/priors.hpp"
#include "pg2net/train/metrics.hpp"
#include "pg2net/train/trainer.hpp"

namespace pg2net::train {

/// Everything needed to train and evaluate any variant or baseline on one
/// prepared dataset.
struct Experiment {
  std::shared_ptr<const priors::PriorBundle> priors;
  graph::EmbeddingTable locations;
  graph::EmbeddingTable categories;  // empty without categories
  graph::EmbeddingTable random_locations;
  graph::EmbeddingTable random_categories;
  model::ModelConfig model;  // dims, ε and vocabulary sizes
  TrainConfig train;
  std::size_t workers = 1;
  bool user_macro = false;
  std::vector<data::QueryGroup> fit_groups;
  std::vector<data::QueryGroup> heldout;
  std::vector<data::QueryGroup> test;
  const data::Dataset* dataset = nullptr;
};

/// Fills vocabulary sizes and query groups. `categories` is ignored for
/// datasets without categories.
Experiment prepare_experiment(const data::Dataset& dataset, std::shared_ptr<const priors::PriorBundle> priors,
                              graph::EmbeddingTable locations, graph::EmbeddingTable categories,
                              const model::ModelConfig& dims, const TrainConfig& train,
                              const data::QueryOptions& queries = {});

struct TrainedRun {
  std::unique_ptr<model::SequenceModel> model;
  FitResult fit;
  EvalReport report;
};

std::unique_ptr<model::Pg2NetModel> build_model(const Experiment& ex, model::Variant variant);
TrainedRun run_variant(const Experiment& ex, model::Variant variant);
TrainedRun run_lstm_baseline(const Experiment& ex);
EvalReport run_markov(const Experiment& ex);

}  // namespace pg2net::train

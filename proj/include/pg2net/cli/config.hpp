#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "pg2net/data/queries.hpp"
#include "pg2net/error.hpp"
#include "pg2net/data/records.hpp"
#include "pg2net/data/sessions.hpp"
#include "pg2net/graph/node2vec.hpp"
#include "pg2net/model/model.hpp"
#include "pg2net/priors/priors.hpp"
#include "pg2net/train/trainer.hpp"

namespace pg2net::cli {

/// One or more configuration problems, each prefixed with its key path.
class ConfigError : public DataError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Toggle { kAuto, kOn, kOff };

struct RunConfig {
  // [run]
  std::string input;
  data::DatasetMode mode = data::DatasetMode::kCheckin;
  std::string output = "pg2net-run";
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool header = false;
  char delimiter = ',';

  // [preprocess]
  std::size_t min_user_records = 10;
  data::SessionizeOptions sessionize;
  double train_fraction = 0.8;
  data::QueryOptions queries;

  // [walk]; embedding_dim is unused, see location_dim / category_dim
  graph::WalkConfig walk;
  std::size_t location_dim = 500;
  std::size_t category_dim = 50;

  // [priors]
  double min_distance_km = 0.01;
  Toggle activity = Toggle::kAuto;

  // [model]; vocabulary sizes and embedding widths are filled at run time
  model::ModelConfig model;

  // [train]
  train::TrainConfig train;

  // [eval]
  bool user_macro = false;
  std::vector<double> distance_edges;

  /// Keys given explicitly ("section.key"), from the file or overrides.
  std::set<std::string> explicit_keys;

  /// Checks every constraint; an empty list means valid.
  std::vector<std::string> problems(bool require_input) const;
  void validate(bool require_input) const;

  priors::PriorOptions prior_options() const;
  graph::WalkConfig walk_for(graph::Level level) const;

  /// Canonical INI text with every key, in a fixed order.
  std::string to_ini() const;
  /// Canonical text of the listed sections or "section.key" entries, plus
  /// the seed and mode (stage cache keys).
  std::string sections(std::initializer_list<const char*> names) const;
};

/// Parses INI text over the defaults. Unknown sections/keys and malformed
/// values are collected and thrown together as a ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Applies "section.key=value"; same checks as the file parser.
void apply_override(RunConfig& config, const std::string& assignment);
void set_value(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace pg2net::cli

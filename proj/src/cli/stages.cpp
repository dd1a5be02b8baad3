#include "pg2net/cli/stages.hpp"

#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <spdlog/spdlog.h>
#include <sstream>

#include "pg2net/data/session_io.hpp"
#include "pg2net/digest.hpp"
#include "pg2net/error.hpp"
#include "pg2net/graph/embedding_io.hpp"
#include "pg2net/graph/graph.hpp"
#include "pg2net/numeric/checkpoint.hpp"
#include "pg2net/train/experiment.hpp"
#include "pg2net/train/markov.hpp"
#include "pg2net/train/reports.hpp"

namespace pg2net::cli {
namespace {

using json = nlohmann::ordered_json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) throw DataError(fmt::format("cannot write '{}'", path.string()));
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw DataError(fmt::format("missing {} '{}' (run the earlier stage first)", what, path.string()));
}

double number_or_nan(const json& v) { return v.is_number() ? v.get<double>() : std::nan(""); }

struct Artifacts {
  data::Dataset dataset;
  std::shared_ptr<const priors::PriorBundle> priors;
  graph::EmbeddingTable locations;
  graph::EmbeddingTable categories;
};

std::unique_ptr<Artifacts> load_artifacts(const Layout& layout) {
  auto a = std::make_unique<Artifacts>();
  a->dataset = data::read_dataset(layout.sessions().string(), layout.vocab().string());
  a->priors = std::make_shared<priors::PriorBundle>(priors::read_priors(layout.priors().string()));
  a->locations = graph::read_embedding(layout.embedding(graph::Level::kLocation).string(), graph::Level::kLocation,
                                       graph::vocabulary_digest(a->dataset.vocab.locations.ids()));
  if (a->dataset.has_categories()) {
    a->categories = graph::read_embedding(layout.embedding(graph::Level::kCategory).string(), graph::Level::kCategory,
                                          graph::vocabulary_digest(a->dataset.vocab.categories.ids()));
  }
  return a;
}

train::Experiment experiment(const Artifacts& a, const RunConfig& c) {
  train::TrainConfig t = c.train;
  t.seed = c.seed;
  auto ex = train::prepare_experiment(a.dataset, a.priors, a.locations, a.categories, c.model, t, c.queries);
  ex.workers = c.workers;
  ex.user_macro = c.user_macro;
  return ex;
}

json fit_json(const train::FitResult& fit) {
  json curve = json::array();
  for (const auto& p : fit.curve) curve.push_back({p.epoch, p.train_loss, p.heldout_loss, p.test_loss});
  return {{"best_epoch", fit.best_epoch}, {"best_heldout", fit.best_heldout}, {"steps", fit.steps},
          {"stopped_early", fit.stopped_early}, {"curve", curve}};
}

train::FitResult fit_from_json(const json& j) {
  train::FitResult fit;
  fit.best_epoch = j.at("best_epoch").get<std::size_t>();
  fit.best_heldout = number_or_nan(j.at("best_heldout"));
  fit.steps = j.at("steps").get<std::size_t>();
  fit.stopped_early = j.at("stopped_early").get<bool>();
  for (const auto& row : j.at("curve")) {
    fit.curve.push_back({row.at(0).get<std::size_t>(), number_or_nan(row.at(1)), number_or_nan(row.at(2)), number_or_nan(row.at(3))});
  }
  return fit;
}

json model_meta(const std::string& kind, const std::string& tag, const RunConfig& c, const train::FitResult& fit) {
  return {{"kind", kind},
          {"tag", tag},
          {"variant", model::to_string(c.model.variant)},
          {"seed", c.seed},
          {"hidden", c.model.hidden},
          {"user_dim", c.model.user_dim},
          {"time_dim", c.model.time_dim},
          {"epsilon", c.model.aux_weight},
          {"history_cap", c.model.history_cap},
          {"fit", fit_json(fit)}};
}

void save_model(const fs::path& checkpoint, const model::SequenceModel& m, const json& meta) {
  fs::create_directories(checkpoint.parent_path());
  numeric::save_checkpoint(checkpoint.string(), m.parameters());
  write_text(meta_path(checkpoint), meta.dump(2) + "\n");
}

/// A checkpoint rebuilt into a live model over the run's artifacts.
struct LoadedModel {
  std::unique_ptr<Artifacts> artifacts;
  train::Experiment ex;
  std::unique_ptr<model::SequenceModel> model;
  std::string tag;
  json meta;
};

LoadedModel load_model(const Layout& layout, RunConfig config, const fs::path& checkpoint) {
  require_file(checkpoint, "checkpoint");
  require_file(meta_path(checkpoint), "checkpoint metadata");
  LoadedModel out;
  try {
    out.meta = json::parse(read_text(meta_path(checkpoint)));
    out.tag = out.meta.at("tag").get<std::string>();
    config.seed = out.meta.at("seed").get<std::uint64_t>();
    config.model.hidden = out.meta.at("hidden").get<std::size_t>();
    config.model.user_dim = out.meta.at("user_dim").get<std::size_t>();
    config.model.time_dim = out.meta.at("time_dim").get<std::size_t>();
    config.model.aux_weight = out.meta.at("epsilon").get<double>();
    config.model.history_cap = out.meta.at("history_cap").get<std::size_t>();
    config.model.variant = model::parse_variant(out.meta.at("variant").get<std::string>());
  } catch (const json::exception& e) {
    throw DataError(fmt::format("bad checkpoint metadata '{}': {}", meta_path(checkpoint).string(), e.what()));
  }
  out.artifacts = load_artifacts(layout);
  out.ex = experiment(*out.artifacts, config);
  const std::string kind = out.meta.value("kind", "");
  if (kind == "lstm") {
    out.model = std::make_unique<model::LstmBaseline>(out.ex.model.hidden, out.ex.model.time_dim, out.ex.locations,
                                                      out.ex.model.has_categories ? &out.ex.categories : nullptr,
                                                      stage_seed(config.seed, "baseline-init"));
  } else if (kind == "pg2net") {
    out.model = train::build_model(out.ex, config.model.variant);
  } else {
    throw DataError(fmt::format("unknown model kind '{}' in '{}'", kind, meta_path(checkpoint).string()));
  }
  auto params = out.model->parameters();
  numeric::load_checkpoint(checkpoint.string(), params);
  return out;
}

void write_report(const Layout& layout, const train::EvalReport& report) {
  write_text(layout.report(report.variant, ".json"), train::to_json(report) + "\n");
  write_text(layout.report(report.variant, ".txt"), train::format_table({report}));
}

std::vector<double> distance_edges(const RunConfig& c) {
  return c.distance_edges.empty() ? train::default_distance_edges() : c.distance_edges;
}

}  // namespace

fs::path Layout::vocab() const { return data::vocab_path_for(sessions().string()); }

fs::path Layout::stamp(const std::string& stage) const {
  std::string name = stage;
  for (char& ch : name) {
    if (ch == '/') ch = '_';
  }
  return root / "stamps" / (name + ".json");
}

std::string Layout::fmt_level(graph::Level level, const char* ext) { return graph::to_string(level) + ext; }

bool run_stage(const Layout& layout, const std::string& stage, const std::string& settings,
               const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs, const std::function<void()>& body) {
  std::string material = fmt::format("stage {}\n{}", stage, settings);
  for (const auto& in : inputs) {
    require_file(in, "input");
    material += fmt::format("input {} {}\n", in.filename().string(), sha256_file(in.string()));
  }
  const std::string key = sha256_hex(material);
  const fs::path stamp = layout.stamp(stage);
  if (fs::is_regular_file(stamp)) {
    try {
      const auto j = json::parse(read_text(stamp));
      bool fresh = j.at("key") == key && j.at("outputs").size() == outputs.size();
      for (const auto& out : outputs) {
        if (!fresh) break;
        fresh = fs::is_regular_file(out) && j.at("outputs").value(out.filename().string(), "") == sha256_file(out.string());
      }
      if (fresh) {
        spdlog::info("{}: cached", stage);
        return false;
      }
    } catch (const json::exception&) {
      // unreadable stamp: run the stage again
    }
  }
  spdlog::info("{}: running", stage);
  fs::remove(stamp);
  body();
  json produced = json::object();
  for (const auto& out : outputs) {
    if (!fs::is_regular_file(out)) throw InvariantError(fmt::format("stage {} did not produce '{}'", stage, out.string()));
    produced[out.filename().string()] = sha256_file(out.string());
  }
  write_text(stamp, json{{"stage", stage}, {"key", key}, {"outputs", produced}}.dump(2) + "\n");
  spdlog::info("{}: done", stage);
  return true;
}

Stages::Stages(RunConfig config, Layout layout) : config_(std::move(config)), layout_(std::move(layout)) {}

void Stages::echo_config() const {
  write_text(layout_.config(), config_.to_ini());
}

void Stages::preprocess() {
  config_.validate(true);
  const fs::path input = config_.input;
  run_stage(layout_, "preprocess", config_.sections({"run.mode", "run.header", "run.delimiter", "preprocess"}), {input},
            {layout_.sessions(), layout_.vocab()}, [&] {
              data::ParseOptions options;
              options.mode = config_.mode;
              options.header = config_.header;
              options.delimiter = config_.delimiter;
              auto parsed = data::parse_records(input.string(), options);
              for (const auto& w : parsed.warnings) spdlog::warn("{}", w);
              const std::size_t raw = parsed.records.size();
              auto records = data::filter_users(std::move(parsed.records), config_.min_user_records);
              auto sessions = data::sessionize(records, config_.sessionize);
              const auto dataset = data::build_dataset(sessions, config_.mode, config_.train_fraction);
              if (dataset.sessions.empty()) throw DataError("preprocessing left no sessions");
              spdlog::info("preprocess: {} records ({} malformed), {} users, {} sessions, {} locations", raw,
                           parsed.malformed_lines.size(), dataset.user_count(), dataset.sessions.size(), dataset.location_count());
              fs::create_directories(layout_.root);
              data::write_dataset(dataset, layout_.sessions().string(), layout_.vocab().string());
            });
}

void Stages::graph_embed(graph::Level level) {
  config_.validate(false);
  if (level == graph::Level::kCategory && config_.mode == data::DatasetMode::kCdr) {
    throw DataError("CDR datasets have no categories to embed");
  }
  const auto walk = config_.walk_for(level);
  const fs::path out = layout_.embedding(level);
  run_stage(layout_, "graph-embed/" + graph::to_string(level), config_.sections({"walk"}) + walk.canonical() + "\n",
            {layout_.sessions(), layout_.vocab()}, {out}, [&] {
              const auto dataset = data::read_dataset(layout_.sessions().string(), layout_.vocab().string());
              const auto g = graph::build_transition_graph(dataset, level);
              const auto walks = graph::node2vec_walks(g, walk, config_.workers);
              const auto table = graph::train_skipgram(walks, g.node_count(), walk);
              const auto& ids = level == graph::Level::kLocation ? dataset.vocab.locations.ids() : dataset.vocab.categories.ids();
              graph::EmbeddingHeader header;
              header.level = level;
              header.vocab_size = table.rows;
              header.dim = table.dim;
              header.seed = walk.seed;
              header.config_digest = digest64(walk.canonical());
              header.vocab_digest = graph::vocabulary_digest(ids);
              spdlog::info("graph-embed: {} nodes, {} edges, {} walks", g.node_count(), g.edge_count(), walks.size());
              write_embedding(out.string(), table, header);
            });
}

void Stages::priors() {
  config_.validate(false);
  run_stage(layout_, "priors", config_.sections({"priors"}), {layout_.sessions(), layout_.vocab()}, {layout_.priors()}, [&] {
    const auto dataset = data::read_dataset(layout_.sessions().string(), layout_.vocab().string());
    priors::write_priors(layout_.priors().string(), priors::build_priors(dataset, config_.prior_options()));
  });
}

std::vector<fs::path> Stages::model_inputs() const {
  std::vector<fs::path> in{layout_.sessions(), layout_.vocab(), layout_.priors(), layout_.embedding(graph::Level::kLocation)};
  if (config_.mode == data::DatasetMode::kCheckin) in.push_back(layout_.embedding(graph::Level::kCategory));
  return in;
}

fs::path Stages::train(model::Variant variant) {
  config_.validate(false);
  RunConfig c = config_;
  c.model.variant = variant;
  const std::string tag = model::to_string(variant);
  const fs::path checkpoint = layout_.checkpoint(tag);
  run_stage(layout_, "train/" + tag, c.sections({"model", "train", "preprocess.test_history_includes_test"}), model_inputs(),
            {checkpoint, meta_path(checkpoint)}, [&] {
              const auto a = load_artifacts(layout_);
              const auto ex = experiment(*a, c);
              auto m = train::build_model(ex, variant);
              const auto fit = train::fit(*m, ex.fit_groups, ex.heldout, ex.train, &ex.test);
              spdlog::info("train {}: {} epochs, best {} (held-out loss {:.4f})", tag, fit.curve.size(), fit.best_epoch,
                           fit.best_heldout);
              save_model(checkpoint, *m, model_meta("pg2net", tag, c, fit));
            });
  return checkpoint;
}

void Stages::evaluate(const fs::path& checkpoint) {
  config_.validate(false);
  require_file(meta_path(checkpoint), "checkpoint metadata");
  const auto tag = json::parse(read_text(meta_path(checkpoint))).value("tag", std::string("model"));
  auto inputs = model_inputs();
  inputs.push_back(checkpoint);
  inputs.push_back(meta_path(checkpoint));
  run_stage(layout_, "evaluate/" + tag, config_.sections({"eval", "preprocess.test_history_includes_test"}), inputs,
            {layout_.report(tag, ".json"), layout_.report(tag, ".txt")}, [&] {
              const auto loaded = load_model(layout_, config_, checkpoint);
              const auto records = train::evaluate_model(*loaded.model, loaded.ex.test, config_.workers);
              const auto report = train::summarize(records, tag, loaded.meta.at("seed").get<std::uint64_t>(), config_.user_macro);
              spdlog::info("evaluate {}:\n{}", tag, train::format_table({report}));
              write_report(layout_, report);
            });
}

void Stages::baseline(const std::string& kind) {
  config_.validate(false);
  if (kind == "markov") {
    run_stage(layout_, "baseline/markov", config_.sections({"eval", "preprocess.test_history_includes_test"}),
              {layout_.sessions(), layout_.vocab()}, {layout_.report("markov", ".json"), layout_.report("markov", ".txt")}, [&] {
                const auto dataset = data::read_dataset(layout_.sessions().string(), layout_.vocab().string());
                const auto markov = train::fit_markov(dataset);
                const auto test = data::build_query_groups(dataset, data::Split::kTest, config_.queries);
                write_report(layout_, train::summarize(train::evaluate_markov(markov, test), "markov", config_.seed, config_.user_macro));
              });
  } else if (kind == "lstm") {
    const fs::path checkpoint = layout_.checkpoint("lstm");
    run_stage(layout_, "baseline/lstm", config_.sections({"model", "train", "eval", "preprocess.test_history_includes_test"}),
              model_inputs(),
              {checkpoint, meta_path(checkpoint), layout_.report("lstm", ".json"), layout_.report("lstm", ".txt")}, [&] {
                const auto a = load_artifacts(layout_);
                const auto ex = experiment(*a, config_);
                const auto run = train::run_lstm_baseline(ex);
                save_model(checkpoint, *run.model, model_meta("lstm", "lstm", config_, run.fit));
                write_report(layout_, run.report);
              });
  } else {
    throw DataError(fmt::format("unknown baseline kind '{}' (expected markov or lstm)", kind));
  }
}

void Stages::ablate(const std::vector<model::Variant>& variants) {
  config_.validate(false);
  std::vector<fs::path> parts;
  for (model::Variant v : variants) {
    RunConfig c = config_;
    c.model.variant = v;
    const std::string tag = model::to_string(v);
    const fs::path out = layout_.root / "ablation" / (tag + ".json");
    parts.push_back(out);
    run_stage(layout_, "ablate/" + tag, c.sections({"model", "train", "eval", "preprocess.test_history_includes_test"}),
              model_inputs(), {out}, [&] {
                const auto a = load_artifacts(layout_);
                const auto run = train::run_variant(experiment(*a, c), v);
                spdlog::info("ablate {}: Rec@5 {:.4f}", tag, run.report.recall_at(5));
                write_text(out, train::to_json(run.report, false) + "\n");
              });
  }
  run_stage(layout_, "ablate/summary", "", parts, {layout_.ablation(".json"), layout_.ablation(".txt")}, [&] {
    std::vector<train::EvalReport> reports;
    json all = json::array();
    for (const auto& p : parts) {
      reports.push_back(train::report_from_json(read_text(p)));
      all.push_back(json::parse(read_text(p)));
    }
    write_text(layout_.ablation(".json"), all.dump(2) + "\n");
    write_text(layout_.ablation(".txt"), train::format_table(reports));
  });
}

void Stages::report(const std::string& kind, const std::string& tag) {
  config_.validate(false);
  const fs::path checkpoint = layout_.checkpoint(tag);
  const std::string settings = config_.sections({"eval", "preprocess.test_history_includes_test"});
  if (kind == "loss-curve") {
    run_stage(layout_, "report/loss-curve/" + tag, settings, {meta_path(checkpoint)}, {layout_.loss_curve(tag)}, [&] {
      const auto meta = json::parse(read_text(meta_path(checkpoint)));
      write_text(layout_.loss_curve(tag), train::loss_curve_csv(fit_from_json(meta.at("fit"))));
    });
  } else if (kind == "distance-dist") {
    auto inputs = model_inputs();
    inputs.push_back(layout_.report(tag, ".json"));
    run_stage(layout_, "report/distance-dist/" + tag, settings, inputs, {layout_.histogram(tag)}, [&] {
      const auto a = load_artifacts(layout_);
      const auto report = train::report_from_json(read_text(layout_.report(tag, ".json")));
      const auto test = data::build_query_groups(a->dataset, data::Split::kTest, config_.queries);
      const auto h = train::distance_distribution(test, report.records, a->priors->geo, distance_edges(config_));
      write_text(layout_.histogram(tag), train::to_csv(h));
    });
  } else if (kind == "weights") {
    auto inputs = model_inputs();
    inputs.push_back(checkpoint);
    inputs.push_back(meta_path(checkpoint));
    run_stage(layout_, "report/weights/" + tag, settings, inputs, {layout_.weights(tag)}, [&] {
      const auto loaded = load_model(layout_, config_, checkpoint);
      const auto* m = dynamic_cast<const model::Pg2NetModel*>(loaded.model.get());
      if (!m) throw DataError(fmt::format("weight proportions need a PG2Net checkpoint, '{}' is not one", tag));
      std::string csv = "part,share\n";
      for (const auto& [part, share] : train::weight_proportions(*m, loaded.ex.test)) csv += fmt::format("{},{}\n", part, share);
      write_text(layout_.weights(tag), csv);
    });
  } else {
    throw DataError(fmt::format("unknown report kind '{}' (expected distance-dist, weights or loss-curve)", kind));
  }
}

void Stages::pipeline() {
  config_.validate(true);
  echo_config();
  preprocess();
  graph_embed(graph::Level::kLocation);
  if (config_.mode == data::DatasetMode::kCheckin) graph_embed(graph::Level::kCategory);
  priors();
  const std::string tag = model::to_string(config_.model.variant);
  evaluate(train(config_.model.variant));
  report("loss-curve", tag);
  report("distance-dist", tag);
  report("weights", tag);
}

}  // namespace pg2net::cli

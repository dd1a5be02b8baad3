#include "pg2net/cli/app.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "pg2net/cli/stages.hpp"
#include "pg2net/error.hpp"

namespace pg2net::cli {
namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string sessions;
  std::string input;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
  bool header = false;
  bool verbose = false;

  std::string level;
  std::string variant;
  std::string checkpoint;
  std::string kind;
  bool all = false;
  std::vector<std::string> variants;
};

void common_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Run configuration (INI)")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Run directory (overrides run.output)");
  cmd->add_option("--seed", f.seed, "Root seed (overrides run.seed)");
  cmd->add_option("--workers", f.workers, "Worker threads for walks and evaluation")->check(CLI::PositiveNumber);
  cmd->add_option("--set", f.overrides, "Override one value: section.key=value");
  cmd->add_flag("-v,--verbose", f.verbose, "Debug logging");
}

void input_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.input, "Raw check-in or CDR file");
  cmd->add_option("--mode", f.mode, "Dataset mode")->check(CLI::IsMember({"checkin", "cdr"}));
  cmd->add_flag("--header", f.header, "Input has a header row");
}

void sessions_option(CLI::App* cmd, Flags& f) {
  cmd->add_option("--sessions", f.sessions, "Sessions file (default: <out>/sessions.jsonl)");
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  for (const auto& o : f.overrides) apply_override(c, o);
  if (!f.out.empty()) set_value(c, "run.output", f.out);
  if (!f.input.empty()) set_value(c, "run.input", f.input);
  if (!f.mode.empty()) set_value(c, "run.mode", f.mode);
  if (f.header) set_value(c, "run.header", "true");
  if (f.seed) set_value(c, "run.seed", std::to_string(*f.seed));
  if (f.workers) set_value(c, "run.workers", std::to_string(*f.workers));
  return c;
}

int run(CLI::App& app, Flags& f) {
  RunConfig config = resolve(f);
  Layout layout{config.output, std::nullopt};
  if (!f.sessions.empty()) layout.sessions_override = f.sessions;
  Stages stages(config, layout);
  spdlog::set_level(f.verbose ? spdlog::level::debug : spdlog::level::info);

  const std::string tag = f.variant.empty() ? model::to_string(config.model.variant) : f.variant;
  auto* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  if (name == "pipeline") {
    stages.pipeline();
    return 0;
  }
  config.validate(name == "preprocess");
  stages.echo_config();
  if (name == "preprocess") {
    stages.preprocess();
  } else if (name == "graph-embed") {
    stages.graph_embed(graph::parse_level(f.level));
  } else if (name == "priors") {
    stages.priors();
  } else if (name == "train") {
    stages.train(f.variant.empty() ? config.model.variant : model::parse_variant(f.variant));
  } else if (name == "evaluate") {
    stages.evaluate(f.checkpoint.empty() ? layout.checkpoint(tag) : fs::path(f.checkpoint));
  } else if (name == "baseline") {
    stages.baseline(f.kind);
  } else if (name == "ablate") {
    std::vector<model::Variant> variants;
    if (f.all) variants = model::all_variants();
    for (const auto& v : f.variants) variants.push_back(model::parse_variant(v));
    stages.ablate(variants);
  } else if (name == "report") {
    stages.report(f.kind, tag);
  }
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  spdlog::set_default_logger(spdlog::stderr_logger_mt("pg2net-" + std::to_string(reinterpret_cast<std::uintptr_t>(argv))));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Next-place prediction: preprocessing, graph embeddings, priors, training and evaluation", "pg2net"};
  app.require_subcommand(1);
  Flags f;

  auto* preprocess = app.add_subcommand("preprocess", "Clean, sessionize and index a raw trajectory file");
  common_options(preprocess, f);
  input_options(preprocess, f);

  auto* embed = app.add_subcommand("graph-embed", "Train node2vec vectors for the location or category graph");
  common_options(embed, f);
  sessions_option(embed, f);
  embed->add_option("--level", f.level, "Graph level")->required()->check(CLI::IsMember({"location", "category"}));

  auto* pri = app.add_subcommand("priors", "Build the distance, time-correlation and activity priors");
  common_options(pri, f);
  sessions_option(pri, f);

  auto* train = app.add_subcommand("train", "Train one model variant");
  common_options(train, f);
  sessions_option(train, f);
  train->add_option("--variant", f.variant, "full, GNet, PNet, L, S, no-node2vec or no-aux");

  auto* evaluate = app.add_subcommand("evaluate", "Rank test queries with a checkpoint");
  common_options(evaluate, f);
  sessions_option(evaluate, f);
  evaluate->add_option("--checkpoint", f.checkpoint, "Checkpoint (default: <out>/<variant>.ckpt)");
  evaluate->add_option("--variant", f.variant, "Variant whose checkpoint to use");

  auto* baseline = app.add_subcommand("baseline", "Fit and evaluate a baseline");
  common_options(baseline, f);
  sessions_option(baseline, f);
  baseline->add_option("--kind", f.kind, "Baseline")->required()->check(CLI::IsMember({"markov", "lstm"}));

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate model variants side by side");
  common_options(ablate, f);
  sessions_option(ablate, f);
  auto* all = ablate->add_flag("--all", f.all, "Every variant");
  ablate->add_option("--variant", f.variants, "One variant (repeatable)")->excludes(all);

  auto* report = app.add_subcommand("report", "Write a diagnostic report for a trained model");
  common_options(report, f);
  sessions_option(report, f);
  report->add_option("--kind", f.kind, "Report")->required()->check(CLI::IsMember({"distance-dist", "weights", "loss-curve"}));
  report->add_option("--variant", f.variant, "Model tag (a variant or lstm)");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage in order, reusing up-to-date artifacts");
  common_options(pipeline, f);
  input_options(pipeline, f);

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
    if (ablate->parsed() && !f.all && f.variants.empty()) throw CLI::ValidationError("ablate", "give --all or at least one --variant");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(app, f);
  } catch (const InvariantError& e) {
    spdlog::critical("internal error: {}", e.what());
    return 3;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const ShapeError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed JSON artifact: {}", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return 3;
  }
}

}  // namespace pg2net::cli

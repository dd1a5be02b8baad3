#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pg2net/cli/config.hpp"

namespace pg2net::cli {

namespace fs = std::filesystem;

/// File names inside a run directory.
struct Layout {
  fs::path root;
  std::optional<fs::path> sessions_override;

  fs::path config() const { return root / "config.ini"; }
  fs::path sessions() const { return sessions_override.value_or(root / "sessions.jsonl"); }
  fs::path vocab() const;
  fs::path embedding(graph::Level level) const { return root / fmt_level(level, ".emb"); }
  fs::path priors() const { return root / "priors.bin"; }
  fs::path checkpoint(const std::string& tag) const { return root / (tag + ".ckpt"); }
  fs::path report(const std::string& tag, const char* ext) const { return root / ("report_" + tag + ext); }
  fs::path histogram(const std::string& tag) const { return root / ("distance_" + tag + ".csv"); }
  fs::path weights(const std::string& tag) const { return root / ("weights_" + tag + ".csv"); }
  fs::path loss_curve(const std::string& tag) const { return root / ("loss_curve_" + tag + ".csv"); }
  fs::path ablation(const char* ext) const { return root / (std::string("ablation") + ext); }
  fs::path stamp(const std::string& stage) const;

 private:
  static std::string fmt_level(graph::Level level, const char* ext);
};

/// Sidecar of a checkpoint: what to rebuild before loading it, plus the fit.
inline fs::path meta_path(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".json"); }

/// Runs `body` unless a stamp shows the same inputs already produced the
/// same outputs. Returns true when the stage ran.
bool run_stage(const Layout& layout, const std::string& stage, const std::string& settings,
               const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs, const std::function<void()>& body);

class Stages {
 public:
  Stages(RunConfig config, Layout layout);

  const RunConfig& config() const { return config_; }
  const Layout& layout() const { return layout_; }

  /// Writes the resolved configuration into the run directory.
  void echo_config() const;

  void preprocess();
  void graph_embed(graph::Level level);
  void priors();
  /// Returns the checkpoint path.
  fs::path train(model::Variant variant);
  void evaluate(const fs::path& checkpoint);
  void baseline(const std::string& kind);
  void ablate(const std::vector<model::Variant>& variants);
  void report(const std::string& kind, const std::string& tag);
  void pipeline();

 private:
  std::vector<fs::path> model_inputs() const;

  RunConfig config_;
  Layout layout_;
};

}  // namespace pg2net::cli

#include "pg2net/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pg2net/digest.hpp"

namespace pg2net::cli {
namespace {

struct Field {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

template <typename T>
T parse_number(const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw std::invalid_argument(fmt::format("'{}' is not a valid {}", text, std::is_integral_v<T> ? "non-negative integer" : "number"));
  }
  return value;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument(fmt::format("'{}' is not a boolean", text));
}

std::string show(bool b) { return b ? "true" : "false"; }
std::string show(double d) { return fmt::format("{}", d); }
std::string show(std::size_t n) { return fmt::format("{}", n); }

#define SIZE_FIELD(sec, name, member) \
  Field{sec, name, [](RunConfig& c, const std::string& v) { c.member = parse_number<std::size_t>(v); }, [](const RunConfig& c) { return show(c.member); }}
#define REAL_FIELD(sec, name, member) \
  Field{sec, name, [](RunConfig& c, const std::string& v) { c.member = parse_number<double>(v); }, [](const RunConfig& c) { return show(c.member); }}
#define BOOL_FIELD(sec, name, member) \
  Field{sec, name, [](RunConfig& c, const std::string& v) { c.member = parse_bool(v); }, [](const RunConfig& c) { return show(c.member); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      Field{"run", "input", [](RunConfig& c, const std::string& v) { c.input = trim(v); }, [](const RunConfig& c) { return c.input; }},
      Field{"run", "mode", [](RunConfig& c, const std::string& v) { c.mode = data::parse_mode(trim(v)); },
            [](const RunConfig& c) { return data::to_string(c.mode); }},
      Field{"run", "output", [](RunConfig& c, const std::string& v) { c.output = trim(v); }, [](const RunConfig& c) { return c.output; }},
      Field{"run", "seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); },
            [](const RunConfig& c) { return fmt::format("{}", c.seed); }},
      SIZE_FIELD("run", "workers", workers),
      BOOL_FIELD("run", "header", header),
      Field{"run", "delimiter",
            [](RunConfig& c, const std::string& v) {
              const std::string t = v == "\\t" || trim(v) == "tab" ? "\t" : trim(v);
              if (t.size() != 1) throw std::invalid_argument(fmt::format("'{}' is not a single character", v));
              c.delimiter = t[0];
            },
            [](const RunConfig& c) { return c.delimiter == '\t' ? std::string("tab") : std::string(1, c.delimiter); }},

      SIZE_FIELD("preprocess", "min_user_records", min_user_records),
      Field{"preprocess", "merge_gap_minutes",
            [](RunConfig& c, const std::string& v) { c.sessionize.merge_gap_seconds = 60 * parse_number<std::int64_t>(v); },
            [](const RunConfig& c) { return fmt::format("{}", c.sessionize.merge_gap_seconds / 60); }},
      Field{"preprocess", "window_hours",
            [](RunConfig& c, const std::string& v) { c.sessionize.window_seconds = 3600 * parse_number<std::int64_t>(v); },
            [](const RunConfig& c) { return fmt::format("{}", c.sessionize.window_seconds / 3600); }},
      SIZE_FIELD("preprocess", "min_length", sessionize.min_length),
      SIZE_FIELD("preprocess", "max_length", sessionize.max_length),
      SIZE_FIELD("preprocess", "min_sessions", sessionize.min_sessions),
      SIZE_FIELD("preprocess", "max_sessions", sessionize.max_sessions),
      REAL_FIELD("preprocess", "train_fraction", train_fraction),
      BOOL_FIELD("preprocess", "test_history_includes_test", queries.test_history_includes_test),

      REAL_FIELD("walk", "p", walk.p),
      REAL_FIELD("walk", "q", walk.q),
      SIZE_FIELD("walk", "walks_per_node", walk.walks_per_node),
      SIZE_FIELD("walk", "walk_length", walk.walk_length),
      SIZE_FIELD("walk", "window", walk.window),
      SIZE_FIELD("walk", "negative_samples", walk.negative_samples),
      SIZE_FIELD("walk", "epochs", walk.epochs),
      REAL_FIELD("walk", "learning_rate", walk.learning_rate),
      SIZE_FIELD("walk", "location_dim", location_dim),
      SIZE_FIELD("walk", "category_dim", category_dim),

      REAL_FIELD("priors", "min_distance_km", min_distance_km),
      Field{"priors", "activity",
            [](RunConfig& c, const std::string& v) {
              const std::string t = trim(v);
              if (t == "auto") c.activity = Toggle::kAuto;
              else c.activity = parse_bool(t) ? Toggle::kOn : Toggle::kOff;
            },
            [](const RunConfig& c) {
              return std::string(c.activity == Toggle::kAuto ? "auto" : c.activity == Toggle::kOn ? "on" : "off");
            }},

      SIZE_FIELD("model", "hidden", model.hidden),
      SIZE_FIELD("model", "user_dim", model.user_dim),
      SIZE_FIELD("model", "time_dim", model.time_dim),
      REAL_FIELD("model", "epsilon", model.aux_weight),
      SIZE_FIELD("model", "history_cap", model.history_cap),
      Field{"model", "variant", [](RunConfig& c, const std::string& v) { c.model.variant = model::parse_variant(trim(v)); },
            [](const RunConfig& c) { return model::to_string(c.model.variant); }},

      REAL_FIELD("train", "learning_rate", train.learning_rate),
      REAL_FIELD("train", "weight_decay", train.weight_decay),
      REAL_FIELD("train", "clip_norm", train.clip_norm),
      SIZE_FIELD("train", "epochs", train.epochs),
      SIZE_FIELD("train", "accumulation", train.accumulation),
      SIZE_FIELD("train", "patience", train.patience),

      BOOL_FIELD("eval", "user_macro", user_macro),
      Field{"eval", "distance_edges",
            [](RunConfig& c, const std::string& v) {
              std::vector<double> edges;
              std::stringstream in(v);
              for (std::string part; std::getline(in, part, ',');) edges.push_back(parse_number<double>(part));
              c.distance_edges = std::move(edges);
            },
            [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.distance_edges, ",")); }},
  };
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const auto& f : fields()) {
    if (section == f.section) return true;
  }
  return false;
}

// Returns a problem description, or "" when the value was applied.
std::string assign(RunConfig& c, const std::string& section, const std::string& key, const std::string& value) {
  const std::string path = section + "." + key;
  const Field* f = find_field(section, key);
  if (!f) return known_section(section) ? fmt::format("{}: unknown key", path) : fmt::format("{}: unknown section '{}'", path, section);
  try {
    f->set(c, value);
  } catch (const std::exception& e) {
    return fmt::format("{}: {}", path, e.what());
  }
  c.explicit_keys.insert(path);
  return "";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : DataError(fmt::format("invalid configuration:\n  {}", fmt::join(problems, "\n  "))), problems_(std::move(problems)) {}

std::vector<std::string> RunConfig::problems(bool require_input) const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const char* key, const char* rule) {
    if (!ok) out.push_back(fmt::format("{}: {}", key, rule));
  };
  need(!require_input || !input.empty(), "run.input", "an input path is required");
  need(!output.empty(), "run.output", "must not be empty");
  need(workers >= 1, "run.workers", "must be >= 1");
  need(sessionize.merge_gap_seconds >= 0, "preprocess.merge_gap_minutes", "must be >= 0");
  need(sessionize.window_seconds > 0, "preprocess.window_hours", "must be > 0");
  need(sessionize.min_length >= 1 && sessionize.min_length <= sessionize.max_length, "preprocess.min_length",
       "must be in [1, max_length]");
  need(sessionize.min_sessions >= 2 && sessionize.min_sessions <= sessionize.max_sessions, "preprocess.min_sessions",
       "must be in [2, max_sessions]");
  need(train_fraction > 0.0 && train_fraction < 1.0, "preprocess.train_fraction", "must be in (0, 1)");
  need(walk.p > 0.0, "walk.p", "must be > 0");
  need(walk.q > 0.0, "walk.q", "must be > 0");
  need(walk.walks_per_node >= 1, "walk.walks_per_node", "must be >= 1");
  need(walk.walk_length >= 2, "walk.walk_length", "must be >= 2");
  need(walk.window >= 1, "walk.window", "must be >= 1");
  need(walk.learning_rate > 0.0, "walk.learning_rate", "must be > 0");
  need(location_dim >= 1, "walk.location_dim", "must be >= 1");
  need(category_dim >= 1, "walk.category_dim", "must be >= 1");
  need(min_distance_km > 0.0, "priors.min_distance_km", "must be > 0");
  need(model.hidden >= 1, "model.hidden", "must be >= 1");
  need(model.user_dim >= 1, "model.user_dim", "must be >= 1");
  need(model.time_dim >= 1, "model.time_dim", "must be >= 1");
  need(model.aux_weight >= 0.0 && std::isfinite(model.aux_weight), "model.epsilon", "must be >= 0");
  need(model.history_cap >= 1, "model.history_cap", "must be >= 1");
  need(train.learning_rate > 0.0, "train.learning_rate", "must be > 0");
  need(train.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  need(train.clip_norm > 0.0, "train.clip_norm", "must be > 0");
  need(train.accumulation >= 1, "train.accumulation", "must be >= 1");
  bool edges_ok = true;
  for (std::size_t i = 1; i < distance_edges.size(); ++i) edges_ok = edges_ok && distance_edges[i] > distance_edges[i - 1];
  need(edges_ok && (distance_edges.empty() || distance_edges.front() >= 0.0), "eval.distance_edges",
       "must be non-negative and strictly increasing");

  if (mode == data::DatasetMode::kCdr) {
    need(activity != Toggle::kOn, "priors.activity", "CDR data has no categories, so the activity graph cannot be built");
    need(!explicit_keys.contains("walk.category_dim"), "walk.category_dim", "CDR data has no categories to embed");
  } else {
    need(activity != Toggle::kOff, "priors.activity", "check-in models read the activity graph; it can only be off in CDR mode");
  }
  return out;
}

void RunConfig::validate(bool require_input) const {
  auto list = problems(require_input);
  if (!list.empty()) throw ConfigError(std::move(list));
}

priors::PriorOptions RunConfig::prior_options() const {
  priors::PriorOptions o;
  o.min_distance_km = min_distance_km;
  o.use_activity = mode == data::DatasetMode::kCheckin && activity != Toggle::kOff;
  return o;
}

graph::WalkConfig RunConfig::walk_for(graph::Level level) const {
  graph::WalkConfig w = walk;
  w.embedding_dim = level == graph::Level::kLocation ? location_dim : category_dim;
  w.seed = stage_seed(seed, level == graph::Level::kLocation ? "graph-embed/location" : "graph-embed/category");
  return w;
}

std::string RunConfig::to_ini() const {
  std::string out;
  const char* current = "";
  for (const auto& f : fields()) {
    if (std::string(f.section) != current) {
      if (*current) out += "\n";
      current = f.section;
      out += fmt::format("[{}]\n", current);
    }
    out += fmt::format("{} = {}\n", f.key, f.get(*this));
  }
  return out;
}

std::string RunConfig::sections(std::initializer_list<const char*> names) const {
  std::string out = fmt::format("seed = {}\nmode = {}\n", seed, data::to_string(mode));
  for (const std::string name : names) {
    for (const auto& f : fields()) {
      const std::string path = fmt::format("{}.{}", f.section, f.key);
      if (name == f.section || name == path) out += fmt::format("{} = {}\n", path, f.get(*this));
    }
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({fmt::format("line {}: {}", e.line(), e.message())});
  }
  RunConfig config;
  std::vector<std::string> problems;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      problems.push_back(fmt::format("{}: key outside any section", section));
      continue;
    }
    for (const auto& [key, value] : body) {
      auto p = assign(config, section, key, value.data());
      if (!p.empty()) problems.push_back(std::move(p));
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read config file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void set_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError({fmt::format("{}: expected section.key", key)});
  auto p = assign(config, key.substr(0, dot), key.substr(dot + 1), value);
  if (!p.empty()) throw ConfigError({std::move(p)});
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError({fmt::format("{}: expected section.key=value", assignment)});
  set_value(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

}  // namespace pg2net::cli

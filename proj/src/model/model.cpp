#include "pg2net/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "pg2net/error.hpp"
#include "pg2net/numeric/ops.hpp"

namespace pg2net::model {

namespace ops = numeric::ops;

namespace {

Tensor uniform(numeric::Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(numeric::element_count(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor frozen(const graph::EmbeddingTable& t) { return Tensor::from({t.rows, t.dim}, t.values, false); }

Tensor lookup(Tape& tape, const Tensor& table, Index index) {
  if (index == data::kUnknown) return Tensor::zeros({table.dim(1)});
  return ops::row(tape, table, index);
}

void add_cell(std::vector<NamedTensor>& out, const std::string& prefix, const numeric::LstmCellParams& p) {
  out.push_back({prefix + ".w_input", p.w_input});
  out.push_back({prefix + ".w_hidden", p.w_hidden});
  out.push_back({prefix + ".bias", p.bias});
}

double squared_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.at(i) - b.at(i)) * (a.at(i) - b.at(i));
  return s;
}

void accumulate(Tape& tape, GroupOutput& out, const Tensor& loss) {
  out.loss = out.loss.defined() ? ops::add(tape, out.loss, loss) : loss;
  ++out.trained;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kGNet: return "GNet";
    case Variant::kPNet: return "PNet";
    case Variant::kLong: return "L";
    case Variant::kShort: return "S";
    case Variant::kNoNode2vec: return "no-node2vec";
    case Variant::kNoAux: return "no-aux";
  }
  return "?";
}

Variant parse_variant(const std::string& tag) {
  for (Variant v : all_variants()) {
    if (tag == to_string(v)) return v;
  }
  if (tag == "L-PG2Net") return Variant::kLong;
  if (tag == "S-PG2Net") return Variant::kShort;
  throw DataError("unknown variant '" + tag + "' (expected full, GNet, PNet, L, S, no-node2vec or no-aux)");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::kFull, Variant::kGNet,       Variant::kPNet, Variant::kLong,
                                      Variant::kShort, Variant::kNoNode2vec, Variant::kNoAux};
  return v;
}

std::size_t ModelConfig::concat_dim() const {
  return (uses_personal() ? 2 * hidden : 0) + (uses_long() ? 2 * hidden : 0) + (uses_short() ? hidden : 0) + user_dim;
}

void ModelConfig::validate() const {
  if (user_dim == 0 || location_dim == 0 || time_dim == 0 || hidden == 0 || (has_categories && category_dim == 0)) {
    throw DataError("model dimensions must be positive");
  }
  if (!(aux_weight >= 0.0) || !std::isfinite(aux_weight)) throw DataError("model.epsilon must be >= 0");
  if (history_cap == 0) throw DataError("model.history_cap must be positive");
  if (users == 0 || locations == 0 || (has_categories && categories == 0)) throw DataError("model vocabulary is empty");
}

Pg2NetModel::Pg2NetModel(const ModelConfig& config, const graph::EmbeddingTable& locations,
                         const graph::EmbeddingTable* categories, std::shared_ptr<const priors::PriorBundle> priors,
                         std::uint64_t seed)
    : config_(config), priors_(std::move(priors)) {
  config_.validate();
  if (locations.rows != config_.locations || locations.dim != config_.location_dim) {
    throw DataError(fmt::format("location embedding is {}x{}, model expects {}x{}", locations.rows, locations.dim,
                                config_.locations, config_.location_dim));
  }
  if (config_.has_categories != (categories != nullptr)) throw InvariantError("category table presence must match the config");
  if (categories && (categories->rows != config_.categories || categories->dim != config_.category_dim)) {
    throw DataError(fmt::format("category embedding is {}x{}, model expects {}x{}", categories->rows, categories->dim,
                                config_.categories, config_.category_dim));
  }
  if (!priors_) throw InvariantError("model needs prior weights");
  if (config_.has_categories && !priors_->has_activity) throw DataError("priors lack the activity graph the model needs");

  std::mt19937_64 rng(seed);
  const std::size_t H = config_.hidden;
  user_table = uniform({config_.users, config_.user_dim}, 0.1, rng);
  time_table = uniform({priors::kSlots, config_.time_dim}, 0.1, rng);
  location_table = frozen(locations);
  if (categories) category_table = frozen(*categories);
  history_forward = numeric::LstmCellParams::init(config_.input_dim(), H, rng);
  history_backward = numeric::LstmCellParams::init(config_.input_dim(), H, rng);
  recent_cell = numeric::LstmCellParams::init(config_.input_dim(), H, rng);
  attention_map = uniform({config_.user_dim, 2 * H}, 1.0 / std::sqrt(2.0 * static_cast<double>(H)), rng);
  prediction = Tensor::zeros({config_.locations, config_.concat_dim()}, true);
  aux_head = uniform({config_.location_dim, config_.concat_dim()}, 1.0 / std::sqrt(static_cast<double>(config_.concat_dim())), rng);
}

std::vector<NamedTensor> Pg2NetModel::parameters() const {
  std::vector<NamedTensor> out{{"user_embedding", user_table}, {"time_embedding", time_table}};
  add_cell(out, "history_forward", history_forward);
  add_cell(out, "history_backward", history_backward);
  if (config_.uses_short()) add_cell(out, "recent", recent_cell);
  if (config_.uses_personal()) out.push_back({"attention", attention_map});
  out.push_back({"prediction", prediction});
  out.push_back({"aux_head", aux_head});
  return out;
}

std::vector<ConcatBlock> Pg2NetModel::concat_layout() const {
  std::vector<ConcatBlock> blocks;
  std::size_t at = 0;
  auto push = [&](const char* part, std::size_t width) {
    blocks.push_back({part, at, at + width});
    at += width;
  };
  if (config_.uses_personal()) push("P_u", 2 * config_.hidden);
  if (config_.uses_long()) push("P_L", 2 * config_.hidden);
  if (config_.uses_short()) push("P_S", config_.hidden);
  push("V_u", config_.user_dim);
  return blocks;
}

Tensor Pg2NetModel::embed(Tape& tape, const data::Visit& visit) const {
  if (visit.slot < 0 || visit.slot >= static_cast<int>(priors::kSlots)) throw DataError(fmt::format("slot {} out of range", visit.slot));
  if (visit.location != data::kUnknown && visit.location >= config_.locations) {
    throw DataError(fmt::format("location index {} outside vocabulary", visit.location));
  }
  std::vector<Tensor> parts{lookup(tape, location_table, visit.location),
                            ops::row(tape, time_table, static_cast<std::size_t>(visit.slot))};
  if (config_.has_categories) {
    if (visit.category != data::kUnknown && visit.category >= config_.categories) {
      throw DataError(fmt::format("category index {} outside vocabulary", visit.category));
    }
    parts.push_back(lookup(tape, category_table, visit.category));
  }
  return ops::concat(tape, parts);
}

Tensor Pg2NetModel::encode_history(Tape& tape, const std::vector<data::Visit>& history) const {
  if (history.empty()) throw DataError("encode_history: empty history");
  std::vector<Tensor> inputs;
  inputs.reserve(history.size());
  for (const auto& v : history) inputs.push_back(embed(tape, v));
  const auto fwd = numeric::lstm_sequence(tape, inputs, history_forward);
  const auto bwd = numeric::lstm_sequence(tape, inputs, history_backward, true);
  std::vector<Tensor> columns;
  columns.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) columns.push_back(ops::concat(tape, {fwd[i], bwd[i]}));
  return ops::stack_columns(tape, columns);
}

std::vector<Tensor> Pg2NetModel::encode_recent(Tape& tape, const std::vector<data::Visit>& recent) const {
  if (recent.empty()) throw DataError("encode_recent: empty sequence");
  std::vector<Tensor> inputs;
  inputs.reserve(recent.size());
  for (const auto& v : recent) inputs.push_back(embed(tape, v));
  return numeric::lstm_sequence(tape, inputs, recent_cell);
}

PersonalPreference personalized_preference(Tape& tape, const Tensor& history_states, const Tensor& attention_map,
                                           const Tensor& user_vector) {
  const Tensor query = ops::matmul(tape, ops::transpose(tape, attention_map), user_vector);
  const Tensor scores = ops::matmul(tape, ops::transpose(tape, history_states), query);
  Tensor a = ops::softmax(tape, scores);
  return {ops::matmul(tape, history_states, a), a};
}

Tensor weighted_sum(Tape& tape, const Tensor& states, const std::vector<double>& weights) {
  if (states.rank() != 2 || states.dim(1) != weights.size()) {
    throw ShapeError(fmt::format("weighted_sum: {} weights for states {}", weights.size(), numeric::to_string(states.shape())));
  }
  return ops::matmul(tape, states, Tensor::vector(weights));
}

Tensor sample_loss(Tape& tape, const Tensor& log_probs, Index target, const Tensor& aux, const Tensor& target_vector,
                   double aux_weight) {
  if (target == data::kUnknown || target >= log_probs.size()) throw DataError("sample_loss: target outside vocabulary");
  Tensor nll = ops::scale(tape, ops::pick(tape, log_probs, target), -1.0);
  if (aux_weight == 0.0) return nll;
  const Tensor diff = ops::sub(tape, target_vector, aux);
  return ops::add(tape, nll, ops::scale(tape, ops::dot(tape, diff, diff), aux_weight));
}

GroupOutput Pg2NetModel::forward(Tape& tape, const data::QueryGroup& group, bool details) const {
  if (group.user >= config_.users) throw DataError(fmt::format("user index {} outside vocabulary", group.user));
  if (group.history.empty()) throw DataError("query group has no history");
  const std::size_t keep = std::min(group.history.size(), config_.history_cap);
  const std::vector<data::Visit> history(group.history.end() - static_cast<std::ptrdiff_t>(keep), group.history.end());
  const std::size_t last = group.target_positions.empty() ? 0 : *std::max_element(group.target_positions.begin(), group.target_positions.end());
  if (last >= group.visits.size() || (!group.target_positions.empty() && group.target_positions.front() == 0)) {
    throw InvariantError("query group target positions out of range");
  }

  GroupOutput out;
  const Tensor user = ops::row(tape, user_table, group.user);
  const Tensor hist = encode_history(tape, history);
  Tensor personal;
  if (config_.uses_personal()) {
    auto pref = personalized_preference(tape, hist, attention_map, user);
    personal = pref.preference;
    out.attention = pref.attention;
  }
  std::vector<Tensor> recent_states;
  if (config_.uses_short() && last > 0) {
    recent_states = encode_recent(tape, std::vector<data::Visit>(group.visits.begin(), group.visits.begin() + static_cast<std::ptrdiff_t>(last)));
  }
  const double eps = config_.effective_aux_weight();

  for (std::size_t k : group.target_positions) {
    SampleOutput s;
    s.position = k;
    s.target = group.visits[k].location;
    SampleDetails d;
    const data::Visit& reference = group.visits[k - 1];
    std::vector<Tensor> parts;
    if (config_.uses_personal()) parts.push_back(personal);
    auto group_vector = [&](const Tensor& states, std::span<const data::Visit> seq, std::array<Tensor, 3>& pieces) {
      const auto w = priors::sequence_weights(*priors_, reference, seq);
      pieces[0] = weighted_sum(tape, states, w.distance);
      pieces[1] = weighted_sum(tape, states, w.time);
      Tensor total = ops::add(tape, pieces[0], pieces[1]);
      if (config_.has_categories) {
        pieces[2] = weighted_sum(tape, states, w.activity);
        total = ops::add(tape, total, pieces[2]);
      }
      return total;
    };
    if (config_.uses_long()) {
      d.long_term = group_vector(hist, history, d.long_parts);
      parts.push_back(d.long_term);
    }
    if (config_.uses_short()) {
      const std::vector<Tensor> cols(recent_states.begin(), recent_states.begin() + static_cast<std::ptrdiff_t>(k));
      d.short_term = group_vector(ops::stack_columns(tape, cols), std::span(group.visits).first(k), d.short_parts);
      parts.push_back(d.short_term);
    }
    parts.push_back(user);
    const Tensor concat = ops::concat(tape, parts);
    s.log_probs = ops::log_softmax(tape, ops::matmul(tape, prediction, concat));
    s.aux = ops::matmul(tape, aux_head, concat);
    if (s.target_known()) {
      if (s.target >= config_.locations) throw DataError(fmt::format("target {} outside vocabulary", s.target));
      const Tensor v = ops::row(tape, location_table, s.target);
      s.nll = -s.log_probs.at(s.target);
      s.aux_error = squared_distance(v, s.aux);
      accumulate(tape, out, sample_loss(tape, s.log_probs, s.target, s.aux, v, eps));
    }
    if (details) {
      d.personal = personal;
      s.details = std::move(d);
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

LstmBaseline::LstmBaseline(std::size_t hidden, std::size_t time_dim, const graph::EmbeddingTable& locations,
                           const graph::EmbeddingTable* categories, std::uint64_t seed)
    : locations_(locations.rows) {
  if (hidden == 0 || time_dim == 0) throw DataError("baseline dimensions must be positive");
  std::mt19937_64 rng(seed);
  time_table = uniform({priors::kSlots, time_dim}, 0.1, rng);
  location_table = frozen(locations);
  if (categories) category_table = frozen(*categories);
  const std::size_t in = locations.dim + time_dim + (categories ? categories->dim : 0);
  cell = numeric::LstmCellParams::init(in, hidden, rng);
  head = Tensor::zeros({locations_, hidden}, true);
  head_bias = Tensor::zeros({locations_}, true);
}

std::vector<NamedTensor> LstmBaseline::parameters() const {
  std::vector<NamedTensor> out{{"time_embedding", time_table}};
  add_cell(out, "recent", cell);
  out.push_back({"head", head});
  out.push_back({"head_bias", head_bias});
  return out;
}

GroupOutput LstmBaseline::forward(Tape& tape, const data::QueryGroup& group, bool) const {
  GroupOutput out;
  if (group.target_positions.empty()) return out;
  const std::size_t last = *std::max_element(group.target_positions.begin(), group.target_positions.end());
  if (last >= group.visits.size()) throw InvariantError("query group target positions out of range");
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < last; ++i) {
    const auto& v = group.visits[i];
    if (v.location != data::kUnknown && v.location >= locations_) throw DataError("location index outside vocabulary");
    std::vector<Tensor> parts{lookup(tape, location_table, v.location), ops::row(tape, time_table, static_cast<std::size_t>(v.slot))};
    if (category_table.defined()) parts.push_back(lookup(tape, category_table, v.category));
    inputs.push_back(ops::concat(tape, parts));
  }
  const auto states = numeric::lstm_sequence(tape, inputs, cell);
  for (std::size_t k : group.target_positions) {
    SampleOutput s;
    s.position = k;
    s.target = group.visits[k].location;
    s.log_probs = ops::log_softmax(tape, ops::add(tape, ops::matmul(tape, head, states[k - 1]), head_bias));
    if (s.target_known()) {
      s.nll = -s.log_probs.at(s.target);
      accumulate(tape, out, ops::scale(tape, ops::pick(tape, s.log_probs, s.target), -1.0));
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace pg2net::model

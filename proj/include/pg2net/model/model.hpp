#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pg2net/data/queries.hpp"
#include "pg2net/graph/node2vec.hpp"
#include "pg2net/numeric/lstm.hpp"
#include "pg2net/numeric/optim.hpp"
#include "pg2net/numeric/tape.hpp"
#include "pg2net/priors/priors.hpp"

namespace pg2net::model {

using data::Index;
using numeric::NamedTensor;
using numeric::Tape;
using numeric::Tensor;

/// Model variants. GNet, PNet, L and S drop preference vectors from the
/// prediction input; no-node2vec and no-aux only change the inputs to the
/// full architecture (random frozen tables, ε = 0).
enum class Variant { kFull, kGNet, kPNet, kLong, kShort, kNoNode2vec, kNoAux };

std::string to_string(Variant v);
Variant parse_variant(const std::string& tag);
const std::vector<Variant>& all_variants();

struct ModelConfig {
  std::size_t user_dim = 40;
  std::size_t location_dim = 500;
  std::size_t category_dim = 50;
  std::size_t time_dim = 10;
  std::size_t hidden = 500;
  bool has_categories = true;
  double aux_weight = 0.1;
  std::size_t history_cap = 100;
  Variant variant = Variant::kFull;
  std::size_t users = 0;
  std::size_t locations = 0;
  std::size_t categories = 0;

  bool uses_personal() const { return variant != Variant::kGNet; }
  bool uses_long() const { return variant != Variant::kPNet && variant != Variant::kShort; }
  bool uses_short() const { return variant != Variant::kPNet && variant != Variant::kLong; }
  double effective_aux_weight() const { return variant == Variant::kNoAux ? 0.0 : aux_weight; }

  std::size_t input_dim() const { return location_dim + time_dim + (has_categories ? category_dim : 0); }
  std::size_t concat_dim() const;
  void validate() const;
};

/// Per-sample diagnostics kept when requested.
struct SampleDetails {
  Tensor personal;                 // P_u [2H]
  Tensor long_term;                // P_L [2H]
  Tensor short_term;               // P_S [H]
  std::array<Tensor, 3> long_parts;   // distance, time, activity
  std::array<Tensor, 3> short_parts;  // activity undefined without categories
};

struct SampleOutput {
  std::size_t position = 0;  // index of the target inside the session
  Index target = data::kUnknown;
  Tensor log_probs;          // [locations]
  Tensor aux;                // ĥ [D_l]; undefined for models without the aux head
  double nll = 0.0;          // 0 for unknown targets
  double aux_error = 0.0;    // ‖v − ĥ‖²
  std::optional<SampleDetails> details;

  bool target_known() const { return target != data::kUnknown; }
};

struct GroupOutput {
  std::vector<SampleOutput> samples;
  Tensor loss;  // sum over samples with known targets; undefined when none
  std::size_t trained = 0;
  Tensor attention;  // personal attention weights over history (if used)
};

/// Interface shared by the full model and the recurrent baseline so the
/// training and evaluation code can drive either.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  virtual std::string name() const = 0;
  /// Trainable parameters only, in a stable order.
  virtual std::vector<NamedTensor> parameters() const = 0;
  virtual std::size_t location_count() const = 0;
  virtual GroupOutput forward(Tape& tape, const data::QueryGroup& group, bool details = false) const = 0;
};

/// Column block of the prediction matrix that reads one concatenated part.
struct ConcatBlock {
  std::string part;  // "P_u", "P_L", "P_S", "V_u"
  std::size_t begin;
  std::size_t end;
};

class Pg2NetModel final : public SequenceModel {
 public:
  /// `categories` must be given exactly when the config has categories.
  Pg2NetModel(const ModelConfig& config, const graph::EmbeddingTable& locations,
              const graph::EmbeddingTable* categories, std::shared_ptr<const priors::PriorBundle> priors,
              std::uint64_t seed);

  std::string name() const override { return "pg2net-" + to_string(config_.variant); }
  std::vector<NamedTensor> parameters() const override;
  std::size_t location_count() const override { return config_.locations; }
  GroupOutput forward(Tape& tape, const data::QueryGroup& group, bool details = false) const override;

  const ModelConfig& config() const { return config_; }
  std::vector<ConcatBlock> concat_layout() const;

  /// Multi-modal POI embedding V_l ⊕ V_t (⊕ V_c); unknown ids embed as zeros.
  Tensor embed(Tape& tape, const data::Visit& visit) const;
  /// [2H × n] per-position concatenation of forward and backward states.
  Tensor encode_history(Tape& tape, const std::vector<data::Visit>& history) const;
  /// Recent states h_1..h_m, one per visit.
  std::vector<Tensor> encode_recent(Tape& tape, const std::vector<data::Visit>& recent) const;

  // Parameters, exposed for tests and reports.
  Tensor user_table, time_table;
  Tensor location_table, category_table;  // frozen
  numeric::LstmCellParams history_forward, history_backward, recent_cell;
  Tensor attention_map;  // W_att [D_u × 2H]
  Tensor prediction;     // W_p [locations × concat]
  Tensor aux_head;       // W_aux [D_l × concat]

 private:
  ModelConfig config_;
  std::shared_ptr<const priors::PriorBundle> priors_;
};

/// score_i = (W_att h_i)·u; a = softmax(scores); P_u = Σ a_i h_i.
struct PersonalPreference {
  Tensor preference;
  Tensor attention;
};
PersonalPreference personalized_preference(Tape& tape, const Tensor& history_states, const Tensor& attention_map,
                                           const Tensor& user_vector);

/// H·α for one prior weight vector α (constant).
Tensor weighted_sum(Tape& tape, const Tensor& states, const std::vector<double>& weights);

/// −log p_target + ε‖v − ĥ‖².
Tensor sample_loss(Tape& tape, const Tensor& log_probs, Index target, const Tensor& aux, const Tensor& target_vector,
                   double aux_weight);

/// Recent-sequence-only LSTM with a softmax head (no history, priors,
/// attention or auxiliary loss). Shares the frozen POI tables.
class LstmBaseline final : public SequenceModel {
 public:
  LstmBaseline(std::size_t hidden, std::size_t time_dim, const graph::EmbeddingTable& locations,
               const graph::EmbeddingTable* categories, std::uint64_t seed);

  std::string name() const override { return "lstm"; }
  std::vector<NamedTensor> parameters() const override;
  std::size_t location_count() const override { return locations_; }
  GroupOutput forward(Tape& tape, const data::QueryGroup& group, bool details = false) const override;

  Tensor time_table, location_table, category_table;
  numeric::LstmCellParams cell;
  Tensor head;       // [locations × H]
  Tensor head_bias;  // [locations]

 private:
  std::size_t locations_;
};

}  // namespace pg2net::model

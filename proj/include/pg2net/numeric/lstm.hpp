#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "pg2net/numeric/tape.hpp"
#include "pg2net/numeric/tensor.hpp"

namespace pg2net::numeric {

/// Weights of one LSTM cell. Gate rows are laid out as contiguous blocks of
/// `hidden_size` rows in the order input, forget, cell candidate, output.
struct LstmCellParams {
  Tensor w_input;   // [4H × D_in]
  Tensor w_hidden;  // [4H × H]
  Tensor bias;      // [4H]
  std::size_t hidden_size = 0;

  enum Gate : std::size_t { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };

  std::size_t input_size() const { return w_input.dim(1); }

  /// Uniform(−1/√H, 1/√H) weights and biases, forget-gate bias set to 1.
  static LstmCellParams init(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng);
  static LstmCellParams zeros(std::size_t input_size, std::size_t hidden_size);

  std::vector<Tensor> tensors() const { return {w_input, w_hidden, bias}; }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState zero_state(std::size_t hidden_size);

/// One step of the standard LSTM recurrence:
///   i = σ(Wx+Uh+b)[i], f = σ(..)[f], g = tanh(..)[g], o = σ(..)[o]
///   c' = f⊙c + i⊙g,  h' = o⊙tanh(c')
LstmState lstm_cell(Tape& tape, const Tensor& x, const LstmState& prev, const LstmCellParams& params);

/// Runs the cell over `inputs` from a zero state; returns every hidden state.
std::vector<Tensor> lstm_sequence(Tape& tape, const std::vector<Tensor>& inputs, const LstmCellParams& params,
                                  bool reverse = false);

}  // namespace pg2net::numeric

#include "pg2net/numeric/lstm.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pg2net/error.hpp"
#include "pg2net/numeric/ops.hpp"

namespace pg2net::numeric {

LstmCellParams LstmCellParams::init(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };
  const std::size_t rows = 4 * hidden_size;
  LstmCellParams p;
  p.hidden_size = hidden_size;
  p.w_input = Tensor::from({rows, input_size}, draw(rows * input_size), true);
  p.w_hidden = Tensor::from({rows, hidden_size}, draw(rows * hidden_size), true);
  std::vector<double> bias = draw(rows);
  for (std::size_t j = 0; j < hidden_size; ++j) bias[kForget * hidden_size + j] = 1.0;
  p.bias = Tensor::vector(std::move(bias), true);
  return p;
}

LstmCellParams LstmCellParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  const std::size_t rows = 4 * hidden_size;
  LstmCellParams p;
  p.hidden_size = hidden_size;
  p.w_input = Tensor::zeros({rows, input_size}, true);
  p.w_hidden = Tensor::zeros({rows, hidden_size}, true);
  p.bias = Tensor::zeros({rows}, true);
  return p;
}

LstmState zero_state(std::size_t hidden_size) {
  return {Tensor::zeros({hidden_size}), Tensor::zeros({hidden_size})};
}

LstmState lstm_cell(Tape& tape, const Tensor& x, const LstmState& prev, const LstmCellParams& params) {
  const std::size_t H = params.hidden_size;
  if (x.rank() != 1 || x.size() != params.input_size()) {
    throw ShapeError(fmt::format("lstm_cell: input {} does not match D_in={}", to_string(x.shape()), params.input_size()));
  }
  if (prev.h.size() != H || prev.c.size() != H) {
    throw ShapeError(fmt::format("lstm_cell: state sizes {}/{} do not match H={}", prev.h.size(), prev.c.size(), H));
  }
  Tensor pre = ops::add(tape, ops::add(tape, ops::matmul(tape, params.w_input, x), ops::matmul(tape, params.w_hidden, prev.h)),
                        params.bias);
  auto block = [&](LstmCellParams::Gate g) { return ops::slice(tape, pre, g * H, (g + 1) * H); };
  Tensor i = ops::sigmoid(tape, block(LstmCellParams::kInput));
  Tensor f = ops::sigmoid(tape, block(LstmCellParams::kForget));
  Tensor g = ops::tanh(tape, block(LstmCellParams::kCell));
  Tensor o = ops::sigmoid(tape, block(LstmCellParams::kOutput));
  Tensor c = ops::add(tape, ops::mul(tape, f, prev.c), ops::mul(tape, i, g));
  Tensor h = ops::mul(tape, o, ops::tanh(tape, c));
  return {h, c};
}

std::vector<Tensor> lstm_sequence(Tape& tape, const std::vector<Tensor>& inputs, const LstmCellParams& params,
                                  bool reverse) {
  std::vector<Tensor> hidden(inputs.size());
  LstmState state = zero_state(params.hidden_size);
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    const std::size_t t = reverse ? inputs.size() - 1 - step : step;
    state = lstm_cell(tape, inputs[t], state, params);
    hidden[t] = state.h;
  }
  return hidden;
}

}  // namespace pg2net::numeric

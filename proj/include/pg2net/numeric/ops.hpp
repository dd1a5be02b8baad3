#pragma once

#include <cstddef>
#include <vector>

#include "pg2net/numeric/tape.hpp"
#include "pg2net/numeric/tensor.hpp"

// Differentiable operations. Every op takes the tape first; it records a node
// only when the tape is recording and some input requires a gradient.
namespace pg2net::numeric::ops {

enum class Activation { kSigmoid, kTanh };

/// [m×k]·[k×n] → [m×n]; [m×k]·[k] → [m].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor sum(Tape& tape, const Tensor& a);
Tensor dot(Tape& tape, const Tensor& a, const Tensor& b);

/// Concatenation along `axis` (rank-1 parts use axis 0).
Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis = 0);
/// Elements [begin, end) of a rank-1 tensor.
Tensor slice(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end);
/// Row `index` of a rank-2 table, as a rank-1 tensor.
Tensor row(Tape& tape, const Tensor& table, std::size_t index);
/// Rank-1 columns of equal length → [d × n] matrix.
Tensor stack_columns(Tape& tape, const std::vector<Tensor>& columns);

Tensor activation(Tape& tape, const Tensor& x, Activation kind);
inline Tensor sigmoid(Tape& tape, const Tensor& x) { return activation(tape, x, Activation::kSigmoid); }
inline Tensor tanh(Tape& tape, const Tensor& x) { return activation(tape, x, Activation::kTanh); }

/// Numerically stable softmax over a rank-1 tensor.
Tensor softmax(Tape& tape, const Tensor& scores);
Tensor log_softmax(Tape& tape, const Tensor& scores);
/// Element `index` of a rank-1 tensor as a scalar.
Tensor pick(Tape& tape, const Tensor& a, std::size_t index);

}  // namespace pg2net::numeric::ops

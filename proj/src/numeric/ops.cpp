#include "pg2net/numeric/ops.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pg2net/error.hpp"

namespace pg2net::numeric::ops {
namespace {

// Gradient buffer of a handle copy; tensors captured by closures are const.
std::span<double> grad_of(Tensor t) { return t.mutable_grad(); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, to_string(a.shape()), to_string(b.shape())));
  }
}

void require_rank(const char* op, const Tensor& a, std::size_t rank) {
  if (a.rank() != rank) {
    throw ShapeError(fmt::format("{}: expected rank {}, got {}", op, rank, to_string(a.shape())));
  }
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  if (b.rank() != 1 && b.rank() != 2) throw ShapeError("matmul: right operand must be rank 1 or 2, got " + to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1);
  const std::size_t n = b.rank() == 2 ? b.dim(1) : 1;
  if (b.dim(0) != k) {
    throw ShapeError(fmt::format("matmul: inner dimensions disagree, {} x {}", to_string(a.shape()), to_string(b.shape())));
  }
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  if (n == 1) {
    // matrix-vector: contiguous dot products
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A.data() + i * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * B[p];
      out[i] = acc;
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = A.data() + i * k;
      double* orow = out.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = B.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  }
  Shape shape = b.rank() == 2 ? Shape{m, n} : Shape{m};
  Tensor result = Tensor::from(std::move(shape), std::move(out));
  if (tape.needs_record({&a, &b})) {
    tape.record("matmul", {a.id(), b.id()}, result, [a, b, m, k, n](const Tensor& o) {
      const auto G = o.grad();
      if (n == 1) {
        const auto A = a.data();
        const auto B = b.data();
        if (a.requires_grad()) {
          auto ga = grad_of(a);
          for (std::size_t i = 0; i < m; ++i) {
            const double gi = G[i];
            double* grow = ga.data() + i * k;
            for (std::size_t p = 0; p < k; ++p) grow[p] += gi * B[p];
          }
        }
        if (b.requires_grad()) {
          auto gb = grad_of(b);
          for (std::size_t i = 0; i < m; ++i) {
            const double gi = G[i];
            const double* arow = A.data() + i * k;
            for (std::size_t p = 0; p < k; ++p) gb[p] += arow[p] * gi;
          }
        }
        return;
      }
      if (a.requires_grad()) {
        auto ga = grad_of(a);
        const auto B = b.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
            ga[i * k + p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        auto gb = grad_of(b);
        const auto A = a.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * G[i * n + j];
          }
        }
      }
    });
  }
  return result;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_rank("transpose", a, 2);
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto A = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
  Tensor result = Tensor::from({c, r}, std::move(out));
  if (tape.needs_record({&a})) {
    tape.record("transpose", {a.id()}, result, [a, r, c](const Tensor& o) {
      const auto G = o.grad();
      auto ga = grad_of(a);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += G[j * r + i];
    });
  }
  return result;
}

namespace {

template <typename Fwd, typename Da, typename Db>
Tensor elementwise(Tape& tape, const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Da da, Db db) {
  require_same_shape(name, a, b);
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(A[i], B[i]);
  Tensor result = Tensor::from(a.shape(), std::move(out));
  if (tape.needs_record({&a, &b})) {
    tape.record(name, {a.id(), b.id()}, result, [a, b, da, db](const Tensor& o) {
      const auto G = o.grad();
      const auto A = a.data();
      const auto B = b.data();
      if (a.requires_grad()) {
        auto ga = grad_of(a);
        for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i] * da(A[i], B[i]);
      }
      if (b.requires_grad()) {
        auto gb = grad_of(b);
        for (std::size_t i = 0; i < G.size(); ++i) gb[i] += G[i] * db(A[i], B[i]);
      }
    });
  }
  return result;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(
      tape, "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(
      tape, "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return elementwise(
      tape, "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  Tensor result = Tensor::from(a.shape(), std::move(out));
  if (tape.needs_record({&a})) {
    tape.record("scale", {a.id()}, result, [a, factor](const Tensor& o) {
      const auto G = o.grad();
      auto ga = grad_of(a);
      for (std::size_t i = 0; i < G.size(); ++i) ga[i] += factor * G[i];
    });
  }
  return result;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor result = Tensor::scalar(total);
  if (tape.needs_record({&a})) {
    tape.record("sum", {a.id()}, result, [a](const Tensor& o) {
      const double g = o.grad()[0];
      for (double& v : grad_of(a)) v += g;
    });
  }
  return result;
}

Tensor dot(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  const auto A = a.data();
  const auto B = b.data();
  double total = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) total += A[i] * B[i];
  Tensor result = Tensor::scalar(total);
  if (tape.needs_record({&a, &b})) {
    tape.record("dot", {a.id(), b.id()}, result, [a, b](const Tensor& o) {
      const double g = o.grad()[0];
      const auto A = a.data();
      const auto B = b.data();
      if (a.requires_grad()) {
        auto ga = grad_of(a);
        for (std::size_t i = 0; i < A.size(); ++i) ga[i] += g * B[i];
      }
      if (b.requires_grad()) {
        auto gb = grad_of(b);
        for (std::size_t i = 0; i < A.size(); ++i) gb[i] += g * A[i];
      }
    });
  }
  return result;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: empty sequence of parts");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError(fmt::format("concat: axis {} out of range for {}", axis, to_string(first)));
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) throw ShapeError(fmt::format("concat: incompatible shapes {} and {} along axis {}", to_string(first), to_string(s), axis));
    total += s[axis];
  }
  // View each part as [outer × (len_along_axis · inner)] blocks.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  Shape shape = first;
  shape[axis] = total;
  std::vector<double> out(element_count(shape));
  const std::size_t out_stride = total * inner;
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.dim(axis) * inner;
    const auto P = p.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(P.begin() + o * block, block, out.begin() + o * out_stride + offset);
    offset += block;
  }
  Tensor result = Tensor::from(std::move(shape), std::move(out));
  if (tape.needs_record(parts)) {
    std::vector<const void*> ids;
    for (const Tensor& p : parts) ids.push_back(p.id());
    tape.record("concat", std::move(ids), result, [parts, offsets, outer, inner, out_stride, axis](const Tensor& o) {
      const auto G = o.grad();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!parts[i].requires_grad()) continue;
        auto gp = grad_of(parts[i]);
        const std::size_t block = parts[i].dim(axis) * inner;
        for (std::size_t r = 0; r < outer; ++r)
          for (std::size_t j = 0; j < block; ++j) gp[r * block + j] += G[r * out_stride + offsets[i] + j];
      }
    });
  }
  return result;
}

Tensor slice(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank("slice", a, 1);
  if (begin >= end || end > a.size()) {
    throw ShapeError(fmt::format("slice: range [{}, {}) invalid for {}", begin, end, to_string(a.shape())));
  }
  const auto A = a.data();
  Tensor result = Tensor::vector(std::vector<double>(A.begin() + begin, A.begin() + end));
  if (tape.needs_record({&a})) {
    tape.record("slice", {a.id()}, result, [a, begin](const Tensor& o) {
      const auto G = o.grad();
      auto ga = grad_of(a);
      for (std::size_t i = 0; i < G.size(); ++i) ga[begin + i] += G[i];
    });
  }
  return result;
}

Tensor row(Tape& tape, const Tensor& table, std::size_t index) {
  require_rank("row", table, 2);
  if (index >= table.dim(0)) {
    throw ShapeError(fmt::format("row: index {} out of range for table {}", index, to_string(table.shape())));
  }
  const std::size_t cols = table.dim(1);
  const auto T = table.data();
  Tensor result = Tensor::vector(std::vector<double>(T.begin() + index * cols, T.begin() + (index + 1) * cols));
  if (tape.needs_record({&table})) {
    tape.record("row", {table.id()}, result, [table, index, cols](const Tensor& o) {
      const auto G = o.grad();
      auto gt = grad_of(table);
      for (std::size_t j = 0; j < cols; ++j) gt[index * cols + j] += G[j];
    });
  }
  return result;
}

Tensor stack_columns(Tape& tape, const std::vector<Tensor>& columns) {
  if (columns.empty()) throw ShapeError("stack_columns: no columns");
  const std::size_t d = columns.front().size();
  const std::size_t n = columns.size();
  std::vector<double> out(d * n);
  for (std::size_t j = 0; j < n; ++j) {
    require_rank("stack_columns", columns[j], 1);
    if (columns[j].size() != d) {
      throw ShapeError(fmt::format("stack_columns: column {} has {} rows, expected {}", j, columns[j].size(), d));
    }
    const auto C = columns[j].data();
    for (std::size_t i = 0; i < d; ++i) out[i * n + j] = C[i];
  }
  Tensor result = Tensor::from({d, n}, std::move(out));
  if (tape.needs_record(columns)) {
    std::vector<const void*> ids;
    for (const Tensor& c : columns) ids.push_back(c.id());
    tape.record("stack_columns", std::move(ids), result, [columns, d, n](const Tensor& o) {
      const auto G = o.grad();
      for (std::size_t j = 0; j < n; ++j) {
        if (!columns[j].requires_grad()) continue;
        auto gc = grad_of(columns[j]);
        for (std::size_t i = 0; i < d; ++i) gc[i] += G[i * n + j];
      }
    });
  }
  return result;
}

Tensor activation(Tape& tape, const Tensor& x, Activation kind) {
  const auto X = x.data();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    out[i] = kind == Activation::kSigmoid ? 1.0 / (1.0 + std::exp(-X[i])) : std::tanh(X[i]);
  }
  Tensor result = Tensor::from(x.shape(), std::move(out));
  if (tape.needs_record({&x})) {
    // Derivatives expressed through the saved output y.
    tape.record(kind == Activation::kSigmoid ? "sigmoid" : "tanh", {x.id()}, result, [x, kind](const Tensor& o) {
      const auto G = o.grad();
      const auto Y = o.data();
      auto gx = grad_of(x);
      for (std::size_t i = 0; i < G.size(); ++i) {
        const double y = Y[i];
        gx[i] += G[i] * (kind == Activation::kSigmoid ? y * (1.0 - y) : 1.0 - y * y);
      }
    });
  }
  return result;
}

Tensor softmax(Tape& tape, const Tensor& scores) {
  require_rank("softmax", scores, 1);
  const auto S = scores.data();
  const double peak = *std::max_element(S.begin(), S.end());
  std::vector<double> out(S.size());
  double total = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) total += out[i] = std::exp(S[i] - peak);
  for (double& v : out) v /= total;
  Tensor result = Tensor::from(scores.shape(), std::move(out));
  if (tape.needs_record({&scores})) {
    tape.record("softmax", {scores.id()}, result, [scores](const Tensor& o) {
      const auto G = o.grad();
      const auto Y = o.data();
      double inner = 0.0;
      for (std::size_t i = 0; i < G.size(); ++i) inner += G[i] * Y[i];
      auto gs = grad_of(scores);
      for (std::size_t i = 0; i < G.size(); ++i) gs[i] += Y[i] * (G[i] - inner);
    });
  }
  return result;
}

Tensor log_softmax(Tape& tape, const Tensor& scores) {
  require_rank("log_softmax", scores, 1);
  const auto S = scores.data();
  const double peak = *std::max_element(S.begin(), S.end());
  double total = 0.0;
  for (double s : S) total += std::exp(s - peak);
  const double log_norm = peak + std::log(total);
  std::vector<double> out(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) out[i] = S[i] - log_norm;
  Tensor result = Tensor::from(scores.shape(), std::move(out));
  if (tape.needs_record({&scores})) {
    tape.record("log_softmax", {scores.id()}, result, [scores](const Tensor& o) {
      const auto G = o.grad();
      const auto Y = o.data();
      double gsum = 0.0;
      for (double g : G) gsum += g;
      auto gs = grad_of(scores);
      for (std::size_t i = 0; i < G.size(); ++i) gs[i] += G[i] - std::exp(Y[i]) * gsum;
    });
  }
  return result;
}

Tensor pick(Tape& tape, const Tensor& a, std::size_t index) {
  require_rank("pick", a, 1);
  if (index >= a.size()) throw ShapeError(fmt::format("pick: index {} out of range for {}", index, to_string(a.shape())));
  Tensor result = Tensor::scalar(a.data()[index]);
  if (tape.needs_record({&a})) {
    tape.record("pick", {a.id()}, result, [a, index](const Tensor& o) { grad_of(a)[index] += o.grad()[0]; });
  }
  return result;
}

}  // namespace pg2net::numeric::ops

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "pg2net/numeric/tensor.hpp"

namespace pg2net::numeric {

/// Define-by-run record of differentiable operations.
///
/// Ops append one node per call when recording is on and at least one input
/// requires a gradient. Nodes are appended in execution order, so the
/// sequence is topological by construction. A tape is single-use: backward()
/// consumes it.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& output)>;

  struct Node {
    std::string op;
    std::vector<const void*> inputs;
    Tensor output;
    BackwardFn backward;
  };

  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// True when an op over `inputs` must be recorded.
  bool needs_record(std::initializer_list<const Tensor*> inputs) const;
  bool needs_record(const std::vector<Tensor>& inputs) const;

  void record(std::string op, std::vector<const void*> inputs, Tensor output, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and replays nodes in reverse, accumulating into
  /// every reachable tensor's gradient. Parameter gradients accumulate across
  /// tapes until the owner zeroes them.
  void backward(const Tensor& loss);

  /// Number of node backward functions invoked by the last backward().
  std::size_t replayed() const { return replayed_; }

 private:
  std::vector<Node> nodes_;
  bool recording_;
  bool consumed_ = false;
  std::size_t replayed_ = 0;
};

}  // namespace pg2net::numeric

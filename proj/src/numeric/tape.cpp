#include "pg2net/numeric/tape.hpp"

#include "pg2net/error.hpp"

namespace pg2net::numeric {

bool Tape::needs_record(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

bool Tape::needs_record(const std::vector<Tensor>& inputs) const {
  if (!recording_) return false;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

void Tape::record(std::string op, std::vector<const void*> inputs, Tensor output, BackwardFn fn) {
  if (consumed_) throw InvariantError("recording onto a consumed tape");
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw InvariantError("tape already consumed by a previous backward pass");
  if (loss.size() != 1) throw ShapeError("backward() needs a scalar loss, got " + to_string(loss.shape()));
  if (nodes_.empty() || nodes_.back().output.id() != loss.id()) {
    bool found = false;
    for (const Node& n : nodes_) found = found || n.output.id() == loss.id();
    if (!found) throw InvariantError("loss tensor was not produced on this tape");
  }
  consumed_ = true;
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  replayed_ = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not downstream of anything reaching the loss
    it->backward(it->output);
    ++replayed_;
  }
  // Release saved activations; parameter gradients survive in their owners.
  nodes_.clear();
}

}  // namespace pg2net::numeric

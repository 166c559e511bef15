#include "ngcn/tape.hpp"

#include <string>

#include "ngcn/errors.hpp"

namespace ngcn {

const DenseMatrix& Var::value() const {
  if (!tape_) throw ConfigError("Var::value on an unbound variable");
  return tape_->value(id_);
}

const DenseMatrix& Var::grad() const {
  if (!tape_) throw ConfigError("Var::grad on an unbound variable");
  return tape_->grad(id_);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ConfigError("variable does not belong to this tape");
  }
}

Var Tape::constant(DenseMatrix value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(DenseMatrix value) {
  Node n;
  n.op = "parameter";
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, DenseMatrix value, std::vector<Var> inputs,
                 BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    check_owned(in);
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const DenseMatrix& Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (!backward_done_ || !n.requires_grad) {
    throw ConfigError("no gradient for node " + std::to_string(id) + " (" + std::string(n.op) + ")");
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  check_owned(loss);
  Node& root = nodes_[loss.id()];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ConfigError("backward: loss must be 1x1, got " + std::to_string(root.value.rows()) + "x" +
                      std::to_string(root.value.cols()));
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  root.grad(0, 0) = 1.0;

  std::vector<char> reached(nodes_.size(), 0);
  reached[loss.id()] = 1;
  std::vector<DenseMatrix*> input_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!reached[id] || !n.requires_grad || !n.backward) continue;
    input_grads.assign(n.inputs.size(), nullptr);
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      Node& in = nodes_[n.inputs[i].id()];
      if (in.requires_grad) {
        input_grads[i] = &in.grad;
        reached[n.inputs[i].id()] = 1;
      }
    }
    n.backward(n.grad, input_grads);
  }
}

}  // namespace ngcn

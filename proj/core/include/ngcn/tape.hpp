#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ngcn/dense_matrix.hpp"

namespace ngcn {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

  const DenseMatrix& value() const;
  /// Adjoint after Tape::backward; all-zero if the node was not reached.
  const DenseMatrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Receives the adjoint of an op's output and accumulates into the adjoints
/// of its inputs. `input_grads[i]` is null when input i needs no gradient.
using BackwardFn =
    std::function<void(const DenseMatrix& out_grad, std::span<DenseMatrix* const> input_grads)>;

/// Records a computation in topological order and replays it backwards.
/// Single-threaded; one tape per forward/backward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseMatrix value);
  /// Leaf that receives a gradient.
  Var parameter(DenseMatrix value);

  /// Appends an op node. Inputs must already be on this tape.
  Var record(std::string_view op, DenseMatrix value, std::vector<Var> inputs, BackwardFn backward);

  /// Reverse-mode sweep from a 1x1 loss node. Throws ConfigError otherwise.
  /// Every node that requires a gradient gets exactly one adjoint.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::string_view op(std::size_t id) const { return nodes_.at(id).op; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const DenseMatrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const DenseMatrix& grad(std::size_t id) const;
  std::span<const Var> inputs(std::size_t id) const { return nodes_.at(id).inputs; }

 private:
  struct Node {
    std::string_view op;
    DenseMatrix value;
    DenseMatrix grad;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);
  void check_owned(const Var& v) const;

  // deque keeps references to values stable while the tape grows.
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace ngcn

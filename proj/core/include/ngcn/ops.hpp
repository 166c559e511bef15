#pragma once

// The differentiable op set. Every op records itself on the tape of its
// inputs with an exact backward rule; nothing outside this list (plus spmm in
// graph.hpp) participates in gradients.

#include <cstdint>
#include <span>
#include <vector>

#include "ngcn/dense_matrix.hpp"
#include "ngcn/rng.hpp"
#include "ngcn/tape.hpp"

namespace ngcn {

/// Node indicator: mask[i] != 0 selects row i.
using NodeMask = std::vector<std::uint8_t>;

NodeMask make_mask(std::size_t n, std::span<const std::size_t> nodes);

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var scale(Var x, double factor);
Var relu(Var x);
/// Row-wise softmax with max subtraction.
Var softmax_rows(Var x);
Var concat_cols(std::span<const Var> parts);
/// Rows [begin, end) of x.
Var slice_rows(Var x, std::size_t begin, std::size_t end);
/// Σ_j weights(0, j) · parts[j]; weights is 1xJ.
Var weighted_sum(std::span<const Var> parts, Var weights);
/// Each row divided by max(‖row‖₂, 1e-12).
Var l2_normalize_rows(Var x);
/// Inverted dropout; identity when !training or rate == 0.
Var dropout(Var x, double rate, Rng& rng, bool training);
Var sum(Var x);
Var sum_squares(Var x);

/// Mean over masked rows of -Σ_c y_ic log softmax(logits)_ic.
Var masked_softmax_ce(Var logits, const DenseMatrix& labels, const NodeMask& mask);
/// Mean over masked rows and all columns of binary cross-entropy on logits.
Var masked_sigmoid_ce(Var logits, const DenseMatrix& labels, const NodeMask& mask);
/// Mean over masked rows of -Σ_c y_ic log p_ic for rows that are already
/// probability distributions (p clamped below at 1e-300).
Var masked_nll(Var probs, const DenseMatrix& labels, const NodeMask& mask);

namespace kernels {
DenseMatrix softmax_rows(const DenseMatrix& x);
}

/// Uniform on [-s, s], s = sqrt(6 / (rows + cols)).
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace ngcn

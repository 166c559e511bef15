#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ngcn/dense_matrix.hpp"
#include "ngcn/tape.hpp"

namespace ngcn {

/// Builds a scalar loss from leaf parameters bound on a fresh tape. Must be
/// deterministic: it is re-evaluated for every perturbed entry.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  std::vector<DenseMatrix> analytic;
  std::vector<DenseMatrix> numeric;
  /// Worst per-input relative error, see relative_error().
  double max_rel_error = 0.0;
};

/// ‖a − n‖₂ / max(‖a‖₂, ‖n‖₂, 1e-6). The floor keeps inputs whose true
/// gradient is (numerically) zero from reporting noise as relative error.
double relative_error(const DenseMatrix& analytic, const DenseMatrix& numeric);

/// Compares reverse-mode gradients against central differences with step h.
GradCheckResult check_gradients(const ScalarFn& fn, const std::vector<DenseMatrix>& inputs,
                                double h = 1e-5);

}  // namespace ngcn

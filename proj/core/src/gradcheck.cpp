#include "ngcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ngcn {

namespace {

double evaluate(const ScalarFn& fn, const std::vector<DenseMatrix>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& in : inputs) vars.push_back(tape.parameter(in));
  return fn(tape, vars).value().item();
}

double norm(const DenseMatrix& m) { return std::sqrt(kernels::sum_squares(m)); }

}  // namespace

double relative_error(const DenseMatrix& analytic, const DenseMatrix& numeric) {
  DenseMatrix diff = analytic;
  kernels::axpy(-1.0, numeric, diff);
  const double denom = std::max({norm(analytic), norm(numeric), 1e-6});
  return norm(diff) / denom;
}

GradCheckResult check_gradients(const ScalarFn& fn, const std::vector<DenseMatrix>& inputs,
                                double h) {
  GradCheckResult result;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& in : inputs) vars.push_back(tape.parameter(in));
    Var loss = fn(tape, vars);
    tape.backward(loss);
    for (const auto& v : vars) result.analytic.push_back(v.grad());
  }

  std::vector<DenseMatrix> work = inputs;
  for (std::size_t p = 0; p < work.size(); ++p) {
    DenseMatrix numeric(work[p].rows(), work[p].cols());
    auto vals = work[p].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + h;
      const double plus = evaluate(fn, work);
      vals[i] = orig - h;
      const double minus = evaluate(fn, work);
      vals[i] = orig;
      numeric.values()[i] = (plus - minus) / (2.0 * h);
    }
    result.max_rel_error = std::max(result.max_rel_error, relative_error(result.analytic[p], numeric));
    result.numeric.push_back(std::move(numeric));
  }
  return result;
}

}  // namespace ngcn

#pragma once

// Finite-difference cases for every differentiable op and for the full
// network loss.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ngcn/gradcheck.hpp"
#include "ngcn/graph.hpp"
#include "ngcn/models.hpp"
#include "ngcn/ops.hpp"
#include "ngcn/training.hpp"
#include "test_support.hpp"

namespace ngcn::testing {

struct OpCase {
  std::string name;
  /// Builds random inputs for a case with shape (rows, cols).
  std::function<std::vector<DenseMatrix>(std::size_t, std::size_t, Rng&)> inputs;
  ScalarFn fn;
};

/// rowᵀ · y · col with fixed random vectors, so the scalar depends on every
/// output entry with a distinct weight.
inline Var project(Tape& t, Var y, std::uint64_t seed) {
  Rng rng(seed);
  Var row = t.constant(random_matrix(1, y.rows(), rng));
  Var col = t.constant(random_matrix(y.cols(), 1, rng));
  return matmul(matmul(row, y), col);
}

inline std::vector<DenseMatrix> one_input(std::size_t r, std::size_t c, Rng& rng) { return {random_matrix(r, c, rng)}; }

inline std::vector<OpCase> op_cases() {
  std::vector<OpCase> cases;
  cases.push_back({"matmul",
                   [](std::size_t r, std::size_t c, Rng& rng) {
                     return std::vector<DenseMatrix>{random_matrix(r, c, rng), random_matrix(c, r, rng)};
                   },
                   [](Tape& t, std::span<const Var> in) { return project(t, matmul(in[0], in[1]), 1); }});
  cases.push_back({"add",
                   [](std::size_t r, std::size_t c, Rng& rng) {
                     return std::vector<DenseMatrix>{random_matrix(r, c, rng), random_matrix(r, c, rng)};
                   },
                   [](Tape& t, std::span<const Var> in) { return project(t, add(in[0], in[1]), 2); }});
  cases.push_back({"scale", one_input, [](Tape& t, std::span<const Var> in) { return project(t, scale(in[0], -1.7), 3); }});
  cases.push_back({"relu",
                   [](std::size_t r, std::size_t c, Rng& rng) {
                     // keep entries away from the kink so central differences are exact
                     DenseMatrix m = random_matrix(r, c, rng);
                     for (double& v : m.values()) v += v >= 0 ? 0.1 : -0.1;
                     return std::vector<DenseMatrix>{m};
                   },
                   [](Tape& t, std::span<const Var> in) { return project(t, relu(in[0]), 4); }});
  cases.push_back({"softmax_rows", one_input,
                   [](Tape& t, std::span<const Var> in) { return project(t, softmax_rows(in[0]), 5); }});
  cases.push_back({"concat_cols",
                   [](std::size_t r, std::size_t c, Rng& rng) {
                     return std::vector<DenseMatrix>{random_matrix(r, c, rng), random_matrix(r, 2, rng)};
                   },
                   [](Tape& t, std::span<const Var> in) {
                     std::vector<Var> parts{in[0], in[1], in[0]};
                     return project(t, concat_cols(parts), 6);
                   }});
  cases.push_back({"slice_rows", one_input, [](Tape& t, std::span<const Var> in) {
                     return project(t, slice_rows(in[0], in[0].rows() / 2, in[0].rows()), 7);
                   }});
  cases.push_back({"weighted_sum",
                   [](std::size_t r, std::size_t c, Rng& rng) {
                     return std::vector<DenseMatrix>{random_matrix(r, c, rng), random_matrix(r, c, rng),
                                                     random_matrix(1, 2, rng)};
                   },
                   [](Tape& t, std::span<const Var> in) {
                     std::vector<Var> parts{in[0], in[1]};
                     return project(t, weighted_sum(parts, in[2]), 8);
                   }});
  cases.push_back({"l2_normalize_rows", one_input,
                   [](Tape& t, std::span<const Var> in) { return project(t, l2_normalize_rows(in[0]), 9); }});
  cases.push_back({"sum_squares", one_input, [](Tape&, std::span<const Var> in) { return sum_squares(in[0]); }});
  cases.push_back({"sum", one_input, [](Tape&, std::span<const Var> in) { return scale(sum(in[0]), 0.3); }});
  cases.push_back({"masked_softmax_ce", one_input, [](Tape&, std::span<const Var> in) {
                     DenseMatrix y(in[0].rows(), in[0].cols());
                     NodeMask mask(in[0].rows());
                     for (std::size_t i = 0; i < y.rows(); ++i) {
                       y(i, i % y.cols()) = 1.0;
                       mask[i] = i % 2 == 0;
                     }
                     return masked_softmax_ce(in[0], y, mask);
                   }});
  cases.push_back({"masked_sigmoid_ce", one_input, [](Tape&, std::span<const Var> in) {
                     DenseMatrix y(in[0].rows(), in[0].cols());
                     for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] = (i * 7) % 3 == 0;
                     return masked_sigmoid_ce(in[0], y, NodeMask(in[0].rows(), 1));
                   }});
  cases.push_back({"masked_nll", one_input, [](Tape&, std::span<const Var> in) {
                     DenseMatrix y(in[0].rows(), in[0].cols());
                     for (std::size_t i = 0; i < y.rows(); ++i) y(i, (i + 1) % y.cols()) = 1.0;
                     return masked_nll(softmax_rows(in[0]), y, NodeMask(in[0].rows(), 1));
                   }});
  cases.push_back({"spmm",
                   [](std::size_t r, std::size_t c, Rng& rng) { return std::vector<DenseMatrix>{random_matrix(r, c, rng)}; },
                   [](Tape& t, std::span<const Var> in) {
                     Rng g(in[0].rows());
                     auto a = std::make_shared<const SparseMatrix>(
                         sym_normalize(random_graph(in[0].rows(), 0.4, g)));
                     return project(t, spmm(a, in[0]), 10);
                   }});
  cases.push_back({"walk_apply_k3",
                   [](std::size_t r, std::size_t c, Rng& rng) { return std::vector<DenseMatrix>{random_matrix(r, c, rng)}; },
                   [](Tape& t, std::span<const Var> in) {
                     Rng g(in[0].rows() + 1);
                     auto a = std::make_shared<const SparseMatrix>(
                         rw_normalize(random_graph(in[0].rows(), 0.4, g)));
                     return project(t, walk_apply(WalkOperator{a, 3}, in[0]), 11);
                   }});
  return cases;
}


inline GradCheckResult network_gradcheck(const ModelSpec& spec, const Dataset& d, double l2) {
  const ModelInputs inputs = prepare_inputs(d, spec.normalization);
  Rng init(2);
  ModelParams p = init_params(spec, d.num_features(), d.num_classes(), init);
  if (!p.attention.empty()) {
    for (double& v : p.attention.values()) v = init.uniform(-1, 1);
  }
  std::vector<DenseMatrix> leaves;
  for (const auto* w : p.tensors()) leaves.push_back(*w);
  return check_gradients(
      [&, p](Tape&, std::span<const Var> in) {
        BoundParams b;
        std::size_t i = 0;
        for (const auto& m : p.modules) {
          auto& dst = b.modules.emplace_back();
          for (std::size_t l = 0; l < m.size(); ++l) dst.push_back(in[i++]);
        }
        if (!p.fc.empty()) b.fc = in[i++];
        if (!p.attention.empty()) b.attention = in[i++];
        const auto out = network_forward(spec, b, inputs, ForwardOptions{});
        return total_loss(spec, b, out, d, make_mask(d.n, d.split.train), l2);
      },
      leaves);
}


}  // namespace ngcn::testing

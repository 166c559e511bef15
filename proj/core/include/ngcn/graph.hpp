#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "ngcn/dense_matrix.hpp"
#include "ngcn/rng.hpp"
#include "ngcn/tape.hpp"

namespace ngcn {

/// Compressed sparse row matrix. Adjacency operators are square; feature
/// matrices reuse the type with rows = nodes, cols = features.
///
/// Invariants: row_ptr has rows + 1 monotone entries starting at 0, column
/// indices are < cols and strictly increasing within a row (so no duplicate
/// (row, col) pairs).
class SparseMatrix {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::size_t> col_idx, std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  /// Keeps exactly the nonzero entries.
  static SparseMatrix from_dense(const DenseMatrix& dense);
  /// Entries sharing (row, col) are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  /// Node count of a square operator; throws ConfigError if not square.
  std::size_t n() const;
  std::size_t nnz() const noexcept { return values_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Same structure, new values.
  SparseMatrix with_values(std::vector<double> values) const;
  SparseMatrix transpose() const;
  DenseMatrix to_dense() const;
  std::vector<double> row_sums() const;
  /// (i,j) stored ⇔ (j,i) stored.
  bool structurally_symmetric() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

using Edge = std::pair<std::size_t, std::size_t>;

/// Binary adjacency from an edge list. Duplicates merge to weight 1;
/// `symmetrize` adds (j,i) for every (i,j); `self_loops` sets A_ii = 1.
/// Throws DataError on node ids outside [0, n).
SparseMatrix build_graph(std::span<const Edge> edges, std::size_t n, bool symmetrize, bool self_loops);

/// D^{-1/2} A D^{-1/2} with d = row sums of A. Throws DataError on a zero row.
SparseMatrix sym_normalize(const SparseMatrix& a);
/// D^{-1} A. Throws DataError on a zero row.
SparseMatrix rw_normalize(const SparseMatrix& a);

namespace kernels {
/// s · h
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& h);
/// sᵀ · g without materializing the transpose.
DenseMatrix spmm_transposed(const SparseMatrix& s, const DenseMatrix& g);
}  // namespace kernels

/// Taped s · h with dH = sᵀ · G. The sparse operand is shared so it outlives
/// the backward pass.
Var spmm(std::shared_ptr<const SparseMatrix> s, Var h);
Var spmm(const SparseMatrix& s, Var h);

/// Inverted dropout over the stored entries of a constant sparse matrix
/// (structure kept, dropped entries stored as zero).
SparseMatrix sparse_dropout(const SparseMatrix& s, double rate, Rng& rng);

/// The k-th power of a normalized adjacency, applied implicitly as k
/// successive sparse products. power == 0 is the identity.
struct WalkOperator {
  std::shared_ptr<const SparseMatrix> base;
  int power = 0;
};

Var walk_apply(const WalkOperator& op, Var h);
DenseMatrix walk_apply(const WalkOperator& op, const DenseMatrix& h);

/// Dense s^k by repeated naive multiplication. Test oracle; n ≤ 200.
DenseMatrix dense_power_oracle(const SparseMatrix& s, int k);

}  // namespace ngcn

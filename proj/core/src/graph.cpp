#include "ngcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ngcn/errors.hpp"

namespace ngcn {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size()) {
    throw ConfigError("SparseMatrix: inconsistent CSR arrays");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) throw ConfigError("SparseMatrix: row_ptr not monotone");
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw ConfigError("SparseMatrix: column index out of range");
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1]) {
        throw ConfigError("SparseMatrix: unsorted or duplicate column in row " + std::to_string(r));
      }
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> ptr(n + 1), idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    ptr[i + 1] = i + 1;
    idx[i] = i;
  }
  return SparseMatrix(n, n, std::move(ptr), std::move(idx), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<std::size_t> ptr{0}, idx;
  std::vector<double> vals;
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    auto r = dense.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] != 0.0) {
        idx.push_back(j);
        vals.push_back(r[j]);
      }
    }
    ptr.push_back(idx.size());
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(ptr), std::move(idx), std::move(vals));
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw ConfigError("from_triplets: index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> ptr(rows + 1, 0), idx;
  std::vector<double> vals;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && t.row == triplets[k - 1].row && t.col == triplets[k - 1].col) {
      vals.back() += t.value;
      continue;
    }
    idx.push_back(t.col);
    vals.push_back(t.value);
    ++ptr[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) ptr[r + 1] += ptr[r];
  return SparseMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(vals));
}

std::size_t SparseMatrix::n() const {
  if (!square()) {
    throw ConfigError("expected a square operator, got " + std::to_string(rows_) + "x" +
                      std::to_string(cols_));
  }
  return rows_;
}

SparseMatrix SparseMatrix::with_values(std::vector<double> values) const {
  return SparseMatrix(rows_, cols_, row_ptr_, col_idx_, std::move(values));
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++ptr[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) ptr[c + 1] += ptr[c];
  std::vector<std::size_t> idx(nnz()), fill(ptr.begin(), ptr.end() - 1);
  std::vector<double> vals(nnz());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t dst = fill[col_idx_[k]]++;
      idx[dst] = r;
      vals[dst] = values_[k];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(vals));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) = values_[k];
  return d;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> sums(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) sums[r] += values_[k];
  return sums;
}

bool SparseMatrix::structurally_symmetric() const {
  if (!square()) return false;
  const SparseMatrix t = transpose();
  return t.row_ptr_ == row_ptr_ && t.col_idx_ == col_idx_;
}

SparseMatrix build_graph(std::span<const Edge> edges, std::size_t n, bool symmetrize, bool self_loops) {
  std::vector<SparseMatrix::Triplet> trips;
  trips.reserve(edges.size() * (symmetrize ? 2 : 1) + (self_loops ? n : 0));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [src, dst] = edges[e];
    if (src >= n || dst >= n) {
      throw DataError("edge " + std::to_string(e) + " (" + std::to_string(src) + ", " +
                      std::to_string(dst) + ") references a node outside [0, " + std::to_string(n) +
                      ")");
    }
    trips.push_back({src, dst, 1.0});
    if (symmetrize) trips.push_back({dst, src, 1.0});
  }
  if (self_loops) {
    for (std::size_t i = 0; i < n; ++i) trips.push_back({i, i, 1.0});
  }
  SparseMatrix merged = SparseMatrix::from_triplets(n, n, std::move(trips));
  return merged.with_values(std::vector<double>(merged.nnz(), 1.0));
}

namespace {

std::vector<double> checked_degrees(const SparseMatrix& a, const char* op) {
  a.n();
  std::vector<double> d = a.row_sums();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      throw DataError(std::string(op) + ": node " + std::to_string(i) + " has row sum " +
                      std::to_string(d[i]));
    }
  }
  return d;
}

}  // namespace

SparseMatrix sym_normalize(const SparseMatrix& a) {
  const std::vector<double> d = checked_degrees(a, "sym_normalize");
  std::vector<double> vals(a.nnz());
  auto ptr = a.row_ptr();
  auto idx = a.col_idx();
  auto v = a.values();
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) vals[k] = v[k] / std::sqrt(d[r] * d[idx[k]]);
  return a.with_values(std::move(vals));
}

SparseMatrix rw_normalize(const SparseMatrix& a) {
  const std::vector<double> d = checked_degrees(a, "rw_normalize");
  std::vector<double> vals(a.nnz());
  auto ptr = a.row_ptr();
  auto v = a.values();
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) vals[k] = v[k] / d[r];
  return a.with_values(std::move(vals));
}

namespace kernels {

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& h) {
  if (s.cols() != h.rows()) {
    throw ConfigError("spmm: sparse " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                      " x dense " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
  }
  DenseMatrix out(s.rows(), h.cols());
  auto ptr = s.row_ptr();
  auto idx = s.col_idx();
  auto val = s.values();
  const std::size_t w = h.cols();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double* o = out.row(r).data();
    for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) {
      const double a = val[k];
      const double* hr = h.row(idx[k]).data();
      for (std::size_t j = 0; j < w; ++j) o[j] += a * hr[j];
    }
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseMatrix& s, const DenseMatrix& g) {
  if (s.rows() != g.rows()) {
    throw ConfigError("spmm_transposed: sparse " + std::to_string(s.rows()) + "x" +
                      std::to_string(s.cols()) + "^T x dense " + std::to_string(g.rows()) + "x" +
                      std::to_string(g.cols()));
  }
  DenseMatrix out(s.cols(), g.cols());
  auto ptr = s.row_ptr();
  auto idx = s.col_idx();
  auto val = s.values();
  const std::size_t w = g.cols();
  for (std::size_t r = 0; r < s.rows(); ++r) {
    const double* gr = g.row(r).data();
    for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) {
      const double a = val[k];
      if (a == 0.0) continue;
      double* o = out.row(idx[k]).data();
      for (std::size_t j = 0; j < w; ++j) o[j] += a * gr[j];
    }
  }
  return out;
}

}  // namespace kernels

Var spmm(std::shared_ptr<const SparseMatrix> s, Var h) {
  if (!s) throw ConfigError("spmm: null sparse operand");
  if (!h.valid()) throw ConfigError("spmm: unbound variable");
  DenseMatrix out = kernels::spmm(*s, h.value());
  return h.tape()->record("spmm", std::move(out), {h},
                          [s](const DenseMatrix& g, std::span<DenseMatrix* const> grads) {
                            if (grads[0]) kernels::axpy(1.0, kernels::spmm_transposed(*s, g), *grads[0]);
                          });
}

Var spmm(const SparseMatrix& s, Var h) { return spmm(std::make_shared<const SparseMatrix>(s), h); }

SparseMatrix sparse_dropout(const SparseMatrix& s, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("sparse_dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> vals(s.values().begin(), s.values().end());
  for (double& v : vals) v = rng.bernoulli(rate) ? 0.0 : v * keep_scale;
  return s.with_values(std::move(vals));
}

Var walk_apply(const WalkOperator& op, Var h) {
  if (op.power < 0) throw ConfigError("walk_apply: negative power");
  if (op.power > 0 && !op.base) throw ConfigError("walk_apply: missing base operator");
  for (int k = 0; k < op.power; ++k) h = spmm(op.base, h);
  return h;
}

DenseMatrix walk_apply(const WalkOperator& op, const DenseMatrix& h) {
  if (op.power < 0) throw ConfigError("walk_apply: negative power");
  if (op.power > 0 && !op.base) throw ConfigError("walk_apply: missing base operator");
  DenseMatrix out = h;
  for (int k = 0; k < op.power; ++k) out = kernels::spmm(*op.base, out);
  return out;
}

DenseMatrix dense_power_oracle(const SparseMatrix& s, int k) {
  const std::size_t n = s.n();
  if (n > 200) throw ConfigError("dense_power_oracle: n = " + std::to_string(n) + " exceeds 200");
  if (k < 0) throw ConfigError("dense_power_oracle: negative power");
  const DenseMatrix base = s.to_dense();
  DenseMatrix out = DenseMatrix::identity(n);
  for (int step = 0; step < k; ++step) {
    DenseMatrix next(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) acc += out(i, m) * base(m, j);
        next(i, j) = acc;
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace ngcn

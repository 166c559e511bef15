#include "ngcn/dense_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ngcn/errors.hpp"

namespace ngcn {

namespace {

std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ConfigError("DenseMatrix: data length " + std::to_string(data_.size()) +
                      " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ConfigError("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double DenseMatrix::item() const {
  if (rows_ != 1 || cols_ != 1) throw ConfigError("item() on non-scalar " + shape_str(*this));
  return data_[0];
}

namespace kernels {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    auto arow = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ConfigError("matmul_at_b: " + shape_str(a) + "^T x " + shape_str(b));
  }
  DenseMatrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto arow = a.row(r);
    auto brow = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = arow[i];
      if (ari == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += ari * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ConfigError("matmul_a_bt: " + shape_str(a) + " x " + shape_str(b) + "^T");
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void axpy(double alpha, const DenseMatrix& src, DenseMatrix& dst) {
  if (!src.same_shape(dst)) {
    throw ConfigError("axpy: " + shape_str(src) + " vs " + shape_str(dst));
  }
  auto s = src.values();
  auto d = dst.values();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] += alpha * s[i];
}

double sum_squares(const DenseMatrix& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v * v;
  return acc;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw ConfigError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  }
  double m = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

bool all_finite(const DenseMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace kernels
}  // namespace ngcn

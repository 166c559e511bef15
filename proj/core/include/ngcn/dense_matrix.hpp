#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ngcn {

/// Row-major matrix of doubles. Holds features, activations, weights and
/// logits; scalars are 1x1.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix scalar(double v) { return DenseMatrix(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  /// Only valid for 1x1 matrices.
  double item() const;

  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Untaped kernels. All dimension checks throw ConfigError.
namespace kernels {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ·b without materializing the transpose.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// a·bᵀ without materializing the transpose.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// dst += alpha * src
void axpy(double alpha, const DenseMatrix& src, DenseMatrix& dst);

double sum_squares(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
bool all_finite(const DenseMatrix& a);

}  // namespace kernels
}  // namespace ngcn

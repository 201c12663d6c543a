#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gridtrack/error.hpp"

namespace gridtrack {

/// Dense row-major matrix of doubles. Vectors are stored as n x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  void fill(double v) noexcept {
    for (auto& x : data_) x = v;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out += m * x
inline void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> out) noexcept {
  const std::size_t cols = m.cols();
  const double* p = m.data().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += p[c] * x[c];
    out[r] += s;
  }
}

/// out += m^T * y
inline void gemv_t_acc(const Matrix& m, std::span<const double> y, std::span<double> out) noexcept {
  const std::size_t cols = m.cols();
  const double* p = m.data().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) out[c] += p[c] * yr;
  }
}

/// m += y x^T
inline void outer_acc(Matrix& m, std::span<const double> y, std::span<const double> x) noexcept {
  const std::size_t cols = m.cols();
  double* p = m.data().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) p[c] += yr * x[c];
  }
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace gridtrack

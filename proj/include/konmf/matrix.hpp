// konmf — kernel-based orthogonal NMF for subspace clustering
// SPDX-License-Identifier: Apache-2.0

#ifndef KONMF_MATRIX_HPP
#define KONMF_MATRIX_HPP

#include <cstddef>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace konmf {

/// Dense row-major matrix of 64-bit reals. The one container every other
/// module builds on; views are computed, never stored.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  double* row(std::size_t i) { return data_.data() + i * cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool is_nonneg() const {
    for (double v : data_)
      if (!(v >= 0.0)) return false;  // also rejects NaN
    return true;
  }

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {
[[noreturn]] inline void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": dimension mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
}
}  // namespace detail

/// Standard product a·b. ikj loop order keeps the inner loop contiguous.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) detail::shape_error("matmul", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double v = ai[l];
      if (v == 0.0) continue;
      const double* bl = b.row(l);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += v * bl[j];
    }
  }
  return c;
}

/// aᵀ·b without materializing the transpose.
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) detail::shape_error("matmul_at_b", a, b);
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double v = ai[l];
      if (v == 0.0) continue;
      double* cl = c.row(l);
      for (std::size_t j = 0; j < b.cols(); ++j) cl[j] += v * bi[j];
    }
  }
  return c;
}

/// a·bᵀ; both operands are walked along contiguous rows.
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) detail::shape_error("matmul_a_bt", a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += ai[l] * bj[l];
      ci[j] = s;
    }
  }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// Tr(a·b) = Σᵢⱼ aᵢⱼ·bⱼᵢ, without materializing the product.
inline double trace_of_product(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || b.cols() != a.rows()) detail::shape_error("trace_of_product", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
  return s;
}

/// result = target ⊙ numerator ⊘ (denominator + eps). The elementwise core of
/// every multiplicative rule; eps keeps a collapsed factor row from dividing
/// by zero.
inline Matrix hadamard_update(const Matrix& target, const Matrix& numerator,
                              const Matrix& denominator, double eps) {
  if (!target.same_shape(numerator)) detail::shape_error("hadamard_update", target, numerator);
  if (!target.same_shape(denominator)) detail::shape_error("hadamard_update", target, denominator);
  if (!(eps >= 0.0)) throw std::invalid_argument("hadamard_update: eps must be >= 0");
  Matrix out(target.rows(), target.cols());
  const std::size_t n = target.size();
  const double* t = target.data().data();
  const double* num = numerator.data().data();
  const double* den = denominator.data().data();
  double* o = out.data().data();
  for (std::size_t i = 0; i < n; ++i) o[i] = t[i] * num[i] / (den[i] + eps);
  return out;
}

inline double frobenius_norm_sq(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

/// Frobenius inner product Σᵢⱼ aᵢⱼ·bᵢⱼ. Handy identity: Tr(A·Bᵀ) = <A,B>.
inline double frobenius_inner(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) detail::shape_error("frobenius_inner", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

/// Column j scaled by s[j].
inline Matrix scale_columns(const Matrix& a, std::span<const double> s) {
  if (s.size() != a.cols())
    throw std::invalid_argument("scale_columns: need " + std::to_string(a.cols()) +
                                " factors, got " + std::to_string(s.size()));
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* r = out.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] *= s[j];
  }
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) detail::shape_error("add", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) detail::shape_error("subtract", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

inline Matrix scale(const Matrix& a, double c) {
  Matrix out = a;
  for (double& v : out.data()) v *= c;
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) detail::shape_error("max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace konmf

#endif  // KONMF_MATRIX_HPP

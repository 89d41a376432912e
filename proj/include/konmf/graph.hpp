// konmf — kernel-based orthogonal NMF for subspace clustering
// SPDX-License-Identifier: Apache-2.0

#ifndef KONMF_GRAPH_HPP
#define KONMF_GRAPH_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "konmf/dataset.hpp"
#include "konmf/matrix.hpp"

namespace konmf {

struct KernelSpec {
  enum class Kind { gaussian, linear };
  Kind kind = Kind::gaussian;
  double sigma = 1.0;  // gaussian width, used as sigma^2 in the denominator

  static KernelSpec gaussian(double sigma) { return {Kind::gaussian, sigma}; }
  static KernelSpec linear() { return {Kind::linear, 0.0}; }
};

/// n×n Gram matrix K = Φᵀ(X)Φ(X); doubles as the graph affinity A.
struct KernelMatrix {
  Matrix k;
  std::size_t n() const { return k.rows(); }
};

/// Affinity A, its degrees, and the two Laplacians L = D − A and
/// L_sym = D^{-1/2} L D^{-1/2}.
struct GraphSet {
  Matrix affinity;
  std::vector<double> degree;
  Matrix laplacian;
  Matrix laplacian_sym;
  std::vector<double> inv_sqrt_degree;  // cached d^{-1/2}, valid by construction
};

/// K(x_i,x_j) = exp(−‖x_i − x_j‖²/σ²) for the gaussian kernel (σ², not 2σ²),
/// or the plain inner product XᵀX for the linear kernel. Columns of x are
/// samples. The linear kernel requires X ≥ 0; the gaussian path accepts any
/// real X because downstream quantities depend on X only through K > 0.
inline KernelMatrix build_kernel(const DataMatrix& x, const KernelSpec& spec) {
  const Matrix& m = x.matrix;
  const std::size_t dim = m.rows();
  const std::size_t n = m.cols();
  if (n < 2) throw std::invalid_argument("build_kernel: need at least 2 samples, got " + std::to_string(n));

  Matrix k(n, n);
  if (spec.kind == KernelSpec::Kind::gaussian) {
    if (!(spec.sigma > 0.0))
      throw std::invalid_argument("build_kernel: gaussian sigma must be > 0, got " + std::to_string(spec.sigma));
    const double inv_s2 = 1.0 / (spec.sigma * spec.sigma);
    for (std::size_t i = 0; i < n; ++i) {
      k(i, i) = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < dim; ++f) {
          const double d = m(f, i) - m(f, j);
          d2 += d * d;
        }
        const double v = std::exp(-d2 * inv_s2);
        k(i, j) = v;
        k(j, i) = v;
      }
    }
  } else {
    if (!x.nonneg)
      throw std::invalid_argument("build_kernel: linear kernel requires non-negative data "
                                  "(use a min-shift or the gaussian kernel)");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t f = 0; f < dim; ++f) s += m(f, i) * m(f, j);
        k(i, j) = s;
        k(j, i) = s;
      }
    }
  }
  return {std::move(k)};
}

/// Degrees d_i = Σ_j A_ij, L = D − A and L_sym from a symmetric non-negative
/// affinity. The affinity diagonal is kept as-is (gaussian diagonal 1 forces
/// d_i ≥ 1, so D^{-1/2} is always defined).
inline GraphSet build_graph_set(const KernelMatrix& a, double eps = 1e-12) {
  const Matrix& k = a.k;
  const std::size_t n = k.rows();
  if (k.rows() != k.cols())
    throw std::invalid_argument("build_graph_set: affinity must be square, got " + k.shape_str());

  GraphSet g;
  g.affinity = k;
  g.degree.resize(n);
  g.inv_sqrt_degree.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += k(i, j);
    if (!(d > eps))
      throw std::invalid_argument("build_graph_set: degenerate graph, degree[" + std::to_string(i) +
                                  "] = " + std::to_string(d));
    g.degree[i] = d;
    g.inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
  }

  g.laplacian = Matrix(n, n);
  g.laplacian_sym = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double l = (i == j ? g.degree[i] : 0.0) - k(i, j);
      g.laplacian(i, j) = l;
      g.laplacian_sym(i, j) = g.inv_sqrt_degree[i] * l * g.inv_sqrt_degree[j];
    }
  }
  return g;
}

/// K·D^{-1/2}: column j of K scaled by d_j^{-1/2}. Precomputed once for the
/// Ncut numerator so the update loop never touches D.
inline Matrix scaled_kernel_ncut(const KernelMatrix& k, const GraphSet& g) {
  if (g.degree.size() != k.n())
    throw std::invalid_argument("scaled_kernel_ncut: kernel is " + k.k.shape_str() + " but graph has " +
                                std::to_string(g.degree.size()) + " degrees");
  return scale_columns(k.k, g.inv_sqrt_degree);
}

}  // namespace konmf

#endif  // KONMF_GRAPH_HPP

// SPDX-License-Identifier: Apache-2.0
//
// Shared test utilities: generators, brute-force oracles, and the explicit
// input-space objective route used to cross-check the kernel-trace objective.
// Everything here stays independent of the implementation paths it checks.

#ifndef KONMF_TESTS_HELPERS_HPP
#define KONMF_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "konmf/cluster.hpp"
#include "konmf/factorize.hpp"
#include "konmf/graph.hpp"
#include "konmf/matrix.hpp"
#include "konmf/random.hpp"

namespace testutil {

inline konmf::Matrix random_matrix(konmf::Rng& rng, std::size_t r, std::size_t c, double lo = 0.0,
                                   double hi = 1.0) {
  konmf::Matrix m(r, c);
  for (double& v : m.data()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

inline konmf::Matrix random_int_matrix(konmf::Rng& rng, std::size_t r, std::size_t c, int lo, int hi) {
  konmf::Matrix m(r, c);
  for (double& v : m.data())
    v = static_cast<double>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo))));
  return m;
}

/// Exhaustive assignment search, first-found strict improvement over the
/// lexicographic enumeration of permutations: returns the lexicographically
/// smallest optimal permutation, which is exactly the tie-break the solver
/// promises.
inline std::pair<std::vector<std::size_t>, double> brute_force_assignment(const konmf::Matrix& cost) {
  const std::size_t k = cost.rows();
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < k; ++i) c += cost(i, perm[i]);
    if (c < best_cost - 1e-12) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_cost};
}

/// Central finite differences of a scalar function of a matrix entry.
inline konmf::Matrix finite_diff(const std::function<double(const konmf::Matrix&)>& f,
                                 konmf::Matrix at, double step) {
  konmf::Matrix g(at.rows(), at.cols());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = at.data()[i];
    at.data()[i] = orig + step;
    const double up = f(at);
    at.data()[i] = orig - step;
    const double down = f(at);
    at.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Explicit feature-map objective for the linear kernel (Φ = identity):
/// α‖X·S − X·F·H‖²_F + μ‖HHᵀ − I‖²_F + λ·Tr(HLHᵀ), with S = D^{-1/2} for the
/// Ncut variant and S = I otherwise. Works directly in input space, never
/// through K, so it is an independent route for Theorem-style consistency
/// checks.
inline double explicit_linear_objective(konmf::Variant v, const konmf::Matrix& x,
                                        const konmf::FactorState& s, const konmf::GraphSet& g,
                                        const konmf::HyperParams& hp) {
  konmf::Matrix target = x;
  if (v == konmf::Variant::knsc_ncut) target = konmf::scale_columns(x, g.inv_sqrt_degree);
  const konmf::Matrix approx = konmf::matmul(konmf::matmul(x, s.f), s.h);
  const double recon = hp.alpha * konmf::frobenius_norm_sq(konmf::subtract(target, approx));

  konmf::Matrix dev = konmf::matmul_a_bt(s.h, s.h);
  for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
  double total = recon + hp.mu * konmf::frobenius_norm_sq(dev);

  if (v == konmf::Variant::kognmf && hp.lambda != 0.0)
    total += hp.lambda * konmf::frobenius_inner(konmf::matmul(s.h, g.laplacian), s.h);
  return total;
}

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

/// Max entrywise mixed absolute/relative deviation between two matrices.
inline double max_rel_err(const konmf::Matrix& got, const konmf::Matrix& want) {
  double m = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    m = std::max(m, std::fabs(got.data()[i] - want.data()[i]) /
                        std::max(1.0, std::fabs(want.data()[i])));
  return m;
}

}  // namespace testutil

#endif

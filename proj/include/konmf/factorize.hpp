// konmf — kernel-based orthogonal NMF for subspace clustering
// SPDX-License-Identifier: Apache-2.0

#ifndef KONMF_FACTORIZE_HPP
#define KONMF_FACTORIZE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "konmf/dataset.hpp"
#include "konmf/graph.hpp"
#include "konmf/matrix.hpp"
#include "konmf/random.hpp"

namespace konmf {

enum class Variant { knsc_ncut, knsc_rcut, kognmf };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::knsc_ncut: return "ncut";
    case Variant::knsc_rcut: return "rcut";
    case Variant::kognmf: return "kognmf";
  }
  return "?";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "ncut") return Variant::knsc_ncut;
  if (s == "rcut") return Variant::knsc_rcut;
  if (s == "kognmf") return Variant::kognmf;
  throw std::invalid_argument("unknown variant '" + s + "' (expected ncut|rcut|kognmf)");
}

/// Trade-off weights and convergence control. The defaults are the constants
/// used for every experiment: alpha=10, mu=100, lambda=10, kappa=1e-3,
/// 300 iterations.
struct HyperParams {
  double alpha = 10.0;   // reconstruction weight
  double mu = 100.0;     // orthogonality weight
  double lambda = 10.0;  // graph-regularization weight (kognmf only)
  double kappa = 1e-3;   // stopping tolerance
  std::size_t max_iter = 300;
  double eps = 1e-12;    // denominator guard
};

/// The factor pair (F: n×k, H: k×n) plus per-iteration traces. W = Φ(X)F is
/// never materialized; F carries its coordinates.
struct FactorState {
  Matrix f;  // n×k
  Matrix h;  // k×n
  std::size_t iteration = 0;
  std::vector<double> objective_trace;       // full objective, entry 0 = initial state
  std::vector<double> reconstruction_trace;  // alpha-weighted data-fidelity term
  std::vector<double> orthogonality_trace;   // bounded diag/all score of HHᵀ
  bool converged = false;                    // kappa rule fired before max_iter
};

/// Everything derivable from (X, kernel spec) that is shared read-only across
/// restarts: K, the graph built on A = K, and the Ncut scaling K·D^{-1/2}.
struct Problem {
  KernelMatrix kernel;
  GraphSet graph;
  Matrix scaled_kernel;
  double trace_k = 0.0;       // Tr(K)
  double trace_dinv_k = 0.0;  // Tr(D^{-1}K)

  std::size_t n() const { return kernel.n(); }
};

inline Problem make_problem(const DataMatrix& x, const KernelSpec& spec, double eps = 1e-12) {
  Problem p;
  p.kernel = build_kernel(x, spec);
  p.graph = build_graph_set(p.kernel, eps);
  p.scaled_kernel = scaled_kernel_ncut(p.kernel, p.graph);
  for (std::size_t i = 0; i < p.n(); ++i) {
    p.trace_k += p.kernel.k(i, i);
    p.trace_dinv_k += p.kernel.k(i, i) / p.graph.degree[i];
  }
  return p;
}

/// F and H filled i.i.d. uniform on [0,1); deterministic per seed (H is drawn
/// first, then F, matching the listing order in the algorithms).
inline FactorState init_factors(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > n)
    throw std::invalid_argument("init_factors: need 1 <= k <= n, got k=" + std::to_string(k) +
                                ", n=" + std::to_string(n));
  Rng rng(seed);
  FactorState s;
  s.h = Matrix(k, n);
  for (double& v : s.h.data()) v = rng.uniform();
  s.f = Matrix(n, k);
  for (double& v : s.f.data()) v = rng.uniform();
  return s;
}

namespace detail {

inline void check_state_shapes(const FactorState& s, std::size_t n) {
  if (s.h.cols() != n || s.f.rows() != n || s.h.rows() != s.f.cols())
    throw std::invalid_argument("factor state (F " + s.f.shape_str() + ", H " + s.h.shape_str() +
                                ") inconsistent with kernel of " + std::to_string(n) + " samples");
}

// Shared H-rule: H ⊙ (α·Fᵀ·K_num + 2μ·H [+ λ·H·A]) ⊘ (α·FᵀKF·H + 2μ·HHᵀ·H [+ λ·H·D]).
// `ft_k` is FᵀK (unscaled, denominator side); `ft_k_num` is Fᵀ·K for rcut and
// kognmf, Fᵀ·K·D^{-1/2} for ncut. The λ terms are skipped entirely when λ = 0
// so the kognmf rule degenerates bit-for-bit to the rcut rule.
inline Matrix h_update_core(const Matrix& h, const Matrix& f, const Matrix& ft_k,
                            const Matrix& ft_k_num, const GraphSet* reg,
                            const HyperParams& hp) {
  Matrix num = ft_k_num;
  for (double& v : num.data()) v *= hp.alpha;
  {
    const double* hd = h.data().data();
    double* nd = num.data().data();
    for (std::size_t i = 0; i < h.size(); ++i) nd[i] += 2.0 * hp.mu * hd[i];
  }

  const Matrix g = matmul(ft_k, f);           // FᵀKF, k×k
  Matrix den = matmul(g, h);                  // k×n
  const Matrix hht = matmul_a_bt(h, h);       // k×k
  const Matrix hht_h = matmul(hht, h);        // k×n
  {
    double* dd = den.data().data();
    const double* cd = hht_h.data().data();
    for (std::size_t i = 0; i < den.size(); ++i) dd[i] = hp.alpha * dd[i] + 2.0 * hp.mu * cd[i];
  }

  if (reg && hp.lambda != 0.0) {
    const Matrix ha = matmul(h, reg->affinity);  // k×n
    double* nd = num.data().data();
    const double* had = ha.data().data();
    for (std::size_t i = 0; i < num.size(); ++i) nd[i] += hp.lambda * had[i];
    double* dd = den.data().data();
    for (std::size_t a = 0; a < h.rows(); ++a)
      for (std::size_t j = 0; j < h.cols(); ++j)
        dd[a * h.cols() + j] += hp.lambda * h(a, j) * reg->degree[j];
  }

  return hadamard_update(h, num, den, hp.eps);
}

// F ⊙ (K·Hᵀ) ⊘ (K·F·HHᵀ); identical across the three variants.
inline Matrix f_update_core(const Matrix& f, const Matrix& h, const Matrix& k, const HyperParams& hp) {
  const Matrix num = matmul_a_bt(k, h);
  const Matrix hht = matmul_a_bt(h, h);
  const Matrix den = matmul(matmul(k, f), hht);
  return hadamard_update(f, num, den, hp.eps);
}

inline double orth_score_from_gram(const Matrix& hht) {
  double diag = 0.0, all = 0.0;
  for (std::size_t i = 0; i < hht.rows(); ++i) {
    diag += hht(i, i);
    for (std::size_t j = 0; j < hht.cols(); ++j) all += hht(i, j);
  }
  return all > 0.0 ? diag / all : 0.0;
}

}  // namespace detail

inline FactorState update_h_rcut(const FactorState& s, const KernelMatrix& k, const HyperParams& hp) {
  detail::check_state_shapes(s, k.n());
  FactorState out = s;
  const Matrix ft_k = matmul_at_b(s.f, k.k);
  out.h = detail::h_update_core(s.h, s.f, ft_k, ft_k, nullptr, hp);
  return out;
}

inline FactorState update_z_ncut(const FactorState& s, const Matrix& scaled_k, const KernelMatrix& k,
                                 const HyperParams& hp) {
  detail::check_state_shapes(s, k.n());
  if (!scaled_k.same_shape(k.k)) detail::shape_error("update_z_ncut", scaled_k, k.k);
  FactorState out = s;
  out.h = detail::h_update_core(s.h, s.f, matmul_at_b(s.f, k.k), matmul_at_b(s.f, scaled_k),
                                nullptr, hp);
  return out;
}

inline FactorState update_h_kognmf(const FactorState& s, const KernelMatrix& k, const GraphSet& g,
                                   const HyperParams& hp) {
  detail::check_state_shapes(s, k.n());
  if (g.degree.size() != k.n())
    throw std::invalid_argument("update_h_kognmf: graph has " + std::to_string(g.degree.size()) +
                                " nodes, kernel is " + k.k.shape_str());
  FactorState out = s;
  const Matrix ft_k = matmul_at_b(s.f, k.k);
  out.h = detail::h_update_core(s.h, s.f, ft_k, ft_k, &g, hp);
  return out;
}

inline FactorState update_f(const FactorState& s, const KernelMatrix& k, const HyperParams& hp) {
  detail::check_state_shapes(s, k.n());
  FactorState out = s;
  out.f = detail::f_update_core(s.f, s.h, k.k, hp);
  return out;
}

/// Ncut-coupled F-rule: F ⊙ (K·D^{-1/2}·Zᵀ) ⊘ (K·F·ZZᵀ). The published rule
/// omits the D^{-1/2} on the numerator, but the Ncut objective
/// ‖Φ·D^{-1/2} − Φ·F·Z‖² differentiates to exactly this scaled form (it is the
/// plain rule after the substitution Φ → Φ·D^{-1/2}, F = D^{-1/2}·F̂), and only
/// the scaled form keeps the objective monotone. Degenerates to update_f when
/// D = I.
inline FactorState update_f_ncut(const FactorState& s, const Matrix& scaled_k, const KernelMatrix& k,
                                 const HyperParams& hp) {
  detail::check_state_shapes(s, k.n());
  if (!scaled_k.same_shape(k.k)) detail::shape_error("update_f_ncut", scaled_k, k.k);
  FactorState out = s;
  const Matrix num = matmul_a_bt(scaled_k, s.h);
  const Matrix hht = matmul_a_bt(s.h, s.h);
  const Matrix den = matmul(matmul(k.k, s.f), hht);
  out.f = hadamard_update(s.f, num, den, hp.eps);
  return out;
}

struct ObjectiveParts {
  double reconstruction = 0.0;        // alpha-weighted, kernel-trace form
  double orthogonality_penalty = 0.0; // mu·‖HHᵀ − I‖²_F
  double graph_penalty = 0.0;         // lambda·Tr(HLHᵀ), kognmf only
  double total() const { return reconstruction + orthogonality_penalty + graph_penalty; }
};

namespace detail {

// All trace terms are computed from K alone; Φ is never materialized.
// Uses the identities Tr(KFH) = <FᵀK, H> and Tr(HᵀFᵀKFH) = Tr(FᵀKF·HHᵀ).
inline ObjectiveParts objective_from_cached(Variant v, const Matrix& ft_k, const Matrix& hht,
                                            const FactorState& s, const Problem& p,
                                            const HyperParams& hp) {
  ObjectiveParts parts;
  const Matrix g = matmul(ft_k, s.f);  // FᵀKF
  const double quad = trace_of_product(g, hht);
  double cross, base;
  if (v == Variant::knsc_ncut) {
    base = p.trace_dinv_k;
    cross = frobenius_inner(scale_columns(ft_k, p.graph.inv_sqrt_degree), s.h);
  } else {
    base = p.trace_k;
    cross = frobenius_inner(ft_k, s.h);
  }
  parts.reconstruction = hp.alpha * (base - 2.0 * cross + quad);
  if (parts.reconstruction < -1e-6)
    throw std::runtime_error("objective: reconstruction term is a squared norm but evaluated to " +
                             std::to_string(parts.reconstruction) + "; internal inconsistency");

  Matrix dev = hht;
  for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
  parts.orthogonality_penalty = hp.mu * frobenius_norm_sq(dev);

  if (v == Variant::kognmf && hp.lambda != 0.0)
    parts.graph_penalty = hp.lambda * frobenius_inner(matmul(s.h, p.graph.laplacian), s.h);
  return parts;
}

}  // namespace detail

inline ObjectiveParts objective_parts(Variant v, const FactorState& s, const Problem& p,
                                      const HyperParams& hp) {
  detail::check_state_shapes(s, p.n());
  return detail::objective_from_cached(v, matmul_at_b(s.f, p.kernel.k), matmul_a_bt(s.h, s.h), s, p, hp);
}

inline double objective(Variant v, const FactorState& s, const Problem& p, const HyperParams& hp) {
  return objective_parts(v, s, p, hp).total();
}

/// Exact gradients of the implemented objective:
///   ∂L/∂H = −2α·FᵀK + 2α·FᵀKF·H + 4μ·(HHᵀ−I)·H + 2λ·H·D − 2λ·H·A
///   ∂L/∂F = −2α·K·Hᵀ + 2α·K·F·HHᵀ
/// The multiplicative rules split exactly these into positive and negative
/// parts. λ terms apply only when hp.lambda is nonzero.
inline std::pair<Matrix, Matrix> lagrangian_gradients(const FactorState& s, const KernelMatrix& k,
                                                      const GraphSet& g, const HyperParams& hp) {
  detail::check_state_shapes(s, k.n());
  const Matrix ft_k = matmul_at_b(s.f, k.k);
  const Matrix gram = matmul(ft_k, s.f);
  const Matrix hht = matmul_a_bt(s.h, s.h);

  Matrix dh = matmul(gram, s.h);
  {
    Matrix dev = hht;
    for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
    const Matrix dev_h = matmul(dev, s.h);
    double* d = dh.data().data();
    const double* t = ft_k.data().data();
    const double* o = dev_h.data().data();
    for (std::size_t i = 0; i < dh.size(); ++i)
      d[i] = 2.0 * hp.alpha * (d[i] - t[i]) + 4.0 * hp.mu * o[i];
  }
  if (hp.lambda != 0.0) {
    const Matrix ha = matmul(s.h, g.affinity);
    double* d = dh.data().data();
    const double* a = ha.data().data();
    for (std::size_t r = 0; r < s.h.rows(); ++r)
      for (std::size_t j = 0; j < s.h.cols(); ++j) {
        const std::size_t i = r * s.h.cols() + j;
        d[i] += 2.0 * hp.lambda * (s.h(r, j) * g.degree[j] - a[i]);
      }
  }

  Matrix df = matmul(matmul(k.k, s.f), hht);
  {
    const Matrix kht = matmul_a_bt(k.k, s.h);
    double* d = df.data().data();
    const double* t = kht.data().data();
    for (std::size_t i = 0; i < df.size(); ++i) d[i] = 2.0 * hp.alpha * (d[i] - t[i]);
  }
  return {std::move(dh), std::move(df)};
}

/// Full solver: alternate the variant's H-rule and the shared F-rule once per
/// iteration, record the full objective / reconstruction / orthogonality after
/// each iteration, and stop when E_{i−1} − E_i ≤ κ·max(1, E_{i−1}) or at
/// max_iter. Stopping uses the full objective so penalty terms cannot
/// oscillate unobserved.
inline FactorState run(Variant v, const Problem& p, std::size_t k, const HyperParams& hp,
                       std::uint64_t seed) {
  const std::size_t n = p.n();
  FactorState s = init_factors(n, k, seed);
  const Matrix& kern = p.kernel.k;

  Matrix ft_k = matmul_at_b(s.f, kern);
  Matrix hht = matmul_a_bt(s.h, s.h);
  ObjectiveParts parts = detail::objective_from_cached(v, ft_k, hht, s, p, hp);
  double e_prev = parts.total();
  s.objective_trace.push_back(e_prev);
  s.reconstruction_trace.push_back(parts.reconstruction);
  s.orthogonality_trace.push_back(detail::orth_score_from_gram(hht));

  const bool ncut = (v == Variant::knsc_ncut);
  const GraphSet* reg = (v == Variant::kognmf) ? &p.graph : nullptr;

  for (std::size_t it = 1; it <= hp.max_iter; ++it) {
    const Matrix f_before = s.f;
    const Matrix h_before = s.h;

    if (ncut) {
      s.h = detail::h_update_core(s.h, s.f, ft_k, scale_columns(ft_k, p.graph.inv_sqrt_degree),
                                  reg, hp);
    } else {
      s.h = detail::h_update_core(s.h, s.f, ft_k, ft_k, reg, hp);
    }

    hht = matmul_a_bt(s.h, s.h);
    const Matrix num_f = ncut ? matmul_a_bt(p.scaled_kernel, s.h) : matmul_a_bt(kern, s.h);
    const Matrix den_f = matmul(matmul(kern, s.f), hht);
    s.f = hadamard_update(s.f, num_f, den_f, hp.eps);

    ft_k = matmul_at_b(s.f, kern);
    parts = detail::objective_from_cached(v, ft_k, hht, s, p, hp);
    const double e = parts.total();
    if (!std::isfinite(e))
      throw std::runtime_error(std::string("run(") + variant_name(v) +
                               "): objective became non-finite at iteration " + std::to_string(it));

    const bool stop = e_prev - e <= hp.kappa * std::max(1.0, e_prev);
    if (stop && e > e_prev) {
      // The multiplicative step overshot (the printed rules only majorize the
      // quartic orthogonality term approximately). Reject it and keep the
      // last improving iterate so traces stay monotone.
      s.f = f_before;
      s.h = h_before;
      s.converged = true;
      break;
    }
    s.objective_trace.push_back(e);
    s.reconstruction_trace.push_back(parts.reconstruction);
    s.orthogonality_trace.push_back(detail::orth_score_from_gram(hht));
    s.iteration = it;
    if (stop) {
      s.converged = true;
      break;
    }
    e_prev = e;
  }
  return s;
}

inline FactorState run(Variant v, const DataMatrix& x, std::size_t k, const KernelSpec& spec,
                       const HyperParams& hp, std::uint64_t seed) {
  return run(v, make_problem(x, spec, hp.eps), k, hp, seed);
}

}  // namespace konmf

#endif  // KONMF_FACTORIZE_HPP

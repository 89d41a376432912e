// konmf — kernel-based orthogonal NMF for subspace clustering
// SPDX-License-Identifier: Apache-2.0

#ifndef KONMF_CLUSTER_HPP
#define KONMF_CLUSTER_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "konmf/matrix.hpp"

namespace konmf {

/// Hard labels plus soft memberships (columns of `soft` sum to 1).
struct Labeling {
  std::vector<int> labels;  // length n, values in [0,k)
  Matrix soft;              // k×n
};

struct AccuracyReport {
  double acc = 0.0;
  std::vector<std::size_t> mapping;  // predicted cluster -> truth class
  Matrix confusion;                  // k×k counts, [pred][truth]
};

/// Column argmax with lowest-index tie-break; soft membership by column
/// normalization. An all-zero column gets label 0 and uniform soft 1/k.
inline Labeling assign(const Matrix& h) {
  if (h.empty()) throw std::invalid_argument("assign: empty membership matrix");
  const std::size_t k = h.rows();
  const std::size_t n = h.cols();
  Labeling out;
  out.labels.resize(n);
  out.soft = Matrix(k, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_v = h(0, i);
    double sum = h(0, i);
    for (std::size_t a = 1; a < k; ++a) {
      const double v = h(a, i);
      sum += v;
      if (v > best_v) {
        best_v = v;
        best = a;
      }
    }
    out.labels[i] = static_cast<int>(best);
    if (sum > 0.0) {
      for (std::size_t a = 0; a < k; ++a) out.soft(a, i) = h(a, i) / sum;
    } else {
      for (std::size_t a = 0; a < k; ++a) out.soft(a, i) = 1.0 / static_cast<double>(k);
    }
  }
  return out;
}

namespace detail {

/// O(k³) shortest-augmenting-path assignment (Jonker-Volgenant style with
/// potentials). Returns the minimum total cost; perm[row] = assigned column.
inline double assignment_min_cost(const Matrix& cost, std::vector<std::size_t>* perm_out = nullptr) {
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  if (perm_out) perm_out->assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    total += cost(p[j] - 1, j - 1);
    if (perm_out) (*perm_out)[p[j] - 1] = j - 1;
  }
  return total;
}

}  // namespace detail

/// Minimum-cost assignment on a square cost matrix. Ties between optimal
/// permutations are broken toward the lexicographically smallest one, so the
/// result is reproducible and matches a first-found brute-force scan.
inline std::vector<std::size_t> hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols())
    throw std::invalid_argument("hungarian: cost matrix must be square, got " + cost.shape_str());
  const std::size_t k = cost.rows();
  if (k == 0) throw std::invalid_argument("hungarian: empty cost matrix");

  const double total = detail::assignment_min_cost(cost);
  const double tol = 1e-9 * std::max(1.0, std::fabs(total));

  // Fix rows in order, always trying the smallest still-optimal column; each
  // candidate is verified by re-solving the remaining subproblem.
  std::vector<std::size_t> perm(k);
  std::vector<bool> col_used(k, false);
  double partial = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t rem = k - i - 1;
    std::vector<std::size_t> free_cols;
    for (std::size_t j = 0; j < k; ++j)
      if (!col_used[j]) free_cols.push_back(j);
    bool placed = false;
    for (std::size_t cj : free_cols) {
      double sub_cost = 0.0;
      if (rem > 0) {
        Matrix sub(rem, rem);
        std::size_t sc = 0;
        for (std::size_t j : free_cols) {
          if (j == cj) continue;
          for (std::size_t r = 0; r < rem; ++r) sub(r, sc) = cost(i + 1 + r, j);
          ++sc;
        }
        sub_cost = detail::assignment_min_cost(sub);
      }
      if (partial + cost(i, cj) + sub_cost <= total + tol) {
        perm[i] = cj;
        col_used[cj] = true;
        partial += cost(i, cj);
        placed = true;
        break;
      }
    }
    if (!placed) throw std::runtime_error("hungarian: internal error, no column preserves the optimum");
  }
  return perm;
}

/// Clustering accuracy (fraction matched under the best cluster-to-class
/// mapping). Agreement maximization runs as cost minimization on negated
/// confusion counts.
inline AccuracyReport accuracy(const Labeling& pred, const std::vector<int>& truth) {
  if (pred.labels.size() != truth.size())
    throw std::invalid_argument("accuracy: length mismatch, pred has " + std::to_string(pred.labels.size()) +
                                " labels, truth has " + std::to_string(truth.size()));
  const std::size_t n = truth.size();
  if (n == 0) throw std::invalid_argument("accuracy: empty labelings");

  std::size_t k = pred.soft.rows();
  for (int t : truth) {
    if (t < 0) throw std::invalid_argument("accuracy: negative truth label");
    k = std::max(k, static_cast<std::size_t>(t) + 1);
  }
  for (int c : pred.labels) k = std::max(k, static_cast<std::size_t>(c) + 1);

  AccuracyReport rep;
  rep.confusion = Matrix(k, k);
  for (std::size_t i = 0; i < n; ++i)
    rep.confusion(static_cast<std::size_t>(pred.labels[i]), static_cast<std::size_t>(truth[i])) += 1.0;

  rep.mapping = hungarian(scale(rep.confusion, -1.0));
  double matched = 0.0;
  for (std::size_t a = 0; a < k; ++a) matched += rep.confusion(a, rep.mapping[a]);
  rep.acc = matched / static_cast<double>(n);
  return rep;
}

/// Bounded average-orthogonality Σᵢ(HHᵀ)ᵢᵢ / Σᵢⱼ(HHᵀ)ᵢⱼ, in (0,1] for
/// non-negative nonzero H and exactly 1 iff HHᵀ is diagonal.
inline double orthogonality_score(const Matrix& h) {
  if (h.empty()) throw std::invalid_argument("orthogonality_score: empty matrix");
  const Matrix m = matmul_a_bt(h, h);
  double diag = 0.0, all = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    diag += m(i, i);
    for (std::size_t j = 0; j < m.cols(); ++j) all += m(i, j);
  }
  if (!(all > 0.0)) throw std::invalid_argument("orthogonality_score: all-zero membership matrix");
  return diag / all;
}

/// The unbounded ratio Σ_diag/Σ_offdiag as printed in the literature;
/// +inf at exact orthogonality. Kept alongside the bounded score for logging.
inline double orthogonality_ratio_raw(const Matrix& h) {
  if (h.empty()) throw std::invalid_argument("orthogonality_ratio_raw: empty matrix");
  const Matrix m = matmul_a_bt(h, h);
  double diag = 0.0, all = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    diag += m(i, i);
    for (std::size_t j = 0; j < m.cols(); ++j) all += m(i, j);
  }
  const double off = all - diag;
  if (off <= 0.0) return std::numeric_limits<double>::infinity();
  return diag / off;
}

}  // namespace konmf

#endif  // KONMF_CLUSTER_HPP

// konmf — kernel-based orthogonal NMF for subspace clustering
// SPDX-License-Identifier: Apache-2.0

#ifndef KONMF_DATASET_HPP
#define KONMF_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "konmf/matrix.hpp"
#include "konmf/random.hpp"

namespace konmf {

/// Input matrix X, column per sample, with the non-negativity flag verified
/// at construction time.
struct DataMatrix {
  Matrix matrix;  // m×n
  bool nonneg = false;

  static DataMatrix from(Matrix m) {
    const bool nn = m.is_nonneg();
    return {std::move(m), nn};
  }
};

struct Dataset {
  DataMatrix x;
  std::optional<std::vector<int>> truth;  // length n, values in [0,k)
  std::string name;
  std::optional<std::size_t> k_hint;

  std::size_t samples() const { return x.matrix.cols(); }
  std::size_t features() const { return x.matrix.rows(); }
};

struct CsvOptions {
  bool has_header = false;
  char delimiter = ',';
  // Column holding ground-truth labels: a 0-based index ("3") or a header
  // name. All-digit strings are treated as indices.
  std::optional<std::string> label_column;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && !s.empty();
}

inline bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= '0' && c <= '9'; });
}

inline std::string basename_no_ext(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

/// Loads a rectangular numeric CSV, one row per sample, into column-per-sample
/// form. Labels (if a label column is given) are re-indexed to 0..k−1 in
/// first-appearance order. Missing values are not supported: every non-label
/// cell must parse as a number.
inline Dataset load_csv(const std::string& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_line(line, opt.delimiter);
    if (first && opt.has_header) {
      header = cells;
      first = false;
      continue;
    }
    first = false;
    if (!rows.empty() && cells.size() != rows.front().size())
      throw std::invalid_argument("load_csv: " + path + ": row at line " + std::to_string(line_no) +
                                  " has " + std::to_string(cells.size()) + " fields, expected " +
                                  std::to_string(rows.front().size()));
    if (opt.has_header && !header.empty() && cells.size() != header.size())
      throw std::invalid_argument("load_csv: " + path + ": row at line " + std::to_string(line_no) +
                                  " has " + std::to_string(cells.size()) + " fields, header has " +
                                  std::to_string(header.size()));
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw std::invalid_argument("load_csv: " + path + " contains no data rows");

  const std::size_t width = rows.front().size();
  std::optional<std::size_t> label_idx;
  if (opt.label_column) {
    const std::string& lc = *opt.label_column;
    if (detail::all_digits(lc)) {
      label_idx = static_cast<std::size_t>(std::stoul(lc));
      if (*label_idx >= width)
        throw std::invalid_argument("load_csv: label column index " + lc + " out of range, file has " +
                                    std::to_string(width) + " columns");
    } else {
      if (!opt.has_header)
        throw std::invalid_argument("load_csv: label column '" + lc + "' given by name but file has no header");
      auto it = std::find(header.begin(), header.end(), lc);
      if (it == header.end())
        throw std::invalid_argument("load_csv: label column '" + lc + "' not found in header");
      label_idx = static_cast<std::size_t>(it - header.begin());
    }
  }

  const std::size_t n = rows.size();
  const std::size_t m = width - (label_idx ? 1 : 0);
  if (m == 0) throw std::invalid_argument("load_csv: " + path + " has no feature columns");

  Matrix x(m, n);
  std::vector<int> truth;
  std::vector<std::string> seen_labels;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_idx && c == *label_idx) {
        const std::string& lab = rows[r][c];
        auto it = std::find(seen_labels.begin(), seen_labels.end(), lab);
        if (it == seen_labels.end()) {
          seen_labels.push_back(lab);
          truth.push_back(static_cast<int>(seen_labels.size()) - 1);
        } else {
          truth.push_back(static_cast<int>(it - seen_labels.begin()));
        }
        continue;
      }
      double v;
      if (!detail::parse_double(rows[r][c], v))
        throw std::invalid_argument("load_csv: " + path + ": non-numeric cell '" + rows[r][c] +
                                    "' at row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      x(f++, r) = v;
    }
  }

  Dataset ds;
  ds.x = DataMatrix::from(std::move(x));
  ds.name = detail::basename_no_ext(path);
  if (label_idx) {
    ds.truth = std::move(truth);
    ds.k_hint = seen_labels.size();
  }
  return ds;
}

namespace detail {
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}
}  // namespace detail

/// Writes a Dataset back to CSV (one row per sample, shortest round-trip
/// number formatting, label appended as the last column when present).
inline void save_csv(const Dataset& ds, const std::string& path, bool with_header = true) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot write " + path);
  const Matrix& x = ds.x.matrix;
  if (with_header) {
    for (std::size_t f = 0; f < x.rows(); ++f) {
      if (f) out << ',';
      out << "f" << f;
    }
    if (ds.truth) out << ",label";
    out << '\n';
  }
  for (std::size_t i = 0; i < x.cols(); ++i) {
    for (std::size_t f = 0; f < x.rows(); ++f) {
      if (f) out << ',';
      out << detail::format_double(x(f, i));
    }
    if (ds.truth) out << ',' << (*ds.truth)[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

/// Two concentric noisy rings in 2-D, n_per_ring points each: uniform random
/// angles, radius r + gaussian noise. The classic example a linear method
/// cannot split.
inline Dataset two_rings(std::size_t n_per_ring, double r_inner, double r_outer, double noise,
                         std::uint64_t seed) {
  if (n_per_ring == 0) throw std::invalid_argument("two_rings: n_per_ring must be positive");
  if (!(0.0 < r_inner && r_inner < r_outer))
    throw std::invalid_argument("two_rings: need 0 < r_inner < r_outer, got " +
                                std::to_string(r_inner) + ", " + std::to_string(r_outer));
  if (!(noise >= 0.0)) throw std::invalid_argument("two_rings: noise must be >= 0");

  Rng rng(seed);
  const std::size_t n = 2 * n_per_ring;
  Matrix x(2, n);
  std::vector<int> truth(n);
  const double radii[2] = {r_inner, r_outer};
  for (int ring = 0; ring < 2; ++ring) {
    for (std::size_t p = 0; p < n_per_ring; ++p) {
      const std::size_t i = static_cast<std::size_t>(ring) * n_per_ring + p;
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const double radius = radii[ring] + noise * rng.gaussian();
      x(0, i) = radius * std::cos(angle);
      x(1, i) = radius * std::sin(angle);
      truth[i] = ring;
    }
  }

  Dataset ds;
  ds.x = DataMatrix::from(std::move(x));
  ds.truth = std::move(truth);
  ds.name = "two_rings";
  ds.k_hint = 2;
  return ds;
}

/// Splits into two halves with per-class counts as even as possible (the odd
/// sample goes to train). Selection is a seeded shuffle within each class;
/// sample order within each half follows the parent dataset.
inline std::pair<Dataset, Dataset> stratified_holdout(const Dataset& ds, std::uint64_t seed) {
  if (!ds.truth) throw std::invalid_argument("stratified_holdout: dataset has no ground-truth labels");
  const auto& truth = *ds.truth;
  const std::size_t n = ds.samples();

  int k = 0;
  for (int t : truth) k = std::max(k, t + 1);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(truth[i])].push_back(i);

  Rng rng(seed);
  std::vector<bool> to_train(n, false);
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    const std::size_t take = (idx.size() + 1) / 2;  // odd counts: extra sample to train
    for (std::size_t j = 0; j < take; ++j) to_train[idx[j]] = true;
  }

  auto subset = [&](bool train) {
    std::vector<std::size_t> sel;
    for (std::size_t i = 0; i < n; ++i)
      if (to_train[i] == train) sel.push_back(i);
    Matrix x(ds.features(), sel.size());
    std::vector<int> t(sel.size());
    for (std::size_t j = 0; j < sel.size(); ++j) {
      for (std::size_t f = 0; f < ds.features(); ++f) x(f, j) = ds.x.matrix(f, sel[j]);
      t[j] = truth[sel[j]];
    }
    Dataset out;
    out.x = DataMatrix::from(std::move(x));
    out.truth = std::move(t);
    out.name = ds.name + (train ? "_train" : "_held");
    out.k_hint = ds.k_hint;
    return out;
  };
  return {subset(true), subset(false)};
}

/// Per-feature min-shift to non-negativity (only features with a negative
/// minimum are shifted). Used by the CLI for linear-kernel runs on signed
/// data; off by default.
inline Dataset shift_nonneg(const Dataset& ds) {
  Dataset out = ds;
  Matrix& x = out.x.matrix;
  for (std::size_t f = 0; f < x.rows(); ++f) {
    double mn = 0.0;
    for (std::size_t i = 0; i < x.cols(); ++i) mn = std::min(mn, x(f, i));
    if (mn < 0.0)
      for (std::size_t i = 0; i < x.cols(); ++i) x(f, i) -= mn;
  }
  out.x = DataMatrix::from(std::move(x));
  out.name = ds.name;
  return out;
}

}  // namespace konmf

#endif  // KONMF_DATASET_HPP

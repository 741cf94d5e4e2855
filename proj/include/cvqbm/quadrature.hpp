// Copyright 2026 The cvqbm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Oscillator wavefunctions, uniform quadrature grids, square-root encoding of
// probability densities into Fock amplitudes and the way back, plus the
// KL divergence and a weighted Gaussian KDE.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqbm/error.hpp"
#include "cvqbm/fock.hpp"

namespace cvqbm {

struct QuadGrid {
  double q_min = -8.0;
  double q_max = 8.0;
  std::size_t points = 1601;

  static constexpr std::size_t kMinPoints = 101;

  QuadGrid() = default;
  QuadGrid(double lo, double hi, std::size_t n) : q_min(lo), q_max(hi), points(n) { validate(); }

  void validate() const {
    if (!std::isfinite(q_min) || !std::isfinite(q_max) || !(q_max > q_min))
      throw std::invalid_argument("QuadGrid: q_max must exceed q_min");
    if (points < kMinPoints) throw std::invalid_argument("QuadGrid: at least 101 points required");
  }

  double spacing() const { return (q_max - q_min) / static_cast<double>(points - 1); }
  double at(std::size_t i) const { return q_min + spacing() * static_cast<double>(i); }

  std::vector<double> nodes() const {
    std::vector<double> q(points);
    for (std::size_t i = 0; i < points; ++i) q[i] = at(i);
    return q;
  }

  bool operator==(const QuadGrid& o) const {
    return q_min == o.q_min && q_max == o.q_max && points == o.points;
  }
};

/// Trapezoid rule over uniformly spaced samples.
inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

/// Density sampled on a grid.
struct Pdf {
  QuadGrid grid;
  std::vector<double> values;

  Pdf() = default;
  Pdf(QuadGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.points) throw std::invalid_argument("Pdf: value count must match grid points");
    for (double x : values)
      if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("Pdf: values must be finite and non-negative");
  }

  double integral() const { return trapezoid(values, grid.spacing()); }

  Pdf& normalize() {
    const double z = integral();
    if (!(z > 0.0)) throw std::invalid_argument("Pdf::normalize: zero mass");
    for (double& x : values) x /= z;
    return *this;
  }

  double moment(int k) const {
    std::vector<double> f(values.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(grid.at(i), k) * values[i];
    return trapezoid(f, grid.spacing());
  }

  double mean() const { return moment(1) / integral(); }
  double variance() const {
    const double m = mean();
    return moment(2) / integral() - m * m;
  }
};

template <class F>
Pdf tabulate(const QuadGrid& grid, F&& density) {
  std::vector<double> v(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) v[i] = density(grid.at(i));
  return Pdf(grid, std::move(v));
}

/// Writes "q,density" rows at full precision.
inline void write_pdf_csv(std::ostream& os, const Pdf& p) {
  os << "q,density\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p.values.size(); ++i) os << p.grid.at(i) << ',' << p.values[i] << '\n';
}

/// Reads a two-column (q, density) CSV with a header line. The q column must be uniform.
inline Pdf read_pdf_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("pdf csv: missing header", 0);
  std::size_t offset = line.size() + 1;
  std::vector<double> q, d;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      offset += 1;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("pdf csv: expected two columns", offset);
    char* end = nullptr;
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    const double qv = std::strtod(a.c_str(), &end);
    if (end == a.c_str()) throw ParseError("pdf csv: bad q value", offset);
    const double dv = std::strtod(b.c_str(), &end);
    if (end == b.c_str()) throw ParseError("pdf csv: bad density value", offset + comma + 1);
    q.push_back(qv);
    d.push_back(dv);
    offset += line.size() + 1;
  }
  if (q.size() < QuadGrid::kMinPoints) throw ParseError("pdf csv: too few rows", offset);
  QuadGrid g(q.front(), q.back(), q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    if (std::abs(q[i] - g.at(i)) > 1e-9 * std::max(1.0, std::abs(q[i])))
      throw std::invalid_argument("pdf csv: q column is not uniformly spaced");
  return Pdf(g, std::move(d));
}

inline constexpr int kMaxWavefunctionLevel = 60;

/// Psi_n(q) = <q|n> via the normalized three-term recurrence.
inline double oscillator_wavefunction(int n, double q) {
  if (n < 0) throw std::invalid_argument("oscillator_wavefunction: n must be non-negative");
  if (n > kMaxWavefunctionLevel) throw UnsupportedShape("oscillator_wavefunction: n > 60 is not supported");
  double prev = 0.0;
  double cur = std::pow(kPi, -0.25) * std::exp(-0.5 * q * q);
  for (int k = 1; k <= n; ++k) {
    const double next = std::sqrt(2.0 / k) * q * cur - std::sqrt((k - 1.0) / k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Table W(i, n) = Psi_n(q_i) for n < levels.
inline Eigen::MatrixXd wavefunction_table(std::size_t levels, const QuadGrid& grid) {
  if (levels > static_cast<std::size_t>(kMaxWavefunctionLevel) + 1)
    throw UnsupportedShape("wavefunction_table: too many levels");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(grid.points), static_cast<Eigen::Index>(levels));
  const double norm0 = std::pow(kPi, -0.25);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double q = grid.at(i);
    const auto row = static_cast<Eigen::Index>(i);
    double prev = 0.0;
    double cur = norm0 * std::exp(-0.5 * q * q);
    for (std::size_t k = 0; k < levels; ++k) {
      w(row, static_cast<Eigen::Index>(k)) = cur;
      const double kk = static_cast<double>(k + 1);
      const double next = std::sqrt(2.0 / kk) * q * cur - std::sqrt((kk - 1.0) / kk) * prev;
      prev = cur;
      cur = next;
    }
  }
  return w;
}

struct EncodedPdf {
  RealVector coeffs;         ///< a_n after renormalization
  DensityMatrix rho;         ///< |a><a|
  double captured_norm;      ///< sum a_n^2 before renormalization
};

inline constexpr double kMinCapturedNorm = 0.9;
inline constexpr std::size_t kMaxEncodeCutoff = 40;

/// a_n = integral Psi_n(q) sqrt(P(q)) dq by the trapezoid rule.
inline EncodedPdf encode_pdf(const Pdf& p, std::size_t cutoff, double min_captured = kMinCapturedNorm) {
  if (cutoff < 1 || cutoff > kMaxEncodeCutoff) throw std::invalid_argument("encode_pdf: cutoff must be in [1, 40]");
  const Eigen::MatrixXd w = wavefunction_table(cutoff, p.grid);
  Eigen::VectorXd root(static_cast<Eigen::Index>(p.values.size()));
  for (std::size_t i = 0; i < p.values.size(); ++i) root(static_cast<Eigen::Index>(i)) = std::sqrt(p.values[i]);
  // trapezoid weights
  root(0) *= 0.5;
  root(root.size() - 1) *= 0.5;
  RealVector a = p.grid.spacing() * (w.transpose() * root);
  const double captured = a.squaredNorm();
  if (captured < min_captured)
    throw CutoffInsufficient("encode_pdf: cutoff " + std::to_string(cutoff) + " captures only " +
                                 std::to_string(captured) + " of the norm",
                             captured);
  if (!(captured > 0.0)) throw CutoffInsufficient("encode_pdf: zero overlap with the Fock basis", captured);
  a /= std::sqrt(captured);
  const ComplexVector ac = a.cast<Complex>();
  return {a, DensityMatrix::pure(ac), captured};
}

/// P(q) = sum_mn rho_mn Psi_m(q) Psi_n(q).
inline Pdf density_to_pdf(const DensityMatrix& rho, const QuadGrid& grid) {
  const Eigen::MatrixXd w = wavefunction_table(rho.cutoff(), grid);
  const Eigen::MatrixXd re = rho.matrix().real();
  std::vector<double> v(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const auto row = w.row(static_cast<Eigen::Index>(i));
    const double val = row * re * row.transpose();
    v[i] = val > 0.0 ? val : 0.0;
  }
  return Pdf(grid, std::move(v));
}

inline constexpr double kKlFloor = 1e-12;

/// KL(gen || target) = sum_q gen log(gen / max(target, eps)) dq; 0 log 0 = 0.
inline double kl_divergence(const Pdf& gen, const Pdf& target) {
  if (!(gen.grid == target.grid)) throw std::invalid_argument("kl_divergence: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < gen.values.size(); ++i) {
    const double g = gen.values[i];
    if (g < kKlFloor) continue;
    s += g * std::log(g / std::max(target.values[i], kKlFloor));
  }
  return s * gen.grid.spacing();
}

/// Affine change of variable mapping [q_min, q_max] onto [new_min, new_max].
inline Pdf rescale_support(const Pdf& p, double new_min, double new_max) {
  if (!(new_max > new_min)) throw std::invalid_argument("rescale_support: new_max must exceed new_min");
  const double scale = (new_max - new_min) / (p.grid.q_max - p.grid.q_min);
  QuadGrid g(new_min, new_max, p.grid.points);
  std::vector<double> v(p.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = p.values[i] / scale;
  return Pdf(g, std::move(v));
}

struct KdeOptions {
  std::optional<double> bandwidth;        ///< overrides Scott's rule
  std::optional<double> effective_count;  ///< sample count m in m^(-1/5); default Kish n_eff of the weights
};

/// Weighted Gaussian KDE of binned data, normalized on `grid`.
///
/// Bandwidth follows Scott's rule h = sigma * m^(-1/5) with the weighted
/// standard deviation computed as in scipy.stats.gaussian_kde.
inline Pdf kde_smooth(std::span<const double> centers, std::span<const double> weights, const QuadGrid& grid,
                      const KdeOptions& opts = {}) {
  if (centers.size() != weights.size() || centers.empty())
    throw std::invalid_argument("kde_smooth: centers and weights must have equal non-zero length");
  double total = 0.0, total_sq = 0.0;
  std::size_t nonzero = 0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("kde_smooth: weights must be non-negative");
    total += w;
    if (w > 0.0) ++nonzero;
  }
  if (!(total > 0.0)) throw std::invalid_argument("kde_smooth: histogram is empty");
  std::vector<double> w(weights.begin(), weights.end());
  for (double& x : w) {
    x /= total;
    total_sq += x * x;
  }
  double mu = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) mu += w[i] * centers[i];
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) var += w[i] * (centers[i] - mu) * (centers[i] - mu);
  if (total_sq < 1.0) var /= (1.0 - total_sq);
  const double m = opts.effective_count.value_or(1.0 / total_sq);

  double h = 0.0;
  if (opts.bandwidth) {
    h = *opts.bandwidth;
  } else if (nonzero >= 2) {
    h = std::sqrt(var) * std::pow(m, -0.2);
  } else {
    // a lone bin has no spread; fall back to the bin pitch
    h = centers.size() >= 2 ? std::abs(centers[1] - centers[0]) : grid.spacing() * 10.0;
  }
  if (!(h > 0.0)) throw std::invalid_argument("kde_smooth: bandwidth must be positive");

  const double norm = 1.0 / (std::sqrt(2.0 * kPi) * h);
  std::vector<double> v(grid.points, 0.0);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double q = grid.at(i);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      const double z = (q - centers[j]) / h;
      s += w[j] * std::exp(-0.5 * z * z);
    }
    v[i] = s * norm;
  }
  return Pdf(grid, std::move(v)).normalize();
}

}  // namespace cvqbm

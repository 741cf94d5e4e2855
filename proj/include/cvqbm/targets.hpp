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

// Declarative targets and their preparation: the density matrix the trainer
// compares against, plus the tabulated target density used for KL scores.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cvqbm/distributions.hpp"
#include "cvqbm/fock.hpp"
#include "cvqbm/gadget.hpp"
#include "cvqbm/gates.hpp"
#include "cvqbm/quadrature.hpp"
#include "cvqbm/trainer.hpp"

namespace cvqbm {

enum class TargetKind { Gaussian, Rayleigh, Gamma, Weibull, Etib, Histogram, QuantumState };
enum class HistogramSmoothing { GaussianFit, Kde };

inline const char* to_string(TargetKind k) {
  switch (k) {
    case TargetKind::Gaussian: return "gaussian";
    case TargetKind::Rayleigh: return "rayleigh";
    case TargetKind::Gamma: return "gamma";
    case TargetKind::Weibull: return "weibull";
    case TargetKind::Etib: return "etib";
    case TargetKind::Histogram: return "histogram";
    case TargetKind::QuantumState: return "quantum-state";
  }
  return "?";
}

/// Affine map of the data axis [from_min, from_max] onto [to_min, to_max].
struct AxisRescale {
  double from_min = 0.0, from_max = 255.0;
  double to_min = 0.0, to_max = 4.0;

  double scale() const { return (to_max - to_min) / (from_max - from_min); }
  double to_data(double q) const { return from_min + (q - to_min) / scale(); }
  double from_data(double x) const { return to_min + (x - from_min) * scale(); }
};

struct TargetSpec {
  TargetKind kind = TargetKind::Gaussian;
  std::vector<double> params;
  std::optional<std::pair<double, double>> support;
  std::optional<AxisRescale> rescale;
  std::string source;  ///< histogram: file path or "builtin:forest"
  HistogramSmoothing smoothing = HistogramSmoothing::GaussianFit;
  std::string state;   ///< quantum-state: "squeezed-displaced" or "squeezed-cat"

  /// Checks the per-kind parameter count and constraints. Messages name the offending field.
  void validate() const {
    auto need = [&](std::size_t n) {
      if (params.size() != n)
        throw std::invalid_argument("target.params: " + std::string(to_string(kind)) + " takes " + std::to_string(n) +
                                    " values");
    };
    auto positive = [&](std::size_t i, const char* name) {
      if (!(params[i] > 0.0) || !std::isfinite(params[i]))
        throw std::invalid_argument(std::string("target.params: ") + name + " must be positive");
    };
    switch (kind) {
      case TargetKind::Gaussian: need(2); positive(1, "sigma"); break;
      case TargetKind::Rayleigh: need(1); positive(0, "sigma"); break;
      case TargetKind::Gamma: need(2); positive(0, "k"); positive(1, "theta"); break;
      case TargetKind::Weibull: need(2); positive(0, "lambda"); positive(1, "k"); break;
      case TargetKind::Etib:
        need(4);
        positive(0, "alpha");
        positive(1, "beta");
        positive(3, "phi");
        if (!(std::abs(params[2]) < 1.0)) throw std::invalid_argument("target.params: |lambda| must be below 1");
        break;
      case TargetKind::Histogram:
        if (source.empty()) throw std::invalid_argument("target.source: histogram targets need a source");
        if (!params.empty()) throw std::invalid_argument("target.params: histogram targets take no params");
        break;
      case TargetKind::QuantumState:
        need(2);
        if (state != "squeezed-displaced" && state != "squeezed-cat")
          throw std::invalid_argument("target.state: expected squeezed-displaced or squeezed-cat");
        if (!std::isfinite(params[0]) || !std::isfinite(params[1]))
          throw std::invalid_argument("target.params: values must be finite");
        break;
    }
    if (support && !(support->second > support->first)) throw std::invalid_argument("target.support: max must exceed min");
    if (rescale && (!(rescale->from_max > rescale->from_min) || !(rescale->to_max > rescale->to_min)))
      throw std::invalid_argument("target.rescale: ranges must be increasing");
  }
};

/// Piecewise-linear interpolation of a tabulated density; zero off the grid.
inline double interpolate(const Pdf& p, double q) {
  const double h = p.grid.spacing();
  const double u = (q - p.grid.q_min) / h;
  if (u < 0.0 || u > static_cast<double>(p.grid.points - 1)) return 0.0;
  const auto i = std::min(static_cast<std::size_t>(u), p.grid.points - 2);
  const double f = u - static_cast<double>(i);
  return (1.0 - f) * p.values[i] + f * p.values[i + 1];
}

/// D(alpha) S(r) |0>, built at cutoff + padding and truncated.
inline ComplexVector squeezed_displaced_state(double r, double alpha, std::size_t cutoff,
                                              std::size_t padding = kDefaultPadding) {
  const std::size_t dim = cutoff + padding;
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  v(0) = 1.0;
  ComplexVector out = (displace(alpha, dim) * squeeze(r, dim) * v).head(static_cast<Eigen::Index>(cutoff));
  return out / out.norm();
}

/// Even squeezed cat S(r) (D(alpha) + D(-alpha)) |0>, normalized at the cutoff.
inline ComplexVector squeezed_cat_state(double r, double alpha, std::size_t cutoff,
                                        std::size_t padding = kDefaultPadding) {
  const std::size_t dim = cutoff + padding;
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  v(0) = 1.0;
  const ComplexVector cat = (displace(alpha, dim) + displace(-alpha, dim)) * v;
  ComplexVector out = (squeeze(r, dim) * cat).head(static_cast<Eigen::Index>(cutoff));
  return out / out.norm();
}

struct PreparedTarget {
  DensityMatrix rho;
  std::optional<ComplexVector> state;  ///< set for quantum targets
  Pdf pdf;                             ///< normalized on the evaluation grid
  double captured_norm = 1.0;
  std::vector<std::pair<std::string, double>> details;
};

namespace detail {

inline std::function<double(double)> data_density(const TargetSpec& spec,
                                                  std::vector<std::pair<std::string, double>>& details) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case TargetKind::Gaussian: return [m = p[0], s = p[1]](double x) { return pdf_gaussian(x, m, s); };
    case TargetKind::Rayleigh: return [s = p[0]](double x) { return pdf_rayleigh(x, s); };
    case TargetKind::Gamma:
      return [k = p[0], t = p[1]](double x) { return x <= 0.0 ? 0.0 : pdf_gamma(x, k, t); };
    case TargetKind::Weibull:
      return [l = p[0], k = p[1]](double x) { return x <= 0.0 ? 0.0 : pdf_weibull(x, l, k); };
    case TargetKind::Etib:
      return [a = p[0], b = p[1], l = p[2], f = p[3]](double x) { return pdf_etib(x, a, b, l, f); };
    case TargetKind::Histogram: {
      const IntensityHistogram h =
          spec.source == "builtin:forest" ? bundled_forest_histogram() : load_intensity_histogram(spec.source);
      if (spec.smoothing == HistogramSmoothing::GaussianFit) {
        const GaussianFit fit = fit_gaussian(h);
        details.emplace_back("fit_mu", fit.mu);
        details.emplace_back("fit_sigma", fit.sigma);
        return [fit](double x) { return pdf_gaussian(x, fit.mu, fit.sigma); };
      }
      const auto centers = h.centers();
      const Pdf kde = kde_smooth(centers, h.probability, QuadGrid(-32.0, 287.0, 3191),
                                 KdeOptions{std::nullopt, h.total_count});
      return [kde](double x) { return interpolate(kde, x); };
    }
    case TargetKind::QuantumState: break;
  }
  throw std::invalid_argument("data_density: not a classical target");
}

}  // namespace detail

/// Density of a classical target on the (possibly rescaled) q axis.
inline std::function<double(double)> target_density(const TargetSpec& spec,
                                                    std::vector<std::pair<std::string, double>>* details = nullptr) {
  std::vector<std::pair<std::string, double>> sink;
  auto base = detail::data_density(spec, details ? *details : sink);
  if (!spec.rescale) return base;
  const AxisRescale rs = *spec.rescale;
  if (details && spec.kind == TargetKind::Weibull) {
    details->emplace_back("rescaled_lambda", spec.params[0] * rs.scale());
    details->emplace_back("rescaled_k", spec.params[1]);
  }
  return [base, rs](double q) { return base(rs.to_data(q)) / rs.scale(); };
}

/// Builds rho_target at `cutoff` and the normalized target density on `grid`.
inline PreparedTarget prepare_target(const TargetSpec& spec, std::size_t cutoff, const QuadGrid& grid,
                                     const QuadGrid& encode_grid = QuadGrid{}) {
  spec.validate();
  if (spec.kind == TargetKind::QuantumState) {
    const double r = squeezing_from_db(spec.params[0]);
    const double alpha = spec.params[1];
    ComplexVector psi = spec.state == "squeezed-cat" ? squeezed_cat_state(r, alpha, cutoff)
                                                     : squeezed_displaced_state(r, alpha, cutoff);
    DensityMatrix rho = DensityMatrix::pure(psi);
    Pdf pdf = density_to_pdf(rho, grid);
    pdf.normalize();
    PreparedTarget out{rho, psi, std::move(pdf), 1.0, {}};
    out.details.emplace_back("squeezing_r", r);
    out.details.emplace_back("alpha", alpha);
    return out;
  }
  std::vector<std::pair<std::string, double>> details;
  const auto density = target_density(spec, &details);
  Pdf enc = tabulate(encode_grid, density);
  enc.normalize();
  EncodedPdf e = encode_pdf(enc, cutoff);
  Pdf pdf = tabulate(grid, density);
  pdf.normalize();
  return {e.rho, std::nullopt, std::move(pdf), e.captured_norm, std::move(details)};
}

/// Fidelity used during training: the overlap gadget for quantum targets,
/// the fidelity against rho_data otherwise.
inline std::function<double(const DensityMatrix&)> target_fidelity(const PreparedTarget& t) {
  if (t.state) {
    return [psi = *t.state](const DensityMatrix& rho) { return overlap_exact(psi, rho).overlap_estimate; };
  }
  return [rho = t.rho](const DensityMatrix& out) { return fidelity(rho, out); };
}

}  // namespace cvqbm

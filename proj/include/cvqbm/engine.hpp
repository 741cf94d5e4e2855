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

// Forward pass of the continuous-variable Boltzmann machine.
//
// Mode 0 is the visible mode and mode 1 the hidden mode. Each QITE step
// couples the visible mode to a fresh vacuum ancilla through the block
// U = R S R' D X, then keeps only runs where the ancilla shows
// `post_select_outcome` photons. Because U acts on visible (x) ancilla
// alone, the post-selected step is the visible-mode operator
// T = <outcome|_A U |0>_A and the hidden mode is never touched.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqbm/distributions.hpp"
#include "cvqbm/error.hpp"
#include "cvqbm/fock.hpp"
#include "cvqbm/gates.hpp"
#include "cvqbm/quadrature.hpp"

namespace cvqbm {

enum class InitMode { Exact, Circuit };

struct QbmConfig {
  double delta = 1.5;
  std::size_t steps = 1;
  std::size_t cutoff = 10;
  std::size_t post_select_outcome = 0;
  InitMode init_mode = InitMode::Exact;
  std::size_t padding = kDefaultPadding;

  static constexpr std::size_t kMaxSteps = 8;
  static constexpr std::size_t kMinCutoff = 6;
  static constexpr std::size_t kMaxCutoff = 20;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("qbm.delta must be positive");
    if (steps > kMaxSteps) throw std::invalid_argument("qbm.steps must be at most 8");
    if (cutoff < kMinCutoff || cutoff > kMaxCutoff) throw std::invalid_argument("qbm.cutoff must lie in [6, 20]");
    if (post_select_outcome >= cutoff) throw std::invalid_argument("qbm.post_select must be below the cutoff");
  }
};

/// Trainable parameters, one GateParams per QITE step.
struct QiteParams {
  std::vector<GateParams> steps;

  std::size_t size() const { return steps.size() * GateParams::kCount; }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& s : steps)
      for (double v : s.as_array()) out.push_back(v);
    return out;
  }

  static QiteParams from_flat(const std::vector<double>& flat) {
    if (flat.size() % GateParams::kCount != 0) throw std::invalid_argument("QiteParams: length must be a multiple of 5");
    QiteParams p;
    for (std::size_t i = 0; i < flat.size(); i += GateParams::kCount)
      p.steps.push_back(GateParams::from_array({flat[i], flat[i + 1], flat[i + 2], flat[i + 3], flat[i + 4]}));
    return p;
  }
};

struct ForwardResult {
  DensityMatrix rho_v;
  double success_prob;
  std::vector<double> per_step_probs;
};

/// N = 1 / (1 - e^{-2 delta}), the untruncated normalization of |psi_0>.
inline double thermal_normalization(double delta) {
  return 1.0 / (1.0 - std::exp(-2.0 * delta));
}

/// |psi_0> proportional to sum_n e^{-delta n} |n>_v |n>_h, truncated and normalized.
inline FockVector entangled_init_exact(double delta, std::size_t cutoff) {
  if (!(delta > 0.0)) throw std::invalid_argument("entangled_init_exact: delta must be positive");
  const auto c = static_cast<Eigen::Index>(cutoff);
  ComplexMatrix psi = ComplexMatrix::Zero(c, c);
  for (Eigen::Index n = 0; n < c; ++n) psi(n, n) = std::exp(-delta * static_cast<double>(n));
  auto out = FockVector::from_matrix(psi);
  out.normalize();
  return out;
}

/// Two squeezed vacua entangled by X(1): the visible mode is stretched in q
/// (variance 1/(2 delta)), the hidden mode compressed (variance delta/2), and
/// X shifts q_h by q_v. Approximates entangled_init_exact for small delta.
inline FockVector entangled_init_circuit(double delta, std::size_t cutoff, std::size_t padding = kDefaultPadding) {
  if (!(delta > 0.0)) throw std::invalid_argument("entangled_init_circuit: delta must be positive");
  const std::size_t dim = cutoff + padding;
  const double r = 0.5 * std::log(delta);
  ComplexVector vac = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  vac(0) = 1.0;
  const ComplexVector v = squeeze(r, dim) * vac;
  const ComplexVector h = squeeze(-r, dim) * vac;
  const ComplexMatrix product = v * h.transpose();
  const ComplexMatrix entangled = apply_controlled_x(1.0, product);
  const auto c = static_cast<Eigen::Index>(cutoff);
  auto out = FockVector::from_matrix(entangled.topLeftCorner(c, c));
  out.normalize();
  return out;
}

inline FockVector initial_state(const QbmConfig& cfg) {
  return cfg.init_mode == InitMode::Exact ? entangled_init_exact(cfg.delta, cfg.cutoff)
                                          : entangled_init_circuit(cfg.delta, cfg.cutoff, cfg.padding);
}

struct StepResult {
  FockVector state;
  double probability;
};

/// One post-selected QITE step on the visible mode of a normalized two-mode state.
inline StepResult qite_step(const FockVector& state, const GateParams& params, const QbmConfig& cfg) {
  if (state.num_modes() != 2 || state.cutoff() != cfg.cutoff) throw UnsupportedShape("qite_step: expected a two-mode state at the configured cutoff");
  const ComplexMatrix t = qite_transfer(params, cfg.cutoff, cfg.post_select_outcome, cfg.padding);
  ComplexMatrix psi = t * state.as_matrix();
  const double p = psi.squaredNorm();
  if (!(p >= kDegenerateProbability))
    throw DegeneratePostSelection("qite_step: post-selection probability " + std::to_string(p) + " is degenerate", p);
  psi /= std::sqrt(p);
  return {FockVector::from_matrix(psi), p};
}

inline ForwardResult forward(const QiteParams& params, const QbmConfig& cfg) {
  cfg.validate();
  if (params.steps.size() != cfg.steps)
    throw std::invalid_argument("forward: parameter count does not match qbm.steps");
  FockVector state = initial_state(cfg);
  std::vector<double> probs;
  probs.reserve(cfg.steps);
  double success = 1.0;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    try {
      auto step = qite_step(state, params.steps[s], cfg);
      state = std::move(step.state);
      probs.push_back(step.probability);
      success *= step.probability;
    } catch (const DegeneratePostSelection& e) {
      throw DegeneratePostSelection("forward: step " + std::to_string(s + 1) + " of " + std::to_string(cfg.steps) +
                                        ": " + e.what(),
                                    e.probability(), static_cast<int>(s));
    }
  }
  return {partial_trace(state, 0), success, std::move(probs)};
}

/// H_eff = -log(rho_v) with eigenvalues floored at 1e-12.
inline ComplexMatrix effective_hamiltonian(const DensityMatrix& rho) {
  return -hermitian_matrix_function(rho.matrix(), MatrixFunction::Log);
}

/// Inverse-CDF draws from a tabulated density (piecewise-linear CDF).
inline std::vector<double> sample_pdf(const Pdf& pdf, std::size_t n_samples, std::mt19937_64& rng) {
  const std::size_t n = pdf.values.size();
  const double h = pdf.grid.spacing();
  std::vector<double> cdf(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) cdf[i] = cdf[i - 1] + 0.5 * h * (pdf.values[i - 1] + pdf.values[i]);
  const double total = cdf.back();
  if (!(total > 0.0)) throw std::invalid_argument("sample_pdf: density has no mass on the grid");
  std::vector<double> out;
  out.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t hi = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    if (hi == 0) hi = 1;
    if (hi >= n) hi = n - 1;
    const std::size_t lo = hi - 1;
    const double span = cdf[hi] - cdf[lo];
    const double frac = span > 0.0 ? (u - cdf[lo]) / span : 0.5;
    out.push_back(pdf.grid.at(lo) + frac * h);
  }
  return out;
}

/// Homodyne (q-quadrature) outcomes of rho drawn from P(q) = <q|rho|q> on `grid`.
inline std::vector<double> sample_homodyne(const DensityMatrix& rho, const QuadGrid& grid, std::size_t n_samples,
                                           std::mt19937_64& rng) {
  if (n_samples == 0) throw std::invalid_argument("sample_homodyne: n_samples must be at least 1");
  return sample_pdf(density_to_pdf(rho, grid), n_samples, rng);
}

}  // namespace cvqbm

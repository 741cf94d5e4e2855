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

// Gaussian gate unitaries, the two-mode QITE block, the 50:50 beam splitter
// and the photon-loss channel, all as dense matrices in the Fock basis.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqbm/fock.hpp"

namespace cvqbm {

/// Parameters of one QITE block U = R(chi) S(r) R(chi') D(alpha) X(kappa).
struct GateParams {
  double chi = 0.0;
  double r = 0.0;
  double chi_prime = 0.0;
  double alpha = 0.0;
  double kappa = 0.0;

  static constexpr std::size_t kCount = 5;

  std::array<double, kCount> as_array() const { return {chi, r, chi_prime, alpha, kappa}; }
  static GateParams from_array(const std::array<double, kCount>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

  bool finite() const {
    for (double v : as_array())
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Squeezing magnitude allowed for trained parameters (about 17.4 dB).
inline constexpr double kTrainableSqueezingLimit = 2.0;
/// Beyond this the truncated squeezer is not trusted at all.
inline constexpr double kSqueezingLimit = 2.5;
/// Extra Fock levels used while building two-mode gates before truncation.
inline constexpr std::size_t kDefaultPadding = 12;

/// x = (a + a^dag)/sqrt(2)
inline ComplexMatrix position_operator(std::size_t cutoff) {
  const auto ops = ladder_operators(cutoff);
  return (ops.a + ops.a_dag) / std::sqrt(2.0);
}

/// p = -i (a - a^dag)/sqrt(2)
inline ComplexMatrix momentum_operator(std::size_t cutoff) {
  const auto ops = ladder_operators(cutoff);
  return Complex(0.0, -1.0) * (ops.a - ops.a_dag) / std::sqrt(2.0);
}

inline ComplexMatrix rotation(double chi, std::size_t cutoff) {
  if (cutoff < 2) throw std::invalid_argument("rotation: cutoff must be at least 2");
  const auto c = static_cast<Eigen::Index>(cutoff);
  ComplexMatrix out = ComplexMatrix::Zero(c, c);
  for (Eigen::Index n = 0; n < c; ++n) out(n, n) = std::polar(1.0, chi * static_cast<double>(n));
  return out;
}

/// S(r) = exp((r/2)(a^2 - a^dag^2)); r > 0 squeezes the q quadrature.
inline ComplexMatrix squeeze(double r, std::size_t cutoff) {
  if (!(std::abs(r) <= kSqueezingLimit))
    throw SqueezingOutOfRange("squeeze: |r| = " + std::to_string(std::abs(r)) + " exceeds " + std::to_string(kSqueezingLimit));
  const auto ops = ladder_operators(cutoff);
  return matrix_exponential(0.5 * r * (ops.a * ops.a - ops.a_dag * ops.a_dag));
}

/// D(alpha) = exp(alpha (a^dag - a)) for real alpha.
inline ComplexMatrix displace(double alpha, std::size_t cutoff) {
  const auto ops = ladder_operators(cutoff);
  return matrix_exponential(alpha * (ops.a_dag - ops.a));
}

/// R(chi) S(r) R(chi') D(alpha): the single-mode part of the QITE block.
inline ComplexMatrix single_mode_block(const GateParams& p, std::size_t cutoff) {
  return rotation(p.chi, cutoff) * squeeze(p.r, cutoff) * rotation(p.chi_prime, cutoff) * displace(p.alpha, cutoff);
}

namespace detail {

struct Spectrum {
  RealVector values;
  ComplexMatrix vectors;
};

inline Spectrum spectrum(const ComplexMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian);
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Keeps the (i, k) entries with i, k < cutoff of a two-mode operator built at dimension `dim`.
inline ComplexMatrix truncate_two_mode(const ComplexMatrix& op, std::size_t dim, std::size_t cutoff) {
  if (dim == cutoff) return op;
  const auto m = static_cast<Eigen::Index>(dim);
  const auto c = static_cast<Eigen::Index>(cutoff);
  ComplexMatrix out(c * c, c * c);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index k = 0; k < c; ++k)
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index l = 0; l < c; ++l) out(i * c + k, j * c + l) = op(i * m + k, j * m + l);
  return out;
}

}  // namespace detail

/// X(kappa) = exp(-i kappa x (x) p), control (x factor) on mode 0.
///
/// Built spectrally: x (x) p is diagonal in the product of the x and p
/// eigenbases, so the exponential is exact for the truncated generator.
/// With padding > 0 the gate is built at cutoff + padding and truncated.
inline ComplexMatrix controlled_x(double kappa, std::size_t cutoff, std::size_t padding = 0) {
  const std::size_t dim = cutoff + padding;
  const auto xs = detail::spectrum(position_operator(dim));
  const auto ps = detail::spectrum(momentum_operator(dim));
  const ComplexMatrix w = tensor_product(xs.vectors, ps.vectors);
  const auto m = static_cast<Eigen::Index>(dim);
  ComplexVector phases(m * m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < m; ++k) phases(j * m + k) = std::polar(1.0, -kappa * xs.values(j) * ps.values(k));
  const ComplexMatrix full = w * phases.asDiagonal() * w.adjoint();
  return detail::truncate_two_mode(full, dim, cutoff);
}

/// Applies X(kappa) to a two-mode state given as a dim x dim amplitude matrix
/// (row = control). Same spectral construction as controlled_x(), O(dim^3).
inline ComplexMatrix apply_controlled_x(double kappa, const ComplexMatrix& psi) {
  if (psi.rows() != psi.cols()) throw std::invalid_argument("apply_controlled_x: square amplitude matrix required");
  const auto dim = static_cast<std::size_t>(psi.rows());
  const auto xs = detail::spectrum(position_operator(dim));
  const auto ps = detail::spectrum(momentum_operator(dim));
  ComplexMatrix z = xs.vectors.adjoint() * psi * ps.vectors.conjugate();
  for (Eigen::Index j = 0; j < z.rows(); ++j)
    for (Eigen::Index k = 0; k < z.cols(); ++k) z(j, k) *= std::polar(1.0, -kappa * xs.values(j) * ps.values(k));
  return xs.vectors * z * ps.vectors.transpose();
}

/// exp(theta (a^dag b - a b^dag)) with theta = pi/4; |0,1> -> (|0,1> + |1,0>)/sqrt(2).
inline ComplexMatrix beam_splitter_5050(std::size_t cutoff) {
  const auto ops = ladder_operators(cutoff);
  const ComplexMatrix gen = tensor_product(ops.a_dag, ops.a) - tensor_product(ops.a, ops.a_dag);
  return matrix_exponential((kPi / 4.0) * gen);
}

/// Full two-mode block U = (R S R' D (x) I) X on visible (x) ancilla.
inline ComplexMatrix qite_block(const GateParams& p, std::size_t cutoff, std::size_t padding = 0) {
  if (!p.finite()) throw std::invalid_argument("qite_block: non-finite parameter");
  const std::size_t dim = cutoff + padding;
  const ComplexMatrix full = tensor_product(single_mode_block(p, dim), identity(dim)) * controlled_x(p.kappa, dim);
  return detail::truncate_two_mode(full, dim, cutoff);
}

/// Visible-mode operators T_k = <k|_A U |0>_A for ancilla outcomes k = 0..max_outcome.
///
/// The single-mode gates act on the visible mode only, so
/// T_k = G * <k|X(kappa)|0>_A, and <k|X|0>_A = V diag(f_k(xi)) V^dag in the
/// eigenbasis {xi} of x with f_k(xi) = <k| exp(-i kappa xi p) |0>. Everything
/// is built at cutoff + padding and truncated to cutoff afterwards.
inline std::vector<ComplexMatrix> qite_transfers(const GateParams& p, std::size_t cutoff, std::size_t max_outcome,
                                                 std::size_t padding = kDefaultPadding) {
  if (!p.finite()) throw std::invalid_argument("qite_transfers: non-finite parameter");
  const std::size_t dim = cutoff + padding;
  if (max_outcome >= dim) throw std::invalid_argument("qite_transfers: outcome exceeds the working dimension");
  const auto m = static_cast<Eigen::Index>(dim);
  const auto c = static_cast<Eigen::Index>(cutoff);
  const auto xs = detail::spectrum(position_operator(dim));
  const auto ps = detail::spectrum(momentum_operator(dim));
  const ComplexMatrix g = single_mode_block(p, dim);

  std::vector<ComplexMatrix> out;
  out.reserve(max_outcome + 1);
  ComplexVector f(m);
  for (std::size_t k = 0; k <= max_outcome; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index l = 0; l < m; ++l) {
      Complex s = 0.0;
      for (Eigen::Index j = 0; j < m; ++j)
        s += ps.vectors(kk, j) * std::polar(1.0, -p.kappa * xs.values(l) * ps.values(j)) * std::conj(ps.vectors(0, j));
      f(l) = s;
    }
    const ComplexMatrix block = xs.vectors * f.asDiagonal() * xs.vectors.adjoint();
    out.push_back((g * block).topLeftCorner(c, c));
  }
  return out;
}

inline ComplexMatrix qite_transfer(const GateParams& p, std::size_t cutoff, std::size_t outcome,
                                   std::size_t padding = kDefaultPadding) {
  return qite_transfers(p, cutoff, outcome, padding).back();
}

struct KrausChannel {
  std::vector<ComplexMatrix> operators;
  double transmissivity = 1.0;

  std::size_t cutoff() const { return operators.empty() ? 0 : static_cast<std::size_t>(operators.front().rows()); }
};

/// Pure-loss channel a -> sqrt(T) a + sqrt(1-T) b with b in vacuum:
/// K_k = sqrt((1-T)^k / k!) T^(n/2) a^k, k = 0..cutoff-1.
inline KrausChannel loss_channel(double transmissivity, std::size_t cutoff) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
    throw std::invalid_argument("loss_channel: transmissivity must lie in [0, 1]");
  const auto c = static_cast<Eigen::Index>(cutoff);
  const double t = transmissivity;
  KrausChannel ch;
  ch.transmissivity = t;
  for (Eigen::Index k = 0; k < c; ++k) {
    ComplexMatrix op = ComplexMatrix::Zero(c, c);
    for (Eigen::Index n = k; n < c; ++n) {
      // <n-k| K_k |n> = sqrt(C(n,k) (1-T)^k T^(n-k))
      const double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      const double tk = k == 0 ? 1.0 : std::pow(1.0 - t, static_cast<double>(k));
      const double tn = n == k ? 1.0 : std::pow(t, static_cast<double>(n - k));
      op(n - k, n) = std::sqrt(std::exp(log_binom) * tk * tn);
    }
    ch.operators.push_back(std::move(op));
  }
  return ch;
}

/// sum_k K rho K^dag, renormalized to unit trace.
inline DensityMatrix apply_channel(const DensityMatrix& rho, const KrausChannel& ch) {
  if (ch.cutoff() != rho.cutoff()) throw std::invalid_argument("apply_channel: cutoff mismatch");
  ComplexMatrix out = ComplexMatrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const auto& k : ch.operators) out += k * rho.matrix() * k.adjoint();
  return DensityMatrix(std::move(out));
}

/// Squeezing in decibels, 10 log10(e^{2|r|}).
inline double squeezing_db(double r) {
  return 20.0 * std::abs(r) * std::log10(std::exp(1.0));
}

inline double squeezing_from_db(double db) {
  return db / (20.0 * std::log10(std::exp(1.0)));
}

}  // namespace cvqbm

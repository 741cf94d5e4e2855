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

// Dense linear algebra over truncated Fock spaces.
//
// Multi-mode amplitudes are indexed with mode 0 as the most significant
// base-cutoff digit: |n0, n1> lives at n0 * cutoff + n1. tensor_product()
// follows the same order, so (A (x) B) acts on mode 0 with A.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cvqbm/error.hpp"

namespace cvqbm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline std::size_t int_pow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) out *= base;
  return out;
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline double hermitian_defect(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Pure state of `num_modes` bosonic modes, each truncated at `cutoff` levels.
class FockVector {
 public:
  FockVector(std::size_t num_modes, std::size_t cutoff)
      : num_modes_(num_modes), cutoff_(cutoff),
        amplitudes_(ComplexVector::Zero(static_cast<Eigen::Index>(detail::int_pow(cutoff, num_modes)))) {
    if (num_modes == 0 || cutoff == 0) throw std::invalid_argument("FockVector: num_modes and cutoff must be positive");
  }

  FockVector(std::size_t num_modes, std::size_t cutoff, ComplexVector amplitudes)
      : num_modes_(num_modes), cutoff_(cutoff), amplitudes_(std::move(amplitudes)) {
    if (num_modes == 0 || cutoff == 0) throw std::invalid_argument("FockVector: num_modes and cutoff must be positive");
    if (static_cast<std::size_t>(amplitudes_.size()) != detail::int_pow(cutoff, num_modes))
      throw std::invalid_argument("FockVector: amplitude count must equal cutoff^num_modes");
    if (!amplitudes_.allFinite()) throw std::invalid_argument("FockVector: non-finite amplitude");
  }

  /// Single basis state |levels[0], levels[1], ...>.
  static FockVector basis(std::size_t cutoff, std::initializer_list<std::size_t> levels) {
    FockVector out(levels.size(), cutoff);
    std::size_t idx = 0;
    for (std::size_t n : levels) {
      if (n >= cutoff) throw std::invalid_argument("FockVector::basis: level exceeds cutoff");
      idx = idx * cutoff + n;
    }
    out.amplitudes_(static_cast<Eigen::Index>(idx)) = 1.0;
    return out;
  }

  std::size_t num_modes() const noexcept { return num_modes_; }
  std::size_t cutoff() const noexcept { return cutoff_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  const ComplexVector& amplitudes() const noexcept { return amplitudes_; }
  ComplexVector& amplitudes() noexcept { return amplitudes_; }

  double norm() const { return amplitudes_.norm(); }

  FockVector& normalize() {
    const double n = norm();
    if (n == 0.0) throw std::invalid_argument("FockVector::normalize: zero vector");
    amplitudes_ /= n;
    return *this;
  }

  /// Amplitudes of a two-mode state as a cutoff x cutoff matrix (row = mode 0).
  ComplexMatrix as_matrix() const {
    if (num_modes_ != 2) throw UnsupportedShape("FockVector::as_matrix requires two modes");
    const auto c = static_cast<Eigen::Index>(cutoff_);
    ComplexMatrix m(c, c);
    for (Eigen::Index i = 0; i < c; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = amplitudes_(i * c + j);
    return m;
  }

  static FockVector from_matrix(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("FockVector::from_matrix: square matrix required");
    const auto c = m.rows();
    ComplexVector v(c * c);
    for (Eigen::Index i = 0; i < c; ++i)
      for (Eigen::Index j = 0; j < c; ++j) v(i * c + j) = m(i, j);
    return FockVector(2, static_cast<std::size_t>(c), std::move(v));
  }

 private:
  std::size_t num_modes_;
  std::size_t cutoff_;
  ComplexVector amplitudes_;
};

/// Single-mode density matrix: Hermitian, positive semidefinite, unit trace.
///
/// The constructor symmetrizes away round-off and rescales to trace 1; it
/// rejects inputs that are far from Hermitian or have non-positive trace.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
      throw std::invalid_argument("DensityMatrix: square non-empty matrix required");
    if (!matrix_.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entry");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    if (detail::hermitian_defect(matrix_) > 1e-8 * scale)
      throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
    matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
    const double tr = matrix_.trace().real();
    if (!(tr > 0.0)) throw std::invalid_argument("DensityMatrix: trace must be positive");
    matrix_ /= tr;
  }

  static DensityMatrix pure(const ComplexVector& psi) {
    return DensityMatrix(psi * psi.adjoint());
  }

  static DensityMatrix basis(std::size_t cutoff, std::size_t n) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(cutoff), static_cast<Eigen::Index>(cutoff));
    m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = 1.0;
    return DensityMatrix(std::move(m));
  }

  std::size_t cutoff() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  Complex operator()(Eigen::Index m, Eigen::Index n) const { return matrix_(m, n); }

  double purity() const { return (matrix_ * matrix_).trace().real(); }

  /// <n>, the mean photon number.
  double mean_photon_number() const {
    double s = 0.0;
    for (Eigen::Index n = 0; n < matrix_.rows(); ++n) s += static_cast<double>(n) * matrix_(n, n).real();
    return s;
  }

  RealVector eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

 private:
  ComplexMatrix matrix_;
};

struct LadderOperators {
  ComplexMatrix a;
  ComplexMatrix a_dag;
  ComplexMatrix n;
};

inline LadderOperators ladder_operators(std::size_t cutoff) {
  if (cutoff < 2) throw std::invalid_argument("ladder_operators: cutoff must be at least 2");
  const auto c = static_cast<Eigen::Index>(cutoff);
  LadderOperators ops{ComplexMatrix::Zero(c, c), ComplexMatrix::Zero(c, c), ComplexMatrix::Zero(c, c)};
  for (Eigen::Index n = 1; n < c; ++n) ops.a(n - 1, n) = std::sqrt(static_cast<double>(n));
  ops.a_dag = ops.a.adjoint();
  ops.n = ops.a_dag * ops.a;
  return ops;
}

/// exp(m) by scaling and squaring with a degree-13 Pade approximant.
inline ComplexMatrix matrix_exponential(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix_exponential: square matrix required");
  if (!m.allFinite()) throw std::invalid_argument("matrix_exponential: non-finite entry");
  if (m.rows() == 0) return m;
  return m.exp();
}

/// Kronecker product; `a` acts on the more significant index.
inline ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexVector tensor_product(const ComplexVector& u, const ComplexVector& v) {
  ComplexVector out(u.size() * v.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out.segment(i * v.size(), v.size()) = u(i) * v;
  return out;
}

inline ComplexMatrix identity(std::size_t dim) {
  return ComplexMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

/// Reduced state of one mode of a two-mode pure state.
inline DensityMatrix partial_trace(const FockVector& state, std::size_t keep_mode) {
  if (state.num_modes() != 2) throw UnsupportedShape("partial_trace: two-mode state required");
  if (keep_mode > 1) throw std::invalid_argument("partial_trace: keep_mode must be 0 or 1");
  const ComplexMatrix psi = state.as_matrix();
  // rho[m][n] = sum_k psi[m,k] conj(psi[n,k]) for keep 0; transpose roles for keep 1.
  if (keep_mode == 0) return DensityMatrix(psi * psi.adjoint());
  return DensityMatrix(psi.transpose() * psi.conjugate());
}

/// Reduced state of one mode of a two-mode density matrix (dimension cutoff^2).
inline DensityMatrix partial_trace(const ComplexMatrix& rho, std::size_t cutoff, std::size_t keep_mode) {
  const auto c = static_cast<Eigen::Index>(cutoff);
  if (rho.rows() != c * c || rho.cols() != c * c) throw UnsupportedShape("partial_trace: expected a two-mode density matrix");
  if (keep_mode > 1) throw std::invalid_argument("partial_trace: keep_mode must be 0 or 1");
  ComplexMatrix out = ComplexMatrix::Zero(c, c);
  for (Eigen::Index m = 0; m < c; ++m)
    for (Eigen::Index n = 0; n < c; ++n)
      for (Eigen::Index k = 0; k < c; ++k)
        out(m, n) += keep_mode == 0 ? rho(m * c + k, n * c + k) : rho(k * c + m, k * c + n);
  return DensityMatrix(std::move(out));
}

struct Projection {
  FockVector reduced;
  double probability;
};

inline constexpr double kDegenerateProbability = 1e-14;

/// Projects `mode` onto |outcome> and drops it; the remainder is renormalized.
inline Projection project_mode(const FockVector& state, std::size_t mode, std::size_t outcome) {
  const std::size_t modes = state.num_modes();
  const std::size_t c = state.cutoff();
  if (modes < 2) throw UnsupportedShape("project_mode: need at least two modes");
  if (mode >= modes) throw std::invalid_argument("project_mode: mode index out of range");
  if (outcome >= c) throw std::invalid_argument("project_mode: outcome must be below the cutoff");

  const std::size_t inner = detail::int_pow(c, modes - 1 - mode);
  const std::size_t outer = detail::int_pow(c, mode);
  FockVector reduced(modes - 1, c);
  const auto& in = state.amplitudes();
  auto& out = reduced.amplitudes();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i)
      out(static_cast<Eigen::Index>(o * inner + i)) = in(static_cast<Eigen::Index>((o * c + outcome) * inner + i));

  const double p = out.squaredNorm();
  if (p < kDegenerateProbability)
    throw DegeneratePostSelection("project_mode: outcome " + std::to_string(outcome) + " has probability " + std::to_string(p), p);
  out /= std::sqrt(p);
  return {std::move(reduced), p};
}

enum class MatrixFunction { Sqrt, Log };

inline constexpr double kLogEigenvalueFloor = 1e-12;

/// f(m) for Hermitian m through its eigendecomposition. sqrt clips negative
/// and round-off-sized eigenvalues to zero; log floors them at 1e-12.
inline ComplexMatrix hermitian_matrix_function(const ComplexMatrix& m, MatrixFunction f) {
  if (m.rows() != m.cols()) throw std::invalid_argument("hermitian_matrix_function: square matrix required");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (detail::hermitian_defect(m) > 1e-9 * scale)
    throw std::invalid_argument("hermitian_matrix_function: matrix is not Hermitian");
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  RealVector ev = es.eigenvalues();
  // Eigenvalues at round-off level are zero; their square roots would not be.
  const double noise = 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(ev.size()) *
                       std::max(1e-300, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    ev(i) = f == MatrixFunction::Sqrt ? (ev(i) > noise ? std::sqrt(ev(i)) : 0.0)
                                      : std::log(std::max(ev(i), kLogEigenvalueFloor));
  }
  const ComplexMatrix& v = es.eigenvectors();
  ComplexMatrix out = v * ev.asDiagonal() * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

}  // namespace cvqbm

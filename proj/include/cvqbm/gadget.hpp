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

// Overlap estimation for quantum targets: two control modes prepared in
// |0>|1>, a 50:50 beam splitter, a CSWAP of the data modes controlled by the
// first control mode, a second beam splitter, and a photon count on the
// first control mode. P1 - P0 = |<phi|psi>|^2.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "cvqbm/distributions.hpp"
#include "cvqbm/fock.hpp"
#include "cvqbm/gates.hpp"

namespace cvqbm {

struct GadgetResult {
  double p0 = 0.0;
  double p1 = 0.0;
  double overlap_estimate = 0.0;
  std::size_t shots = 0;  ///< 0 in exact mode
};

/// Control modes only ever hold one photon between them.
inline constexpr std::size_t kControlCutoff = 2;

/// |0><0| (x) I + |1><1| (x) SWAP on control (dim 2) (x) data (x) data.
inline ComplexMatrix cswap(std::size_t cutoff) {
  const auto c = static_cast<Eigen::Index>(cutoff);
  const Eigen::Index data = c * c;
  ComplexMatrix out = ComplexMatrix::Zero(2 * data, 2 * data);
  out.topLeftCorner(data, data).setIdentity();
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out(data + j * c + i, data + i * c + j) = 1.0;
  return out;
}

/// Exact control statistics for pure psi (target) and phi (model output).
inline GadgetResult overlap_exact(const ComplexVector& psi, const ComplexVector& phi) {
  if (psi.size() != phi.size()) throw std::invalid_argument("overlap_exact: cutoff mismatch");
  const Eigen::Index c = psi.size();
  const Eigen::Index data = c * c;
  // amplitude index: ((c1 * 2 + c2) * c + i) * c + j
  ComplexVector state = ComplexVector::Zero(4 * data);
  const ComplexVector pp = tensor_product(psi, phi);
  state.segment((0 * 2 + 1) * data, data) = pp;  // |0>|1>|psi>|phi>

  const ComplexMatrix bs = beam_splitter_5050(kControlCutoff);
  auto apply_bs = [&](ComplexVector& s) {
    ComplexVector out = ComplexVector::Zero(s.size());
    for (Eigen::Index a = 0; a < 4; ++a)
      for (Eigen::Index b = 0; b < 4; ++b)
        if (bs(a, b) != Complex(0.0)) out.segment(a * data, data) += bs(a, b) * s.segment(b * data, data);
    s = std::move(out);
  };

  apply_bs(state);
  const ComplexMatrix sw = cswap(static_cast<std::size_t>(c));
  for (Eigen::Index c2 = 0; c2 < 2; ++c2) {
    ComplexVector sub(2 * data);
    sub.head(data) = state.segment((0 * 2 + c2) * data, data);
    sub.tail(data) = state.segment((1 * 2 + c2) * data, data);
    const ComplexVector swapped = sw * sub;
    state.segment((0 * 2 + c2) * data, data) = swapped.head(data);
    state.segment((1 * 2 + c2) * data, data) = swapped.tail(data);
  }
  apply_bs(state);

  GadgetResult r;
  r.p0 = state.segment(0, 2 * data).squaredNorm();
  r.p1 = state.segment(2 * data, 2 * data).squaredNorm();
  r.overlap_estimate = r.p1 - r.p0;
  return r;
}

inline GadgetResult overlap_exact(const FockVector& psi, const FockVector& phi) {
  if (psi.num_modes() != 1 || phi.num_modes() != 1) throw UnsupportedShape("overlap_exact: single-mode states required");
  if (psi.cutoff() != phi.cutoff()) throw std::invalid_argument("overlap_exact: cutoff mismatch");
  return overlap_exact(psi.amplitudes(), phi.amplitudes());
}

/// Mixed model output: the gadget is linear in rho, so average over its eigenstates.
inline GadgetResult overlap_exact(const ComplexVector& psi, const DensityMatrix& rho) {
  if (static_cast<std::size_t>(psi.size()) != rho.cutoff()) throw std::invalid_argument("overlap_exact: cutoff mismatch");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
  GadgetResult acc;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double w = es.eigenvalues()(k);
    if (w <= 1e-15) continue;
    const auto r = overlap_exact(psi, ComplexVector(es.eigenvectors().col(k)));
    acc.p0 += w * r.p0;
    acc.p1 += w * r.p1;
  }
  acc.overlap_estimate = acc.p1 - acc.p0;
  return acc;
}

/// Shot-noise version: `shots` Bernoulli draws of the first control mode.
inline GadgetResult overlap_sampled(const FockVector& psi, const FockVector& phi, std::size_t shots, std::uint64_t seed) {
  if (shots == 0) throw std::invalid_argument("overlap_sampled: shots must be at least 1");
  const auto exact = overlap_exact(psi, phi);
  const double p1 = exact.p1 / (exact.p0 + exact.p1);
  std::mt19937_64 rng(seed);
  std::size_t ones = 0;
  for (std::size_t s = 0; s < shots; ++s)
    if (uniform01(rng) < p1) ++ones;
  GadgetResult r;
  r.shots = shots;
  r.p1 = static_cast<double>(ones) / static_cast<double>(shots);
  r.p0 = 1.0 - r.p1;
  r.overlap_estimate = r.p1 - r.p0;
  return r;
}

}  // namespace cvqbm

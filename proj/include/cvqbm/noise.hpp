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

// Photon-loss robustness: the forward pass with loss channels inserted, and
// the (T, seed) sweep bookkeeping.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <istream>
#include <sstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cvqbm/engine.hpp"
#include "cvqbm/gates.hpp"

namespace cvqbm {

enum class LossPlacement {
  VisibleOnly,  ///< loss on the visible mode after every QITE step
  AllModes,     ///< additionally on each ancilla before it is counted
};

/// Largest cutoff accepted for noisy propagation.
inline constexpr std::size_t kMaxNoisyCutoff = 12;

/// Forward pass with loss of transmissivity T.
///
/// Every operation acts on the visible mode (or on an ancilla that is then
/// measured), so the pipeline propagates the visible reduced density matrix
/// rho_v directly; tracing the hidden mode commutes with all of it, and a
/// channel applied to the hidden marginal leaves rho_v unchanged.
///
/// With ancilla loss the post-selected map has Kraus operators
/// A_j = <o|L_j|o+j> T_{o+j}, where T_k = <k|U|0>_A and L_j are the loss
/// operators: j lost photons turn an (o+j)-photon ancilla into a click of o.
inline ForwardResult noisy_forward(const QiteParams& params, const QbmConfig& cfg, double transmissivity,
                                   LossPlacement placement = LossPlacement::VisibleOnly) {
  cfg.validate();
  if (cfg.cutoff > kMaxNoisyCutoff) throw std::invalid_argument("noisy_forward: cutoff must be at most 12");
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
    throw std::invalid_argument("noisy_forward: transmissivity must lie in [0, 1]");
  if (params.steps.size() != cfg.steps) throw std::invalid_argument("noisy_forward: parameter count does not match qbm.steps");

  const double t = transmissivity;
  const std::size_t o = cfg.post_select_outcome;
  const std::size_t dim = cfg.cutoff + cfg.padding;
  const KrausChannel visible_loss = loss_channel(t, cfg.cutoff);

  ComplexMatrix rho = partial_trace(initial_state(cfg), 0).matrix();
  std::vector<double> probs;
  double success = 1.0;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    ComplexMatrix next;
    if (placement == LossPlacement::AllModes && t < 1.0) {
      const auto transfers = qite_transfers(params.steps[s], cfg.cutoff, dim - 1, cfg.padding);
      next = ComplexMatrix::Zero(rho.rows(), rho.cols());
      for (std::size_t j = 0; o + j < dim; ++j) {
        const double log_binom = std::lgamma(o + j + 1.0) - std::lgamma(j + 1.0) - std::lgamma(o + 1.0);
        const double w = std::exp(log_binom) * (j == 0 ? 1.0 : std::pow(1.0 - t, static_cast<double>(j))) *
                         (o == 0 ? 1.0 : std::pow(t, static_cast<double>(o)));
        if (w == 0.0) continue;
        const ComplexMatrix& tk = transfers[o + j];
        next += w * (tk * rho * tk.adjoint());
      }
    } else {
      const ComplexMatrix tk = qite_transfer(params.steps[s], cfg.cutoff, o, cfg.padding);
      next = tk * rho * tk.adjoint();
    }
    const double p = next.trace().real();
    if (!(p >= kDegenerateProbability))
      throw DegeneratePostSelection("noisy_forward: step " + std::to_string(s + 1) + " post-selection probability " +
                                        std::to_string(p) + " is degenerate",
                                    p, static_cast<int>(s));
    rho = next / p;
    if (t < 1.0) rho = apply_channel(DensityMatrix(rho), visible_loss).matrix();
    probs.push_back(p);
    success *= p;
  }
  return {DensityMatrix(rho), success, std::move(probs)};
}

struct SweepRun {
  double transmissivity = 1.0;
  std::uint64_t seed = 0;
  bool ok = false;
  double fidelity = 0.0;
  double kl = 0.0;
  double success_prob = 0.0;
  std::string error;
};

struct SweepRow {
  double transmissivity;
  std::size_t runs;
  std::size_t failures;
  double mean_fidelity, std_fidelity;
  double mean_kl, std_kl;
  double mean_success;
};

struct NoiseSweepConfig {
  std::vector<double> t_values;
  std::size_t repeats = 5;
  LossPlacement placement = LossPlacement::VisibleOnly;
  std::uint64_t base_seed = 1;
  std::size_t threads = 1;

  void validate() const {
    if (t_values.empty()) throw std::invalid_argument("sweep: at least one T value required");
    for (double t : t_values)
      if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sweep: T values must lie in [0, 1]");
    if (repeats == 0) throw std::invalid_argument("sweep: repeats must be positive");
  }
};

/// Result of a single (T, seed) training run.
struct RunMetrics {
  double fidelity;
  double kl;
  double success_prob;
};

using SweepRunner = std::function<RunMetrics(double transmissivity, std::uint64_t seed)>;

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) {
    mean = sd = std::nan("");
    return;
  }
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(sd / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace detail

/// Trains `repeats` seeds per T. A failed run is recorded and excluded from
/// the aggregates; it never aborts the sweep.
inline std::vector<SweepRun> sweep_runs(const NoiseSweepConfig& cfg, const SweepRunner& run) {
  cfg.validate();
  std::vector<SweepRun> runs;
  for (double t : cfg.t_values)
    for (std::size_t k = 0; k < cfg.repeats; ++k) runs.push_back({t, cfg.base_seed + k, false, 0, 0, 0, {}});

  auto exec = [&](SweepRun& r) {
    try {
      const RunMetrics m = run(r.transmissivity, r.seed);
      r.fidelity = m.fidelity;
      r.kl = m.kl;
      r.success_prob = m.success_prob;
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, runs.size()));
  if (workers == 1) {
    for (auto& r : runs) exec(r);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < runs.size(); i += workers) exec(runs[i]);
      });
  }
  return runs;
}

inline std::vector<SweepRow> aggregate(const NoiseSweepConfig& cfg, const std::vector<SweepRun>& runs) {
  std::vector<SweepRow> rows;
  for (double t : cfg.t_values) {
    std::vector<double> f, kl, sp;
    std::size_t total = 0, failed = 0;
    for (const auto& r : runs) {
      if (r.transmissivity != t) continue;
      ++total;
      if (!r.ok) {
        ++failed;
        continue;
      }
      f.push_back(r.fidelity);
      kl.push_back(r.kl);
      sp.push_back(r.success_prob);
    }
    SweepRow row{t, total, failed, 0, 0, 0, 0, 0};
    double unused = 0.0;
    detail::mean_std(f, row.mean_fidelity, row.std_fidelity);
    detail::mean_std(kl, row.mean_kl, row.std_kl);
    detail::mean_std(sp, row.mean_success, unused);
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_runs_csv(std::ostream& os, const std::vector<SweepRun>& runs) {
  os << "T,seed,fidelity,kl,success_prob,status\n" << std::setprecision(17);
  for (const auto& r : runs) {
    os << r.transmissivity << ',' << r.seed << ',' << r.fidelity << ',' << r.kl << ',' << r.success_prob << ','
       << (r.ok ? "ok" : "failed") << '\n';
  }
}

inline void write_sweep_summary_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "T,runs,failures,mean_fidelity,std_fidelity,mean_kl,std_kl,mean_success_prob\n" << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.transmissivity << ',' << r.runs << ',' << r.failures << ',' << r.mean_fidelity << ',' << r.std_fidelity
       << ',' << r.mean_kl << ',' << r.std_kl << ',' << r.mean_success << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline void expect_header(std::istream& is, const std::string& header, const char* who) {
  std::string line;
  if (!std::getline(is, line) || line != header) throw std::invalid_argument(std::string(who) + ": unexpected header");
}

}  // namespace detail

inline std::vector<SweepRun> read_sweep_runs_csv(std::istream& is) {
  detail::expect_header(is, "T,seed,fidelity,kl,success_prob,status", "read_sweep_runs_csv");
  std::vector<SweepRun> runs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 6) throw std::invalid_argument("read_sweep_runs_csv: expected 6 columns");
    SweepRun r;
    r.transmissivity = std::stod(c[0]);
    r.seed = std::stoull(c[1]);
    r.fidelity = std::stod(c[2]);
    r.kl = std::stod(c[3]);
    r.success_prob = std::stod(c[4]);
    r.ok = c[5] == "ok";
    runs.push_back(r);
  }
  return runs;
}

inline std::vector<SweepRow> read_sweep_summary_csv(std::istream& is) {
  detail::expect_header(is, "T,runs,failures,mean_fidelity,std_fidelity,mean_kl,std_kl,mean_success_prob",
                        "read_sweep_summary_csv");
  std::vector<SweepRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 8) throw std::invalid_argument("read_sweep_summary_csv: expected 8 columns");
    rows.push_back({std::stod(c[0]), std::stoul(c[1]), std::stoul(c[2]), std::stod(c[3]), std::stod(c[4]),
                    std::stod(c[5]), std::stod(c[6]), std::stod(c[7])});
  }
  return rows;
}

}  // namespace cvqbm

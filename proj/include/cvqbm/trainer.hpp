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

// Fidelity objective, finite-difference gradients, Adam with exponential
// learning-rate decay, and the training loop.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cvqbm/engine.hpp"
#include "cvqbm/error.hpp"
#include "cvqbm/fock.hpp"
#include "cvqbm/quadrature.hpp"

namespace cvqbm {

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 without shortcuts.
inline double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.cutoff() != b.cutoff()) throw std::invalid_argument("fidelity: cutoff mismatch");
  const ComplexMatrix sa = hermitian_matrix_function(a.matrix(), MatrixFunction::Sqrt);
  ComplexMatrix inner = sa * b.matrix() * sa;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  const double tr = hermitian_matrix_function(inner, MatrixFunction::Sqrt).trace().real();
  return std::clamp(tr * tr, 0.0, 1.0);
}

inline constexpr double kPurityTolerance = 1e-9;

/// Fidelity; uses <psi|rho|psi> = Tr(a b) when either argument is pure.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.cutoff() != b.cutoff()) throw std::invalid_argument("fidelity: cutoff mismatch");
  if (std::abs(a.purity() - 1.0) < kPurityTolerance || std::abs(b.purity() - 1.0) < kPurityTolerance)
    return std::clamp((a.matrix() * b.matrix()).trace().real(), 0.0, 1.0);
  return uhlmann_fidelity(a, b);
}

enum class InitScheme { SmallUniform, Custom };

struct TrainConfig {
  std::size_t epochs = 100;
  double lr0 = 0.05;
  std::size_t decay_steps = 100;
  double decay_rate = 0.96;
  double fd_step = 1e-4;
  std::uint64_t seed = 1;
  InitScheme init_scheme = InitScheme::SmallUniform;
  std::vector<double> custom_init;
  std::optional<double> success_floor;
  double success_weight = 1.0;  ///< multiplies the hinge penalty
  std::size_t threads = 1;

  void validate() const {
    if (epochs == 0) throw std::invalid_argument("train.epochs must be positive");
    if (!(lr0 > 0.0)) throw std::invalid_argument("train.lr0 must be positive");
    if (decay_steps == 0) throw std::invalid_argument("train.decay_steps must be positive");
    if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw std::invalid_argument("train.decay_rate must lie in (0, 1]");
    if (!(fd_step >= 1e-6 && fd_step <= 1e-2)) throw std::invalid_argument("train.fd_step must lie in [1e-6, 1e-2]");
    if (success_floor && !(*success_floor >= 0.0 && *success_floor <= 1.0))
      throw std::invalid_argument("train.success_floor must lie in [0, 1]");
    if (!(success_weight >= 0.0) || !std::isfinite(success_weight))
      throw std::invalid_argument("train.success_weight must be non-negative");
    if (threads == 0) throw std::invalid_argument("train.threads must be positive");
  }
};

/// What the trainer optimizes: a forward map and a fidelity against the target.
struct Model {
  std::function<ForwardResult(const QiteParams&)> forward;
  std::function<double(const DensityMatrix&)> fidelity;
};

inline Model make_model(const DensityMatrix& target, const QbmConfig& cfg) {
  return {[cfg](const QiteParams& p) { return cvqbm::forward(p, cfg); },
          [target](const DensityMatrix& rho) { return cvqbm::fidelity(target, rho); }};
}

struct Evaluation {
  double cost;
  double fidelity;
  double success_prob;
};

inline Evaluation evaluate(const Model& model, const QiteParams& params, std::optional<double> success_floor,
                           double success_weight = 1.0) {
  const ForwardResult fr = model.forward(params);
  const double f = model.fidelity(fr.rho_v);
  double c = 1.0 - f;
  if (success_floor) {
    const double gap = std::max(0.0, *success_floor - fr.success_prob);
    c += success_weight * gap * gap;
  }
  return {c, f, fr.success_prob};
}

/// C = 1 - F (+ w * max(0, floor - P)^2 below the success floor).
inline double cost(const QiteParams& params, const Model& model, std::optional<double> success_floor = std::nullopt,
                   double success_weight = 1.0) {
  return evaluate(model, params, success_floor, success_weight).cost;
}

inline double cost(const QiteParams& params, const DensityMatrix& target, const QbmConfig& cfg,
                   std::optional<double> success_floor = std::nullopt, double success_weight = 1.0) {
  return cost(params, make_model(target, cfg), success_floor, success_weight);
}

inline constexpr int kGradientRetries = 3;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h. A probe that hits a
/// degenerate post-selection is retried with h/10, up to three times.
/// Coordinates are split across `threads` workers; results do not depend on it.
template <class F>
std::vector<double> gradient(F&& f, std::span<const double> x, double h, std::size_t threads = 1) {
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0);
  std::vector<std::exception_ptr> errors(n);

  auto coordinate = [&](std::size_t i) {
    std::vector<double> probe(x.begin(), x.end());
    double step = h;
    for (int attempt = 0; attempt <= kGradientRetries; ++attempt, step /= 10.0) {
      try {
        probe[i] = x[i] + step;
        const double up = f(std::span<const double>(probe));
        probe[i] = x[i] - step;
        const double down = f(std::span<const double>(probe));
        g[i] = (up - down) / (2.0 * step);
        return;
      } catch (const DegeneratePostSelection&) {
        probe[i] = x[i];
      }
    }
    errors[i] = std::make_exception_ptr(
        GradientUnavailable("gradient: coordinate " + std::to_string(i) + " stays degenerate after retries", i));
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        coordinate(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          try {
            coordinate(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return g;
}

inline std::vector<double> gradient(const QiteParams& params, const Model& model, const TrainConfig& cfg) {
  const std::vector<double> x = params.flatten();
  return gradient([&](std::span<const double> p) {
    return cost(QiteParams::from_flat(std::vector<double>(p.begin(), p.end())), model, cfg.success_floor,
                cfg.success_weight);
  }, x, cfg.fd_step, cfg.threads);
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;  ///< completed updates

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;
};

/// lr0 * decay_rate^(t / decay_steps), continuous (not staircase).
inline double learning_rate(const TrainConfig& cfg, std::size_t t) {
  return cfg.lr0 * std::pow(cfg.decay_rate, static_cast<double>(t) / static_cast<double>(cfg.decay_steps));
}

/// Keeps every squeezing coordinate within the trainable range.
inline void clamp_squeezing(std::vector<double>& flat) {
  for (std::size_t i = 1; i < flat.size(); i += GateParams::kCount)
    flat[i] = std::clamp(flat[i], -kTrainableSqueezingLimit, kTrainableSqueezingLimit);
}

inline void adam_step(AdamState& st, std::vector<double>& params, std::span<const double> grads, const TrainConfig& cfg) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  const double lr = learning_rate(cfg, st.t);
  ++st.t;
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = AdamState::kBeta1 * st.m[i] + (1.0 - AdamState::kBeta1) * grads[i];
    st.v[i] = AdamState::kBeta2 * st.v[i] + (1.0 - AdamState::kBeta2) * grads[i] * grads[i];
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::kEpsilon);
  }
  clamp_squeezing(params);
}

struct TrainResult {
  QiteParams best_params;
  std::vector<double> fidelity_history;
  std::vector<double> cost_history;
  std::vector<double> success_history;
  double final_fidelity = 0.0;
  double final_cost = 1.0;
  double final_success_prob = 0.0;
  double final_kl = 0.0;
  std::size_t best_epoch = 0;
  std::size_t restarts = 0;
  std::size_t recoveries = 0;  ///< epochs that fell back to best_params
  std::uint64_t seed = 0;
  TrainConfig config;
};

inline constexpr int kInitAttempts = 5;

/// chi, chi', r, alpha ~ U(-0.1, 0.1) and kappa ~ U(0.05, 0.3) per step.
inline QiteParams small_uniform_init(std::size_t steps, std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
  QiteParams p;
  for (std::size_t s = 0; s < steps; ++s) {
    GateParams g;
    g.chi = u(-0.1, 0.1);
    g.r = u(-0.1, 0.1);
    g.chi_prime = u(-0.1, 0.1);
    g.alpha = u(-0.1, 0.1);
    g.kappa = u(0.05, 0.3);
    p.steps.push_back(g);
  }
  return p;
}

/// One Adam update per epoch; the best-fidelity parameters are kept.
inline TrainResult train(const Model& model, std::size_t steps, const TrainConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  TrainResult res;
  res.seed = cfg.seed;
  res.config = cfg;

  QiteParams params;
  Evaluation ev{};
  bool ok = false;
  for (int attempt = 0; attempt < kInitAttempts && !ok; ++attempt) {
    if (cfg.init_scheme == InitScheme::Custom) {
      if (cfg.custom_init.size() != steps * GateParams::kCount)
        throw std::invalid_argument("train.init: custom vector must hold 5 values per step");
      params = QiteParams::from_flat(cfg.custom_init);
    } else {
      params = small_uniform_init(steps, rng);
    }
    try {
      ev = evaluate(model, params, cfg.success_floor, cfg.success_weight);
      ok = true;
    } catch (const DegeneratePostSelection&) {
      ++res.restarts;
      if (cfg.init_scheme == InitScheme::Custom) break;
    }
  }
  if (!ok) throw InitializationFailed("train: every initialization hit a degenerate post-selection");

  std::vector<double> flat = params.flatten();
  clamp_squeezing(flat);
  AdamState adam;
  res.best_params = QiteParams::from_flat(flat);
  res.final_fidelity = -1.0;
  bool best_feasible = false;

  auto objective = [&](std::span<const double> p) {
    const QiteParams q = QiteParams::from_flat(std::vector<double>(p.begin(), p.end()));
    return evaluate(model, q, cfg.success_floor, cfg.success_weight).cost;
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const QiteParams current = QiteParams::from_flat(flat);
    // An update that lands on a dead post-selection branch scores as a total
    // miss; optimization resumes from the best point with fresh moments.
    std::vector<double> g;
    try {
      ev = evaluate(model, current, cfg.success_floor, cfg.success_weight);
      g = gradient(objective, flat, cfg.fd_step, cfg.threads);
    } catch (const DegeneratePostSelection&) {
      g.clear();
    } catch (const GradientUnavailable&) {
      g.clear();
    }
    if (g.empty()) {
      ev = Evaluation{1.0, 0.0, 0.0};
      ++res.recoveries;
    }
    res.fidelity_history.push_back(ev.fidelity);
    res.cost_history.push_back(ev.cost);
    res.success_history.push_back(ev.success_prob);
    // Under a success floor, epochs that meet it beat those that do not; the
    // penalized cost only ranks epochs while none has met it yet.
    bool better = ev.fidelity > res.final_fidelity;
    if (cfg.success_floor) {
      const bool feasible = ev.success_prob >= *cfg.success_floor;
      if (feasible != best_feasible)
        better = feasible;
      else if (!feasible)
        better = res.final_fidelity < 0.0 || ev.cost < res.final_cost;
      if (better) best_feasible = feasible;
    }
    if (better) {
      res.final_fidelity = ev.fidelity;
      res.final_cost = ev.cost;
      res.final_success_prob = ev.success_prob;
      res.best_params = current;
      res.best_epoch = epoch;
    }
    if (g.empty()) {
      flat = res.best_params.flatten();
      adam = AdamState{};
      continue;
    }
    adam_step(adam, flat, g, cfg);
  }
  return res;
}

inline TrainResult train(const DensityMatrix& target, const QbmConfig& qbm, const TrainConfig& cfg) {
  qbm.validate();
  return train(make_model(target, qbm), qbm.steps, cfg);
}

struct Generated {
  Pdf pdf;
  std::vector<double> samples;
  double kl;
};

/// Runs the trained circuit, reconstructs P(q) on the target's grid, samples
/// homodyne outcomes and scores KL(generated || target).
inline Generated generate(const TrainResult& result, const Model& model, const Pdf& target, std::size_t n_samples,
                          std::uint64_t seed) {
  const ForwardResult fr = model.forward(result.best_params);
  Pdf gen = density_to_pdf(fr.rho_v, target.grid);
  gen.normalize();
  std::mt19937_64 rng(seed);
  auto samples = sample_pdf(gen, n_samples, rng);
  const double kl = kl_divergence(gen, target);
  return {std::move(gen), std::move(samples), kl};
}

}  // namespace cvqbm

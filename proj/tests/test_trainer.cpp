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

#include <atomic>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvqbm/config.hpp"
#include "cvqbm/experiment.hpp"
#include "cvqbm/trainer.hpp"
#include "cvqbm_bundled.hpp"
#include "oracles.hpp"

namespace {

using namespace cvqbm;

DensityMatrix thermal(double delta, std::size_t cutoff) {
  QbmConfig cfg;
  cfg.steps = 0;
  cfg.delta = delta;
  cfg.cutoff = cutoff;
  return forward(QiteParams{}, cfg).rho_v;
}

TEST(Fidelity, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const DensityMatrix a(oracle::random_density(6, rng)), b(oracle::random_density(6, rng));
    const double ab = uhlmann_fidelity(a, b), ba = uhlmann_fidelity(b, a);
    EXPECT_NEAR(ab, ba, 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_NEAR(uhlmann_fidelity(a, a), 1.0, 1e-9);
  }
}

TEST(Fidelity, UhlmannMatchesPureOverlap) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const ComplexVector psi = oracle::random_state(8, rng);
    const DensityMatrix rho(oracle::random_density(8, rng));
    const double overlap = (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
    const auto pure = DensityMatrix::pure(psi);
    EXPECT_NEAR(uhlmann_fidelity(pure, rho), overlap, 1e-9);
    EXPECT_NEAR(fidelity(pure, rho), overlap, 1e-12);
    EXPECT_NEAR(fidelity(rho, pure), overlap, 1e-12);
  }
}

TEST(Fidelity, DiagonalExample) {
  // F(diag(1,0), diag(1/2,1/2)) = 1/2.
  ComplexMatrix a = ComplexMatrix::Zero(6, 6), b = ComplexMatrix::Zero(6, 6);
  a(0, 0) = 1.0;
  b(0, 0) = 0.5;
  b(1, 1) = 0.5;
  EXPECT_NEAR(uhlmann_fidelity(DensityMatrix(a), DensityMatrix(b)), 0.5, 1e-12);
  // Commuting states: (sum sqrt(p q))^2.
  ComplexMatrix c = ComplexMatrix::Zero(6, 6), d = ComplexMatrix::Zero(6, 6);
  c(0, 0) = 0.7, c(1, 1) = 0.3, d(0, 0) = 0.2, d(1, 1) = 0.8;
  const double expect = std::pow(std::sqrt(0.14) + std::sqrt(0.24), 2);
  EXPECT_NEAR(fidelity(DensityMatrix(c), DensityMatrix(d)), expect, 1e-10);
}

TEST(Fidelity, ThermalStatesClosedForm) {
  // Both diagonal: F = (sum_n sqrt(p_n q_n))^2 with geometric p, q.
  const double x = std::exp(-2.0), y = std::exp(-3.0);
  const double expect = std::pow(std::sqrt((1 - x) * (1 - y)) / (1 - std::sqrt(x * y)), 2);
  EXPECT_NEAR(fidelity(thermal(1.0, 20), thermal(1.5, 20)), expect, 1e-6);
}

TEST(Fidelity, CutoffMismatchThrows) {
  EXPECT_THROW(fidelity(DensityMatrix::basis(6, 0), DensityMatrix::basis(7, 0)), std::invalid_argument);
}

TEST(Gradient, ExactOnQuadratic) {
  const std::vector<double> a{1.0, -2.0, 0.5, 3.0};
  auto f = [&](std::span<const double> x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += a[i] * x[i] * x[i] + x[i];
    return s;
  };
  const std::vector<double> x{0.3, -0.7, 1.1, 0.05};
  const auto g = gradient(f, x, 1e-3);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(g[i], 2 * a[i] * x[i] + 1, 1e-9);
  EXPECT_EQ(gradient(f, x, 1e-3, 3), g);
}

TEST(Gradient, RichardsonRatioOnCost) {
  std::mt19937_64 rng(10);
  QbmConfig cfg;
  cfg.steps = 1;
  const auto target = thermal(1.0, cfg.cutoff);
  const auto model = make_model(target, cfg);
  QiteParams p{{oracle::random_gate_params(rng)}};
  const auto x = p.flatten();
  auto f = [&](std::span<const double> v) {
    return cost(QiteParams::from_flat(std::vector<double>(v.begin(), v.end())), model);
  };
  const double h = 0.1;
  const auto d1 = gradient(f, x, h), d2 = gradient(f, x, h / 2), d4 = gradient(f, x, h / 4);
  int checked = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double num = d1[i] - d2[i], den = d2[i] - d4[i];
    if (std::abs(den) < 1e-9) continue;
    ++checked;
    EXPECT_NEAR(num / den, 4.0, 1.2) << "coordinate " << i;
  }
  EXPECT_GE(checked, 3);
}

TEST(Gradient, RetriesDegenerateProbesWithSmallerStep) {
  std::atomic<int> calls{0};
  auto f = [&](std::span<const double> x) {
    ++calls;
    if (std::abs(x[0] - 1.0) > 1e-5) throw DegeneratePostSelection("edge", 0.0);
    return 3.0 * x[0];
  };
  const std::vector<double> x{1.0};
  const auto g = gradient(f, x, 1e-4);
  EXPECT_NEAR(g[0], 3.0, 1e-6);
  auto dead = [](std::span<const double>) -> double { throw DegeneratePostSelection("dead", 0.0); };
  EXPECT_THROW(gradient(dead, x, 1e-4), GradientUnavailable);
}

TEST(Adam, FirstStepIsLearningRate) {
  TrainConfig cfg;
  AdamState st;
  std::vector<double> p{0.5, -0.2, 0.0, 0.1, 0.2};
  const std::vector<double> g{0.3, -4.0, 1e-3, 0.0, 2.0};
  const auto before = p;
  adam_step(st, p, g, cfg);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i] == 0.0) {
      EXPECT_EQ(p[i], before[i]);
      continue;
    }
    const double moved = std::abs(p[i] - before[i]);
    EXPECT_GE(moved, 0.049);
    EXPECT_LE(moved, 0.05 + 1e-15);
    EXPECT_LT((p[i] - before[i]) * g[i], 0.0);
  }
  EXPECT_NEAR(learning_rate(cfg, 100), 0.048, 1e-15);
  EXPECT_NEAR(learning_rate(cfg, 0), 0.05, 1e-15);
}

TEST(Adam, SqueezingIsClamped) {
  TrainConfig cfg;
  cfg.lr0 = 0.5;
  AdamState st;
  std::vector<double> p{0.0, 1.9, 0.0, 0.0, 0.1};
  adam_step(st, p, std::vector<double>{0, -1, 0, 0, 0}, cfg);
  EXPECT_EQ(p[1], kTrainableSqueezingLimit);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.fd_step = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.success_floor = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Train, ReachesRealizableTarget) {
  QbmConfig qbm;
  qbm.steps = 1;
  const GateParams star{0.3, 0.25, -0.2, 0.3, 0.8};
  const auto target = forward(QiteParams{{star}}, qbm).rho_v;
  TrainConfig cfg;
  cfg.epochs = 200;
  const auto res = train(target, qbm, cfg);
  EXPECT_GE(res.final_fidelity, 0.99);
  EXPECT_EQ(res.fidelity_history.size(), 200u);
}

TEST(Train, DeterministicAndEnvelopeNondecreasing) {
  QbmConfig qbm;
  qbm.steps = 2;
  const auto target = DensityMatrix::pure(squeezed_displaced_state(0.2, 0.3, qbm.cutoff));
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.seed = 9;
  const auto a = train(target, qbm, cfg);
  cfg.threads = 4;
  const auto b = train(target, qbm, cfg);
  EXPECT_EQ(a.fidelity_history, b.fidelity_history);
  EXPECT_EQ(a.best_params.flatten(), b.best_params.flatten());
  double best = -1.0;
  for (std::size_t i = 0; i < a.fidelity_history.size(); ++i) {
    best = std::max(best, a.fidelity_history[i]);
    if (i == a.best_epoch) EXPECT_EQ(best, a.final_fidelity);
  }
  EXPECT_EQ(best, a.final_fidelity);
  EXPECT_EQ(a.seed, 9u);
}

TEST(Train, RecoversFromDegenerateRegion) {
  QbmConfig qbm;
  qbm.steps = 1;
  const auto target = DensityMatrix::pure(squeezed_displaced_state(0.0, 1.0, qbm.cutoff));
  Model m = make_model(target, qbm);
  const auto inner = m.forward;
  m.forward = [inner](const QiteParams& p) {
    if (p.steps[0].alpha > 0.3) throw DegeneratePostSelection("fenced off", 0.0);
    return inner(p);
  };
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr0 = 0.1;
  const auto res = train(m, 1, cfg);
  EXPECT_GT(res.recoveries, 0u);
  EXPECT_LE(res.best_params.steps[0].alpha, 0.3);
  EXPECT_GT(res.final_fidelity, 0.0);
}

TEST(Train, CustomInitMustMatchSteps) {
  QbmConfig qbm;
  TrainConfig cfg;
  cfg.init_scheme = InitScheme::Custom;
  cfg.custom_init = {0, 0, 0};
  EXPECT_THROW(train(thermal(1.5, 10), qbm, cfg), std::invalid_argument);
  qbm.post_select_outcome = 1;
  cfg.custom_init = {0, 0, 0, 0, 0};
  EXPECT_THROW(train(thermal(1.5, 10), qbm, cfg), InitializationFailed);
}

TEST(Train, SuccessFloorPenalty) {
  QbmConfig qbm;
  const auto target = thermal(1.5, 10);
  const auto model = make_model(target, qbm);
  QiteParams p{{GateParams{0, 0, 0, 0, 2.0}}};
  const auto plain = evaluate(model, p, std::nullopt);
  const auto floored = evaluate(model, p, 0.99);
  EXPECT_LT(plain.success_prob, 0.99);
  EXPECT_NEAR(floored.cost - plain.cost, std::pow(0.99 - plain.success_prob, 2), 1e-12);
  EXPECT_EQ(evaluate(model, p, 0.0).cost, plain.cost);
  EXPECT_NEAR(evaluate(model, p, 0.99, 10.0).cost - plain.cost, 10.0 * std::pow(0.99 - plain.success_prob, 2), 1e-12);
}

TEST(Train, SuccessFloorKeepsFeasibleEpochs) {
  QbmConfig qbm;
  const auto target = DensityMatrix::pure(squeezed_displaced_state(squeezing_from_db(1.73), 0.2, qbm.cutoff));
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.success_floor = 0.95;
  const auto res = train(target, qbm, cfg);
  bool any = false;
  double best_feasible = -1.0;
  for (std::size_t i = 0; i < res.success_history.size(); ++i)
    if (res.success_history[i] >= 0.95) {
      any = true;
      best_feasible = std::max(best_feasible, res.fidelity_history[i]);
    }
  ASSERT_TRUE(any);
  EXPECT_GE(res.final_success_prob, 0.95);
  EXPECT_EQ(res.final_fidelity, best_feasible);
}

TEST(Generate, DeterministicSamplesAndKl) {
  QbmConfig qbm;
  qbm.steps = 1;
  const auto target_rho = DensityMatrix::pure(squeezed_displaced_state(0.2, 0.2, qbm.cutoff));
  const QuadGrid grid{-5, 5, 1001};
  Pdf target = density_to_pdf(target_rho, grid);
  target.normalize();
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto model = make_model(target_rho, qbm);
  const auto res = train(model, 1, cfg);
  const auto a = generate(res, model, target, 300, 4), b = generate(res, model, target, 300, 4);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.samples.size(), 300u);
  EXPECT_NEAR(a.kl, kl_divergence(a.pdf, target), 1e-15);
  EXPECT_GE(a.kl, 0.0);
}

// Ten epochs from small-uniform starts should already lower the cost on
// every bundled case.
TEST(Train, BundledCasesImproveEarly) {
  for (const auto& [name, text] : bundled_configs()) {
    auto cfg = parse_config(std::string(text));
    const auto target = prepare(cfg);
    const auto model = case_model(cfg, target, 1.0);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      TrainConfig tc = cfg.train;
      tc.epochs = 10;
      tc.seed = seed;
      tc.threads = 4;
      const auto res = train(model, cfg.qbm.steps, tc);
      EXPECT_LT(*std::min_element(res.cost_history.begin() + 1, res.cost_history.end()), res.cost_history.front())
          << name << " seed " << seed;
    }
  }
}

}  // namespace

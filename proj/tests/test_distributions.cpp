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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "cvqbm/distributions.hpp"
#include "oracles.hpp"

namespace {

using namespace cvqbm;

double integrate(const std::function<double(double)>& f, double a, double b) {
  return oracle::simpson(f, a, b, 1e-11);
}

double grid_argmax(const std::function<double(double)>& f, double a, double b, double dq) {
  double best = a, best_v = -1.0;
  for (double x = a; x <= b; x += dq) {
    const double v = f(x);
    if (v > best_v) best_v = v, best = x;
  }
  return best;
}

TEST(Rayleigh, ClosedFormsAndMode) {
  EXPECT_EQ(pdf_rayleigh(0.0, 1.0), 0.0);
  EXPECT_EQ(pdf_rayleigh(-1.0, 1.0), 0.0);
  EXPECT_NEAR(pdf_rayleigh(1.0, 1.0), std::exp(-0.5), 1e-14);
  EXPECT_NEAR(grid_argmax([](double x) { return pdf_rayleigh(x, 1.3); }, 0, 6, 1e-3), 1.3, 1e-3);
  EXPECT_NEAR(integrate([](double x) { return pdf_rayleigh(x, 1.0); }, 0, 12), 1.0, 1e-6);
  EXPECT_THROW(pdf_rayleigh(1.0, 0.0), std::invalid_argument);
}

TEST(Gamma, ExponentialSpecialCase) {
  for (double x : {0.0, 0.3, 1.0, 4.0}) EXPECT_NEAR(pdf_gamma(x, 1.0, 1.0), std::exp(-x), 1e-14);
  EXPECT_THROW(pdf_gamma(1.0, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(pdf_gamma(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Gamma, ModeAndNormalization) {
  auto f = [](double x) { return pdf_gamma(x, 2.5, 0.5); };
  EXPECT_NEAR(grid_argmax(f, 0, 6, 1e-3), 0.75, 1e-3);
  EXPECT_NEAR(integrate(f, 0, 20), 1.0, 1e-4);
  // Direct formula, no log-gamma.
  const double x = 1.1;
  EXPECT_NEAR(f(x), std::pow(x, 1.5) * std::exp(-x / 0.5) / (std::tgamma(2.5) * std::pow(0.5, 2.5)), 1e-13);
}

TEST(Weibull, ExponentialAtShapeOne) {
  for (double x : {0.0, 0.5, 2.0, 7.0}) EXPECT_NEAR(pdf_weibull(x, 2.0, 1.0), 0.5 * std::exp(-x / 2.0), 1e-14);
}

TEST(Weibull, SeaParametersNormalizeAndMedian) {
  auto f = [](double x) { return pdf_weibull(x, 161.2, 5.4); };
  EXPECT_NEAR(integrate(f, 0, 400), 1.0, 1e-4);
  const double median = 161.2 * std::pow(std::log(2.0), 1.0 / 5.4);
  EXPECT_NEAR(cdf_weibull(median, 161.2, 5.4), 0.5, 1e-6);
  EXPECT_NEAR(integrate(f, 0, median), 0.5, 1e-6);
  EXPECT_THROW(pdf_weibull(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(IncompleteBeta, Endpoints) {
  EXPECT_EQ(regularized_incomplete_beta(0.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(1.0, 2.0, 3.0), 1.0);
  for (double a : {0.3, 1.0, 2.5, 17.0}) EXPECT_NEAR(regularized_incomplete_beta(0.5, a, a), 0.5, 1e-12);
  EXPECT_THROW(regularized_incomplete_beta(-0.1, 1, 1), std::invalid_argument);
  EXPECT_THROW(regularized_incomplete_beta(1.1, 1, 1), std::invalid_argument);
}

TEST(IncompleteBeta, MatchesQuadratureOfDefinition) {
  auto check = [](double z, double a, double b) {
    const double beta = std::exp(log_beta(a, b));
    const double integral =
        integrate([&](double t) { return std::pow(t, a - 1) * std::pow(1 - t, b - 1); }, 0.0, z) / beta;
    EXPECT_NEAR(regularized_incomplete_beta(z, a, b), integral, 1e-9) << z << " " << a << " " << b;
  };
  check(0.3, 2.0, 3.0);
  check(0.8, 4.0, 5.0);
  check(0.1, 1.5, 7.0);
  check(0.95, 3.0, 1.2);
  // I_{0.3}(2,3) by polynomial expansion: 6 z^2 - 8 z^3 + 3 z^4.
  const double z = 0.3;
  EXPECT_NEAR(regularized_incomplete_beta(z, 2, 3), 6 * z * z - 8 * z * z * z + 3 * z * z * z * z, 1e-12);
}

TEST(IncompleteBeta, MonotoneInZ) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = oracle::uniform(rng, 0.2, 8.0), b = oracle::uniform(rng, 0.2, 8.0);
    double prev = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double v = regularized_incomplete_beta(i / 400.0, a, b);
      ASSERT_GE(v, prev - 1e-14);
      prev = v;
    }
  }
}

TEST(Etib, ReducesToBetaPrime) {
  for (double x = 0.05; x < 20.0; x += 0.37) {
    const double bp = std::pow(x, 3.0) / (std::pow(1 + x, 9.0) * std::exp(log_beta(4, 5)));
    EXPECT_NEAR(pdf_etib(x, 4, 5, 0.0, 1.0), bp, 1e-10);
  }
  EXPECT_NEAR(integrate([](double x) { return pdf_etib(x, 4, 5, 0, 1); }, 0, 200), 1.0, 1e-4);
}

TEST(Etib, NormalizationAtSarParameters) {
  EXPECT_NEAR(integrate([](double x) { return pdf_etib(x, 4, 5, 0.1, 2); }, 0, 50), 1.0, 1e-3);
}

TEST(Etib, DensityFromCdfDerivative) {
  auto cdf = [](double x) {
    const double i = regularized_incomplete_beta(x / (1 + x), 3, 2);
    return std::pow(i * (1 - 0.4 - (-0.4) * i), 1.7);
  };
  for (double x : {0.2, 0.9, 2.5}) {
    const double h = 1e-5;
    EXPECT_NEAR(pdf_etib(x, 3, 2, -0.4, 1.7), (cdf(x + h) - cdf(x - h)) / (2 * h), 1e-6);
  }
}

TEST(Etib, NonNegativeUnderRandomParameters) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = oracle::uniform(rng, 0.5, 8), b = oracle::uniform(rng, 0.5, 8);
    const double l = oracle::uniform(rng, -0.99, 0.99), p = oracle::uniform(rng, 0.3, 4);
    for (int i = 0; i < 10000; ++i) {
      const double v = pdf_etib(i * 0.005, a, b, l, p);
      ASSERT_GE(v, 0.0) << a << " " << b << " " << l << " " << p << " at " << i * 0.005;
    }
  }
}

TEST(Etib, RejectsBadParameters) {
  EXPECT_THROW(pdf_etib(1, 0, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(pdf_etib(1, 1, 1, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(pdf_etib(1, 1, 1, 0, -2), std::invalid_argument);
}

std::string pgm_p2(std::size_t w, std::size_t h, int value) {
  std::string s = "P2\n# comment line\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (std::size_t i = 0; i < w * h; ++i) s += std::to_string(value) + (i % w + 1 == w ? "\n" : " ");
  return s;
}

TEST(Histogram, UniformImageIsIndicator) {
  const auto h = parse_pgm(pgm_p2(4, 3, 128));
  for (std::size_t i = 0; i < kIntensityLevels; ++i) EXPECT_EQ(h.probability[i], i == 128 ? 1.0 : 0.0);
  EXPECT_EQ(h.total_count, 12.0);
  std::vector<std::uint8_t> px(6, 128);
  const auto b = parse_pgm(encode_pgm_p5(px, 3, 2));
  EXPECT_EQ(b.probability[128], 1.0);
}

TEST(Histogram, CsvTwoBins) {
  std::string csv = "1,1";
  for (int i = 2; i < 256; ++i) csv += ",0";
  const auto h = parse_histogram_csv(csv);
  EXPECT_EQ(h.probability[0], 0.5);
  EXPECT_EQ(h.probability[1], 0.5);
}

TEST(Histogram, SumsToOne) {
  const auto h = bundled_forest_histogram();
  double s = 0.0;
  for (double p : h.probability) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Histogram, MalformedInputsCarryOffsets) {
  try {
    parse_pgm("P2\n2 2\n255\n1 2 x 4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 15u);
  }
  EXPECT_THROW(parse_pgm("P7\n"), ParseError);
  EXPECT_THROW(parse_pgm("P2\n2 2\n65535\n"), ParseError);
  std::vector<std::uint8_t> px(3, 0);
  EXPECT_THROW(parse_pgm(encode_pgm_p5(px, 2, 2)), ParseError);
  try {
    parse_histogram_csv("1,2,abc");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 4u);
  }
  EXPECT_THROW(parse_histogram_csv("1,2,3"), ParseError);
  std::string zeros = "0";
  for (int i = 1; i < 256; ++i) zeros += ",0";
  EXPECT_THROW(parse_histogram_csv(zeros), std::invalid_argument);
  EXPECT_THROW(parse_pgm("P2\n0 3\n255\n"), std::invalid_argument);
}

TEST(Histogram, LoadsFromFileByMagic) {
  const auto dir = std::filesystem::temp_directory_path() / "cvqbm_hist_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "a.pgm", std::ios::binary) << pgm_p2(2, 2, 7);
    std::string csv = "0,0,3";
    for (int i = 3; i < 256; ++i) csv += "\n0";
    std::ofstream(dir / "b.csv") << csv;
  }
  EXPECT_EQ(load_intensity_histogram((dir / "a.pgm").string()).probability[7], 1.0);
  EXPECT_EQ(load_intensity_histogram((dir / "b.csv").string()).probability[2], 1.0);
  EXPECT_THROW(load_intensity_histogram((dir / "missing").string()), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST(FitGaussian, TwoBinSymmetric) {
  std::array<double, kIntensityLevels> c{};
  c[100] = 3;
  c[200] = 3;
  const auto fit = fit_gaussian(histogram_from_counts(c));
  EXPECT_NEAR(fit.mu, 150.0, 1e-12);
  EXPECT_NEAR(fit.sigma, 50.0, 1e-9);
}

TEST(FitGaussian, WeightedStdDefinition) {
  std::mt19937_64 rng(3);
  std::array<double, kIntensityLevels> c{};
  for (auto& v : c) v = std::floor(oracle::uniform(rng, 0, 10));
  const auto h = histogram_from_counts(c);
  double n = 0, s1 = 0, s2 = 0;
  for (int i = 0; i < 256; ++i) n += c[i], s1 += c[i] * i, s2 += c[i] * i * i;
  const double mu = s1 / n;
  const auto fit = fit_gaussian(h);
  EXPECT_NEAR(fit.mu, mu, 1e-9);
  EXPECT_NEAR(fit.sigma, std::sqrt(s2 / n - mu * mu), 1e-9);
}

TEST(FitGaussian, SingleBinRejected) {
  std::array<double, kIntensityLevels> c{};
  c[42] = 10;
  EXPECT_THROW(fit_gaussian(histogram_from_counts(c)), std::invalid_argument);
}

TEST(FitGaussian, RecoversSampledNormal) {
  const auto px = synthetic_gray_image(200, 200, 120.0, 30.0, 11);
  const auto fit = fit_gaussian(parse_pgm(encode_pgm_p5(px, 200, 200)));
  EXPECT_NEAR(fit.mu, 120.0, 0.02 * 120.0);
  EXPECT_NEAR(fit.sigma, 30.0, 0.02 * 30.0);
}

TEST(FitGaussian, ForestStandInNearGenerator) {
  const auto fit = fit_gaussian(bundled_forest_histogram());
  EXPECT_NEAR(fit.mu, kForestMean, 2.0);
}

TEST(Sampling, BoxMullerMoments) {
  std::mt19937_64 rng(17);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

}  // namespace

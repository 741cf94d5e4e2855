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

// Analytic target densities and grayscale intensity histograms.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cvqbm/error.hpp"
#include "cvqbm/fock.hpp"

namespace cvqbm {

/// Uniform double in [0, 1) from a 64-bit engine; fixed across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal draw by Box-Muller, portable across standard libraries.
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline double pdf_gaussian(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("pdf_gaussian: sigma must be positive");
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * kPi) * sigma);
}

inline double pdf_rayleigh(double x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("pdf_rayleigh: sigma must be positive");
  if (x < 0.0) return 0.0;
  const double s2 = sigma * sigma;
  return x / s2 * std::exp(-x * x / (2.0 * s2));
}

inline double pdf_gamma(double x, double k, double theta) {
  if (!(k > 0.0) || !(theta > 0.0)) throw std::invalid_argument("pdf_gamma: k and theta must be positive");
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (k == 1.0) return 1.0 / theta;
    return k < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return std::exp((k - 1.0) * std::log(x) - x / theta - std::lgamma(k) - k * std::log(theta));
}

/// Weibull density, including the exp(-(x/lambda)^k) factor that makes it normalizable.
inline double pdf_weibull(double x, double lambda, double k) {
  if (!(lambda > 0.0) || !(k > 0.0)) throw std::invalid_argument("pdf_weibull: lambda and k must be positive");
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (k == 1.0) return 1.0 / lambda;
    return k < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  const double t = x / lambda;
  return (k / lambda) * std::pow(t, k - 1.0) * std::exp(-std::pow(t, k));
}

inline double cdf_weibull(double x, double lambda, double k) {
  if (x <= 0.0) return 0.0;
  return 1.0 - std::exp(-std::pow(x / lambda, k));
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_continued_fraction(double z, double a, double b) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * z / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// I_z(a, b), the regularized incomplete beta function.
inline double regularized_incomplete_beta(double z, double a, double b) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("regularized_incomplete_beta: z must lie in [0, 1]");
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
  if (z == 0.0) return 0.0;
  if (z == 1.0) return 1.0;
  const double front = std::exp(a * std::log(z) + b * std::log1p(-z) - log_beta(a, b));
  if (z < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(z, a, b) / a;
  return 1.0 - front * detail::beta_continued_fraction(1.0 - z, b, a) / b;
}

/// Beta-prime (inverted beta) density x^(a-1) (1+x)^(-a-b) / B(a, b).
inline double pdf_beta_prime(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) - (a + b) * std::log1p(x) - log_beta(a, b));
}

/// Exponentiated transmuted inverted-beta density. Its CDF is
/// [I (1 + lambda - lambda I)]^phi with I = I_{x/(1+x)}(alpha, beta).
inline double pdf_etib(double x, double alpha, double beta, double lambda, double phi) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(phi > 0.0) || !(std::abs(lambda) < 1.0))
    throw std::invalid_argument("pdf_etib: need alpha, beta, phi > 0 and |lambda| < 1");
  if (x <= 0.0) return 0.0;
  const double inc = regularized_incomplete_beta(x / (1.0 + x), alpha, beta);
  const double base = pdf_beta_prime(x, alpha, beta);
  const double transmuted = 1.0 + lambda - 2.0 * lambda * inc;
  const double g = inc * (1.0 + lambda - lambda * inc);
  if (phi == 1.0) return base * transmuted;
  if (g <= 0.0) return phi < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return phi * base * transmuted * std::pow(g, phi - 1.0);
}

inline constexpr std::size_t kIntensityLevels = 256;

struct IntensityHistogram {
  std::array<double, kIntensityLevels> probability{};
  double total_count = 0.0;

  std::vector<double> centers() const {
    std::vector<double> c(kIntensityLevels);
    for (std::size_t i = 0; i < kIntensityLevels; ++i) c[i] = static_cast<double>(i);
    return c;
  }
};

inline IntensityHistogram histogram_from_counts(const std::array<double, kIntensityLevels>& counts) {
  IntensityHistogram h;
  for (double c : counts) {
    if (c < 0.0 || !std::isfinite(c)) throw std::invalid_argument("histogram: counts must be non-negative");
    h.total_count += c;
  }
  if (!(h.total_count > 0.0)) throw std::invalid_argument("histogram: image contains no pixels");
  for (std::size_t i = 0; i < kIntensityLevels; ++i) h.probability[i] = counts[i] / h.total_count;
  return h;
}

namespace detail {

class PgmScanner {
 public:
  explicit PgmScanner(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 100000000UL) throw ParseError(std::string("pgm: ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("pgm: expected ") + what, start);
    return v;
  }

  std::string_view rest() const { return bytes_.substr(pos_); }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Histogram of an 8-bit PGM image (P2 ASCII or P5 binary, maxval 255).
inline IntensityHistogram parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw ParseError("pgm: missing P2/P5 magic", 0);
  const bool binary = bytes[1] == '5';
  detail::PgmScanner sc(bytes);
  sc.advance(2);
  const unsigned long width = sc.read_uint("width");
  const unsigned long height = sc.read_uint("height");
  const std::size_t maxval_at = sc.offset();
  const unsigned long maxval = sc.read_uint("maxval");
  if (maxval != 255) throw ParseError("pgm: only maxval 255 is supported", maxval_at);
  const std::size_t pixels = width * height;
  if (pixels == 0) throw std::invalid_argument("pgm: image is empty");

  std::array<double, kIntensityLevels> counts{};
  if (binary) {
    if (sc.offset() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[sc.offset()])))
      throw ParseError("pgm: expected whitespace before raster", sc.offset());
    sc.advance(1);
    const auto raster = sc.rest();
    if (raster.size() < pixels) throw ParseError("pgm: raster truncated", bytes.size());
    for (std::size_t i = 0; i < pixels; ++i) counts[static_cast<unsigned char>(raster[i])] += 1.0;
  } else {
    for (std::size_t i = 0; i < pixels; ++i) {
      const std::size_t at = sc.offset();
      const unsigned long v = sc.read_uint("pixel value");
      if (v > 255) throw ParseError("pgm: pixel value exceeds maxval", at);
      counts[v] += 1.0;
    }
  }
  return histogram_from_counts(counts);
}

/// 256 comma- or newline-separated non-negative counts.
inline IntensityHistogram parse_histogram_csv(std::string_view text) {
  std::array<double, kIntensityLevels> counts{};
  std::size_t n = 0, pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ',' || std::isspace(static_cast<unsigned char>(text[pos])))) ++pos;
    if (pos >= text.size()) break;
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] != ',' && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    const std::string tok(text.substr(start, pos - start));
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v) || v < 0.0)
      throw ParseError("histogram csv: invalid count '" + tok + "'", start);
    if (n >= kIntensityLevels) throw ParseError("histogram csv: more than 256 values", start);
    counts[n++] = v;
  }
  if (n != kIntensityLevels) throw ParseError("histogram csv: expected 256 values, got " + std::to_string(n), text.size());
  return histogram_from_counts(counts);
}

/// Loads a PGM image or a 256-value CSV, chosen by the leading magic bytes.
inline IntensityHistogram load_intensity_histogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open histogram source: " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) return parse_pgm(bytes);
  return parse_histogram_csv(bytes);
}

struct GaussianFit {
  double mu;
  double sigma;
};

/// Moment-matched Gaussian over bin centers 0..255.
inline GaussianFit fit_gaussian(const IntensityHistogram& h) {
  std::size_t nonzero = 0;
  double mu = 0.0;
  for (std::size_t i = 0; i < kIntensityLevels; ++i) {
    if (h.probability[i] > 0.0) ++nonzero;
    mu += h.probability[i] * static_cast<double>(i);
  }
  if (nonzero < 2) throw std::invalid_argument("fit_gaussian: need at least two non-empty bins");
  double var = 0.0;
  for (std::size_t i = 0; i < kIntensityLevels; ++i) {
    const double d = static_cast<double>(i) - mu;
    var += h.probability[i] * d * d;
  }
  return {mu, std::sqrt(var)};
}

/// Gaussian-noise 8-bit image, row-major, values clipped to [0, 255].
inline std::vector<std::uint8_t> synthetic_gray_image(std::size_t width, std::size_t height, double mean, double stddev,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(width * height);
  for (auto& p : px) {
    const double v = std::round(mean + stddev * standard_normal(rng));
    p = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return px;
}

inline std::string encode_pgm_p5(const std::vector<std::uint8_t>& px, std::size_t width, std::size_t height) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(px.begin(), px.end());
  return out;
}

/// Stand-in for the forest SAR strip: a 256x256 speckle-like image.
inline constexpr double kForestMean = 96.0;
inline constexpr double kForestStd = 24.0;
inline constexpr std::uint64_t kForestSeed = 20210722;

inline IntensityHistogram bundled_forest_histogram() {
  const auto px = synthetic_gray_image(256, 256, kForestMean, kForestStd, kForestSeed);
  return parse_pgm(encode_pgm_p5(px, 256, 256));
}

}  // namespace cvqbm

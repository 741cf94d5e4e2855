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

// Experiment configuration: a JSON document mapped onto the library's config
// structs. Every key is checked; unknown keys are reported with their dotted
// path and, when one is close, the key that was probably meant.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvqbm/engine.hpp"
#include "cvqbm/error.hpp"
#include "cvqbm/noise.hpp"
#include "cvqbm/quadrature.hpp"
#include "cvqbm/targets.hpp"
#include "cvqbm/trainer.hpp"

namespace cvqbm {

/// Bad configuration: syntax, unknown key, wrong type or out-of-range value.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct GenerateOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 7;
};

struct NoiseOptions {
  double transmissivity = 1.0;
  LossPlacement placement = LossPlacement::VisibleOnly;
};

struct SweepOptions {
  std::vector<double> t_values{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  std::size_t repeats = 5;
};

/// Thresholds checked by `--assert`; unset entries are not checked.
struct Expectations {
  std::optional<double> min_fidelity;
  std::optional<double> max_kl;
  std::optional<double> min_success;
};

struct ExperimentConfig {
  std::string name;
  TargetSpec target;
  QbmConfig qbm;
  TrainConfig train;
  QuadGrid grid;
  QuadGrid encode_grid;
  GenerateOptions generate;
  NoiseOptions noise;
  SweepOptions sweep;
  Expectations expect;
  std::string outputs;  ///< empty: out/<name>
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Wraps one JSON object, hands out typed fields and remembers which keys were read.
class Fields {
 public:
  Fields(const nlohmann::json& obj, std::string path, std::vector<std::string> allowed)
      : obj_(obj), path_(std::move(path)), allowed_(std::move(allowed)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [key, value] : obj_.items()) {
      (void)value;
      if (std::find(allowed_.begin(), allowed_.end(), key) != allowed_.end()) continue;
      std::string msg = "unknown key";
      std::size_t best = 3;
      std::string guess;
      for (const auto& a : allowed_) {
        const std::size_t d = edit_distance(key, a);
        if (d < best) {
          best = d;
          guess = a;
        }
      }
      if (!guess.empty()) {
        msg += " (did you mean \"" + join_path(path_, guess) + "\"?)";
      } else {
        std::string list;
        for (const auto& a : allowed_) list += (list.empty() ? "" : ", ") + a;
        msg += " (expected one of: " + list + ")";
      }
      throw ConfigError(join_path(path_, key), msg);
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
  const nlohmann::json& raw(const std::string& key) const { return obj_.at(key); }
  std::string path(const std::string& key) const { return join_path(path_, key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "expected a finite number");
    return x;
  }

  std::optional<double> optional_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(path(key), "expected a non-negative integer");
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    const auto& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(path(key), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::vector<std::string> allowed_;
};

template <class Enum>
Enum choose(const Fields& f, const std::string& key, Enum fallback,
            const std::vector<std::pair<std::string, Enum>>& options) {
  if (!f.has(key)) return fallback;
  const std::string v = f.text(key, "");
  for (const auto& [name, value] : options)
    if (name == v) return value;
  std::string list;
  for (const auto& o : options) list += (list.empty() ? "" : ", ") + o.first;
  throw ConfigError(f.path(key), "\"" + v + "\" is not one of: " + list);
}

inline QuadGrid parse_grid(const nlohmann::json& j, const std::string& path, const QuadGrid& fallback) {
  Fields f(j, path, {"min", "max", "points"});
  QuadGrid g = fallback;
  g.q_min = f.number("min", g.q_min);
  g.q_max = f.number("max", g.q_max);
  g.points = static_cast<std::size_t>(f.count("points", g.points));
  if (!(g.q_max > g.q_min)) throw ConfigError(path + ".max", "must exceed " + path + ".min");
  if (g.points < QuadGrid::kMinPoints) throw ConfigError(path + ".points", "must be at least 101");
  return g;
}

inline std::pair<double, double> parse_range(const Fields& f, const std::string& key) {
  const auto v = f.numbers(key);
  if (v.size() != 2) throw ConfigError(f.path(key), "expected [min, max]");
  if (!(v[1] > v[0])) throw ConfigError(f.path(key), "max must exceed min");
  return {v[0], v[1]};
}

inline TargetSpec parse_target(const nlohmann::json& j) {
  Fields f(j, "target", {"kind", "params", "support", "rescale", "source", "smoothing", "state"});
  if (!f.has("kind")) throw ConfigError("target.kind", "required");
  TargetSpec t;
  t.kind = choose<TargetKind>(f, "kind", TargetKind::Gaussian,
                              {{"gaussian", TargetKind::Gaussian},
                               {"rayleigh", TargetKind::Rayleigh},
                               {"gamma", TargetKind::Gamma},
                               {"weibull", TargetKind::Weibull},
                               {"etib", TargetKind::Etib},
                               {"histogram", TargetKind::Histogram},
                               {"quantum-state", TargetKind::QuantumState}});
  t.params = f.numbers("params");
  if (f.has("support")) t.support = parse_range(f, "support");
  if (f.has("rescale")) {
    const auto& r = f.raw("rescale");
    AxisRescale rs;
    if (r.is_boolean()) {
      if (r.get<bool>()) t.rescale = rs;
    } else {
      Fields g(r, "target.rescale", {"from", "to"});
      if (g.has("from")) std::tie(rs.from_min, rs.from_max) = parse_range(g, "from");
      if (g.has("to")) std::tie(rs.to_min, rs.to_max) = parse_range(g, "to");
      t.rescale = rs;
    }
  }
  t.source = f.text("source", "");
  t.smoothing = choose<HistogramSmoothing>(f, "smoothing", HistogramSmoothing::GaussianFit,
                                           {{"gaussian-fit", HistogramSmoothing::GaussianFit},
                                            {"kde", HistogramSmoothing::Kde}});
  t.state = f.text("state", "");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  return t;
}

inline QbmConfig parse_qbm(const nlohmann::json& j) {
  Fields f(j, "qbm", {"delta", "steps", "cutoff", "post_select", "init", "padding"});
  QbmConfig q;
  q.delta = f.number("delta", q.delta);
  if (!(q.delta > 0.0)) throw ConfigError("qbm.delta", "must be positive");
  q.steps = static_cast<std::size_t>(f.count("steps", q.steps));
  if (q.steps > QbmConfig::kMaxSteps) throw ConfigError("qbm.steps", "must be at most 8");
  q.cutoff = static_cast<std::size_t>(f.count("cutoff", q.cutoff));
  if (q.cutoff < QbmConfig::kMinCutoff || q.cutoff > QbmConfig::kMaxCutoff)
    throw ConfigError("qbm.cutoff", "must lie in [6, 20]");
  q.post_select_outcome = static_cast<std::size_t>(f.count("post_select", q.post_select_outcome));
  if (q.post_select_outcome >= q.cutoff) throw ConfigError("qbm.post_select", "must be below qbm.cutoff");
  q.init_mode = choose<InitMode>(f, "init", q.init_mode, {{"exact", InitMode::Exact}, {"circuit", InitMode::Circuit}});
  q.padding = static_cast<std::size_t>(f.count("padding", q.padding));
  if (q.padding > 40) throw ConfigError("qbm.padding", "must be at most 40");
  return q;
}

inline TrainConfig parse_train(const nlohmann::json& j) {
  Fields f(j, "train",
           {"epochs", "lr0", "decay_steps", "decay_rate", "fd_step", "seed", "init", "success_floor", "success_weight",
            "threads"});
  TrainConfig t;
  t.epochs = static_cast<std::size_t>(f.count("epochs", t.epochs));
  t.lr0 = f.number("lr0", t.lr0);
  t.decay_steps = static_cast<std::size_t>(f.count("decay_steps", t.decay_steps));
  t.decay_rate = f.number("decay_rate", t.decay_rate);
  t.fd_step = f.number("fd_step", t.fd_step);
  t.seed = f.count("seed", t.seed);
  if (f.has("init")) {
    const auto& v = f.raw("init");
    if (v.is_string()) {
      if (v.get<std::string>() != "small-uniform")
        throw ConfigError("train.init", "expected \"small-uniform\" or an array of numbers");
    } else {
      t.init_scheme = InitScheme::Custom;
      t.custom_init = f.numbers("init");
    }
  }
  t.success_floor = f.optional_number("success_floor");
  t.success_weight = f.number("success_weight", t.success_weight);
  t.threads = static_cast<std::size_t>(f.count("threads", t.threads));
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.substr(0, msg.find(' ')), msg.substr(msg.find(' ') + 1));
  }
  return t;
}

inline void parse_noise(const nlohmann::json& j, NoiseOptions& n) {
  Fields f(j, "noise", {"transmissivity", "placement"});
  n.transmissivity = f.number("transmissivity", n.transmissivity);
  if (!(n.transmissivity >= 0.0 && n.transmissivity <= 1.0))
    throw ConfigError("noise.transmissivity", "must lie in [0, 1]");
  n.placement = choose<LossPlacement>(f, "placement", n.placement,
                                      {{"visible-only", LossPlacement::VisibleOnly},
                                       {"all-modes", LossPlacement::AllModes}});
}

inline void parse_sweep(const nlohmann::json& j, SweepOptions& s) {
  Fields f(j, "sweep", {"t_values", "repeats"});
  if (f.has("t_values")) s.t_values = f.numbers("t_values");
  if (s.t_values.empty()) throw ConfigError("sweep.t_values", "must not be empty");
  for (double t : s.t_values)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("sweep.t_values", "values must lie in [0, 1]");
  s.repeats = static_cast<std::size_t>(f.count("repeats", s.repeats));
  if (s.repeats == 0) throw ConfigError("sweep.repeats", "must be positive");
}

inline void parse_expect(const nlohmann::json& j, Expectations& e) {
  Fields f(j, "expect", {"min_fidelity", "max_kl", "min_success"});
  e.min_fidelity = f.optional_number("min_fidelity");
  e.max_kl = f.optional_number("max_kl");
  e.min_success = f.optional_number("min_success");
}

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline bool filesystem_safe(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace detail

/// Parses and validates a configuration document. Defaults fill every omitted field.
inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the offset one past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = detail::line_column(text, at);
    std::string msg = e.what();
    const auto cut = msg.find(": ", msg.find("parse error"));
    if (cut != std::string::npos) msg = msg.substr(cut + 2);
    throw ConfigError("", "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                              msg);
  }
  detail::Fields f(doc, "",
                   {"name", "target", "qbm", "train", "grid", "encode_grid", "generate", "noise", "sweep", "expect",
                    "outputs"});
  ExperimentConfig cfg;
  cfg.name = f.text("name", "experiment");
  if (!detail::filesystem_safe(cfg.name))
    throw ConfigError("name", "must be nonempty and use only letters, digits, '-', '_' or '.'");
  if (!f.has("target")) throw ConfigError("target", "required");
  cfg.target = detail::parse_target(f.raw("target"));
  if (f.has("qbm")) cfg.qbm = detail::parse_qbm(f.raw("qbm"));
  if (f.has("train")) cfg.train = detail::parse_train(f.raw("train"));
  if (cfg.train.init_scheme == InitScheme::Custom && cfg.train.custom_init.size() != cfg.qbm.steps * GateParams::kCount)
    throw ConfigError("train.init", "needs 5 values per QITE step");
  if (f.has("grid")) {
    cfg.grid = detail::parse_grid(f.raw("grid"), "grid", cfg.grid);
  } else if (cfg.target.support) {
    cfg.grid = QuadGrid(cfg.target.support->first, cfg.target.support->second, 1201);
  }
  if (f.has("encode_grid")) cfg.encode_grid = detail::parse_grid(f.raw("encode_grid"), "encode_grid", cfg.encode_grid);
  if (f.has("generate")) {
    detail::Fields g(f.raw("generate"), "generate", {"samples", "seed"});
    cfg.generate.samples = static_cast<std::size_t>(g.count("samples", cfg.generate.samples));
    cfg.generate.seed = g.count("seed", cfg.generate.seed);
  }
  if (f.has("noise")) detail::parse_noise(f.raw("noise"), cfg.noise);
  if (cfg.noise.transmissivity < 1.0 && cfg.qbm.cutoff > kMaxNoisyCutoff)
    throw ConfigError("qbm.cutoff", "must be at most 12 when noise is enabled");
  if (f.has("sweep")) detail::parse_sweep(f.raw("sweep"), cfg.sweep);
  if (f.has("expect")) detail::parse_expect(f.raw("expect"), cfg.expect);
  cfg.outputs = f.text("outputs", "");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace cvqbm

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

// Case-study driver: target preparation, training, generation, reports and
// the T sweep, plus the CSV/JSON artifacts they leave behind.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvqbm/config.hpp"
#include "cvqbm/engine.hpp"
#include "cvqbm/noise.hpp"
#include "cvqbm/quadrature.hpp"
#include "cvqbm/targets.hpp"
#include "cvqbm/trainer.hpp"

namespace cvqbm {

struct CaseResult {
  ExperimentConfig config;
  PreparedTarget target;
  TrainResult train;
  ForwardResult forward;  ///< rerun at best_params
  Generated generated;
};

inline PreparedTarget prepare(const ExperimentConfig& cfg) {
  return prepare_target(cfg.target, cfg.qbm.cutoff, cfg.grid, cfg.encode_grid);
}

/// Noiseless forward at T = 1, loss-channel propagation otherwise.
inline Model case_model(const ExperimentConfig& cfg, const PreparedTarget& target, double transmissivity) {
  const QbmConfig q = cfg.qbm;
  q.validate();
  Model m;
  if (transmissivity >= 1.0) {
    m.forward = [q](const QiteParams& p) { return forward(p, q); };
  } else {
    const LossPlacement where = cfg.noise.placement;
    m.forward = [q, transmissivity, where](const QiteParams& p) { return noisy_forward(p, q, transmissivity, where); };
  }
  m.fidelity = target_fidelity(target);
  return m;
}

inline CaseResult run_case(const ExperimentConfig& cfg) {
  PreparedTarget target = prepare(cfg);
  const Model model = case_model(cfg, target, cfg.noise.transmissivity);
  TrainResult trained = train(model, cfg.qbm.steps, cfg.train);
  ForwardResult fr = model.forward(trained.best_params);
  Generated gen = generate(trained, model, target.pdf, cfg.generate.samples, cfg.generate.seed);
  trained.final_kl = gen.kl;
  return {cfg, std::move(target), std::move(trained), std::move(fr), std::move(gen)};
}

/// Names of the thresholds in `expect` that the result misses.
inline std::vector<std::string> missed_expectations(const CaseResult& r) {
  std::vector<std::string> miss;
  const auto& e = r.config.expect;
  std::ostringstream ss;
  ss << std::setprecision(6);
  if (e.min_fidelity && !(r.train.final_fidelity >= *e.min_fidelity)) {
    ss << "fidelity " << r.train.final_fidelity << " < " << *e.min_fidelity;
    miss.push_back(ss.str());
    ss.str("");
  }
  if (e.max_kl && !(r.generated.kl <= *e.max_kl)) {
    ss << "kl " << r.generated.kl << " > " << *e.max_kl;
    miss.push_back(ss.str());
    ss.str("");
  }
  if (e.min_success && !(r.forward.success_prob >= *e.min_success)) {
    ss << "success_prob " << r.forward.success_prob << " < " << *e.min_success;
    miss.push_back(ss.str());
  }
  return miss;
}

namespace detail {

inline nlohmann::json grid_json(const QuadGrid& g) {
  return {{"min", g.q_min}, {"max", g.q_max}, {"points", g.points}};
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline const char* placement_name(LossPlacement p) {
  return p == LossPlacement::AllModes ? "all-modes" : "visible-only";
}

}  // namespace detail

/// Canonical echo of a parsed config; feeding it back to parse_config yields the same config.
inline nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json target = {{"kind", to_string(c.target.kind)}, {"params", c.target.params}};
  if (c.target.support) target["support"] = {c.target.support->first, c.target.support->second};
  if (c.target.rescale)
    target["rescale"] = {{"from", {c.target.rescale->from_min, c.target.rescale->from_max}},
                         {"to", {c.target.rescale->to_min, c.target.rescale->to_max}}};
  if (c.target.kind == TargetKind::Histogram) {
    target["source"] = c.target.source;
    target["smoothing"] = c.target.smoothing == HistogramSmoothing::Kde ? "kde" : "gaussian-fit";
  }
  if (c.target.kind == TargetKind::QuantumState) target["state"] = c.target.state;

  nlohmann::json train = {{"epochs", c.train.epochs},       {"lr0", c.train.lr0},
                          {"decay_steps", c.train.decay_steps}, {"decay_rate", c.train.decay_rate},
                          {"fd_step", c.train.fd_step},     {"seed", c.train.seed},
                          {"threads", c.train.threads}};
  if (c.train.init_scheme == InitScheme::Custom)
    train["init"] = c.train.custom_init;
  else
    train["init"] = "small-uniform";
  if (c.train.success_floor) train["success_floor"] = *c.train.success_floor;
  train["success_weight"] = c.train.success_weight;

  nlohmann::json expect = nlohmann::json::object();
  if (c.expect.min_fidelity) expect["min_fidelity"] = *c.expect.min_fidelity;
  if (c.expect.max_kl) expect["max_kl"] = *c.expect.max_kl;
  if (c.expect.min_success) expect["min_success"] = *c.expect.min_success;

  return {{"name", c.name},
          {"target", target},
          {"qbm",
           {{"delta", c.qbm.delta},
            {"steps", c.qbm.steps},
            {"cutoff", c.qbm.cutoff},
            {"post_select", c.qbm.post_select_outcome},
            {"init", c.qbm.init_mode == InitMode::Circuit ? "circuit" : "exact"},
            {"padding", c.qbm.padding}}},
          {"train", train},
          {"grid", detail::grid_json(c.grid)},
          {"encode_grid", detail::grid_json(c.encode_grid)},
          {"generate", {{"samples", c.generate.samples}, {"seed", c.generate.seed}}},
          {"noise", {{"transmissivity", c.noise.transmissivity}, {"placement", detail::placement_name(c.noise.placement)}}},
          {"sweep", {{"t_values", c.sweep.t_values}, {"repeats", c.sweep.repeats}}},
          {"expect", expect},
          {"outputs", c.outputs}};
}

inline nlohmann::json params_json(const QiteParams& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& g : p.steps)
    steps.push_back({{"chi", g.chi}, {"r", g.r}, {"chi_prime", g.chi_prime}, {"alpha", g.alpha}, {"kappa", g.kappa}});
  return {{"steps", steps}, {"flat", p.flatten()}};
}

inline QiteParams params_from_json(const nlohmann::json& j) {
  return QiteParams::from_flat(j.at("flat").get<std::vector<double>>());
}

/// The report holds no timestamps or host data, so reruns are byte-identical.
inline nlohmann::json report_json(const CaseResult& r) {
  nlohmann::json details = nlohmann::json::object();
  for (const auto& [k, v] : r.target.details) details[k] = v;
  const auto& t = r.train;
  return {{"name", r.config.name},
          {"config", config_json(r.config)},
          {"target", {{"captured_norm", r.target.captured_norm}, {"details", details}}},
          {"result",
           {{"final_fidelity", t.final_fidelity},
            {"final_cost", t.final_cost},
            {"final_kl", r.generated.kl},
            {"final_success_prob", r.forward.success_prob},
            {"per_step_success", r.forward.per_step_probs},
            {"squeezing_db", [&] {
               std::vector<double> db;
               for (const auto& g : t.best_params.steps) db.push_back(squeezing_db(g.r));
               return db;
             }()},
            {"best_epoch", t.best_epoch},
            {"restarts", t.restarts},
            {"recoveries", t.recoveries},
            {"seed", t.seed}}},
          {"best_params", params_json(t.best_params)},
          {"history", {{"fidelity", t.fidelity_history}, {"cost", t.cost_history}, {"success_prob", t.success_history}}}};
}

inline void write_case_pdf_csv(std::ostream& os, const Pdf& target, const Pdf& generated) {
  if (!(target.grid == generated.grid)) throw std::invalid_argument("write_case_pdf_csv: grid mismatch");
  os << "q,target,generated\n" << std::setprecision(17);
  for (std::size_t i = 0; i < target.grid.points; ++i)
    os << target.grid.at(i) << ',' << target.values[i] << ',' << generated.values[i] << '\n';
}

struct CasePdfs {
  Pdf target;
  Pdf generated;
};

inline CasePdfs read_case_pdf_csv(std::istream& is) {
  detail::expect_header(is, "q,target,generated", "read_case_pdf_csv");
  std::vector<double> q, a, b;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 3) throw std::invalid_argument("read_case_pdf_csv: expected 3 columns");
    q.push_back(std::stod(c[0]));
    a.push_back(std::stod(c[1]));
    b.push_back(std::stod(c[2]));
  }
  if (q.size() < QuadGrid::kMinPoints) throw std::invalid_argument("read_case_pdf_csv: too few rows");
  const QuadGrid g(q.front(), q.back(), q.size());
  return {Pdf{g, std::move(a)}, Pdf{g, std::move(b)}};
}

inline void write_samples_csv(std::ostream& os, const std::vector<double>& samples) {
  os << std::setprecision(17);
  for (double x : samples) os << x << '\n';
}

inline std::vector<double> read_samples_csv(std::istream& is) {
  std::vector<double> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(std::stod(line));
  return out;
}

inline std::filesystem::path output_dir(const ExperimentConfig& cfg) {
  return cfg.outputs.empty() ? std::filesystem::path("out") / cfg.name : std::filesystem::path(cfg.outputs);
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace detail

/// Writes report.json, pdf.csv, samples.csv and params.json into `dir`.
inline void write_case_artifacts(const CaseResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::open_output(dir / "report.json") << report_json(r).dump(2) << '\n';
  auto pdf = detail::open_output(dir / "pdf.csv");
  write_case_pdf_csv(pdf, r.target.pdf, r.generated.pdf);
  auto samples = detail::open_output(dir / "samples.csv");
  write_samples_csv(samples, r.generated.samples);
  detail::open_output(dir / "params.json") << params_json(r.train.best_params).dump(2) << '\n';
}

struct SweepResult {
  NoiseSweepConfig sweep;
  std::vector<SweepRun> runs;
  std::vector<SweepRow> rows;
};

/// Trains cfg.sweep.repeats seeds (starting at train.seed) under loss at each T.
inline SweepResult run_sweep(const ExperimentConfig& cfg, std::size_t threads = 1) {
  if (cfg.qbm.cutoff > kMaxNoisyCutoff) throw ConfigError("qbm.cutoff", "must be at most 12 for a noise sweep");
  SweepResult out;
  out.sweep.t_values = cfg.sweep.t_values;
  out.sweep.repeats = cfg.sweep.repeats;
  out.sweep.placement = cfg.noise.placement;
  out.sweep.base_seed = cfg.train.seed;
  out.sweep.threads = threads;
  const PreparedTarget target = prepare(cfg);
  const SweepRunner runner = [&](double t, std::uint64_t seed) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    if (threads > 1) tc.threads = 1;
    const Model model = case_model(cfg, target, t);
    const TrainResult res = train(model, cfg.qbm.steps, tc);
    const Generated g = generate(res, model, target.pdf, 0, cfg.generate.seed);
    return RunMetrics{res.final_fidelity, g.kl, res.final_success_prob};
  };
  out.runs = sweep_runs(out.sweep, runner);
  out.rows = aggregate(out.sweep, out.runs);
  return out;
}

inline void write_sweep_artifacts(const SweepResult& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto runs = detail::open_output(dir / "sweep.csv");
  write_sweep_runs_csv(runs, s.runs);
  auto summary = detail::open_output(dir / "sweep_summary.csv");
  write_sweep_summary_csv(summary, s.rows);
}

}  // namespace cvqbm

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

// cvqbm: run bundled or user-supplied case studies and T sweeps.
//
//   cvqbm list
//   cvqbm run rayleigh --out-dir out/rayleigh --assert
//   cvqbm sweep forest-histogram --t-values 1.0,0.9,0.8
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 threshold miss
// (only with --assert).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cvqbm/config.hpp"
#include "cvqbm/experiment.hpp"
#include "cvqbm_bundled.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitThreshold = 4;

void fail(const char* kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

cvqbm::ExperimentConfig resolve(const std::string& what) {
  if (std::filesystem::is_regular_file(what)) return cvqbm::load_config(what);
  for (const auto& [name, text] : cvqbm::bundled_configs())
    if (name == what) return cvqbm::parse_config(std::string(text));
  throw cvqbm::ConfigError("", "\"" + what + "\" is neither a readable file nor a bundled case (see `cvqbm list`)");
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> post_select;
  std::optional<std::size_t> epochs;
  std::string out_dir;
};

void apply(cvqbm::ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.post_select) {
    if (*o.post_select >= cfg.qbm.cutoff) throw cvqbm::ConfigError("--post-select", "must be below qbm.cutoff");
    cfg.qbm.post_select_outcome = *o.post_select;
  }
  if (!o.out_dir.empty()) cfg.outputs = o.out_dir;
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw cvqbm::ConfigError("", e.what());
  }
}

int cmd_list() {
  for (const auto& [name, text] : cvqbm::bundled_configs()) {
    const auto cfg = cvqbm::parse_config(std::string(text));
    std::printf("%-18s %-14s S=%zu delta=%g cutoff=%zu epochs=%zu\n", std::string(name).c_str(),
                cvqbm::to_string(cfg.target.kind), cfg.qbm.steps, cfg.qbm.delta, cfg.qbm.cutoff, cfg.train.epochs);
  }
  return 0;
}

int cmd_show(const std::string& name) {
  for (const auto& [n, text] : cvqbm::bundled_configs())
    if (n == name) {
      std::cout << text;
      return 0;
    }
  fail("config", "no bundled case named \"" + name + "\"");
  return kExitConfig;
}

int cmd_run(const std::string& what, const Overrides& o, bool check) {
  auto cfg = resolve(what);
  apply(cfg, o);
  const auto result = cvqbm::run_case(cfg);
  const auto dir = cvqbm::output_dir(cfg);
  cvqbm::write_case_artifacts(result, dir);
  std::printf("%s: fidelity=%.6f kl=%.6f success_prob=%.6f best_epoch=%zu -> %s\n", cfg.name.c_str(),
              result.train.final_fidelity, result.generated.kl, result.forward.success_prob, result.train.best_epoch,
              dir.string().c_str());
  const auto missed = cvqbm::missed_expectations(result);
  for (const auto& m : missed) std::printf("  below expectation: %s\n", m.c_str());
  return check && !missed.empty() ? kExitThreshold : 0;
}

int cmd_sweep(const std::string& what, const Overrides& o, const std::vector<double>& t_values,
              std::optional<std::size_t> repeats, std::size_t threads) {
  auto cfg = resolve(what);
  apply(cfg, o);
  if (!t_values.empty()) cfg.sweep.t_values = t_values;
  if (repeats) cfg.sweep.repeats = *repeats;
  for (double t : cfg.sweep.t_values)
    if (!(t >= 0.0 && t <= 1.0)) throw cvqbm::ConfigError("--t-values", "values must lie in [0, 1]");
  if (cfg.sweep.repeats == 0) throw cvqbm::ConfigError("--repeats", "must be positive");
  const auto sweep = cvqbm::run_sweep(cfg, threads);
  const auto dir = cvqbm::output_dir(cfg);
  cvqbm::write_sweep_artifacts(sweep, dir);
  for (const auto& r : sweep.rows)
    std::printf("T=%.2f fidelity=%.4f+-%.4f kl=%.4f+-%.4f success_prob=%.4f failures=%zu\n", r.transmissivity,
                r.mean_fidelity, r.std_fidelity, r.mean_kl, r.std_kl, r.mean_success, r.failures);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-variable quantum Boltzmann machine simulator"};
  app.require_subcommand(1);

  Overrides o;
  std::string target;
  bool check = false;
  std::vector<double> t_values;
  std::optional<std::size_t> repeats;
  std::size_t threads = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", target, "Config file or bundled case name")->required();
    sub->add_option("--seed", o.seed, "Override train.seed");
    sub->add_option("--out-dir", o.out_dir, "Directory for artifacts (default out/<name>)");
    sub->add_option("--post-select", o.post_select, "Ancilla photon count to post-select on")
        ->check(CLI::IsMember({0, 1}));
    sub->add_option("--epochs", o.epochs, "Override train.epochs")->check(CLI::PositiveNumber);
  };

  auto* list = app.add_subcommand("list", "List bundled case studies");
  std::string show_name;
  auto* show = app.add_subcommand("show", "Print a bundled config");
  show->add_option("name", show_name, "Bundled case name")->required();
  auto* run = app.add_subcommand("run", "Train one case study and write its artifacts");
  add_common(run);
  run->add_flag("--assert", check, "Exit 4 when the config's expect thresholds are missed");
  auto* sweep = app.add_subcommand("sweep", "Train under photon loss for each transmissivity");
  add_common(sweep);
  sweep->add_option("--t-values", t_values, "Transmissivities, e.g. 1.0,0.9,0.8")->delimiter(',');
  sweep->add_option("--repeats", repeats, "Seeds per T");
  sweep->add_option("--threads", threads, "Concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*list) return cmd_list();
    if (*show) return cmd_show(show_name);
    if (*run) return cmd_run(target, o, check);
    if (*sweep) return cmd_sweep(target, o, t_values, repeats, threads);
  } catch (const cvqbm::ConfigError& e) {
    fail("config", e.what());
    return kExitConfig;
  } catch (const cvqbm::Error& e) {
    fail("numerical", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    fail("config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fail("runtime", e.what());
    return kExitNumerical;
  }
  return 0;
}

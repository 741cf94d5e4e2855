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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cvqbm/config.hpp"
#include "cvqbm/experiment.hpp"
#include "cvqbm_bundled.hpp"

namespace {

using namespace cvqbm;

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, MinimalDocumentTakesDefaults) {
  const auto c = parse_config(R"({"target": {"kind": "rayleigh", "params": [1.0]}})");
  EXPECT_EQ(c.name, "experiment");
  EXPECT_EQ(c.target.kind, TargetKind::Rayleigh);
  EXPECT_EQ(c.qbm.delta, 1.5);
  EXPECT_EQ(c.qbm.steps, 1u);
  EXPECT_EQ(c.qbm.cutoff, 10u);
  EXPECT_EQ(c.qbm.post_select_outcome, 0u);
  EXPECT_EQ(c.train.epochs, 100u);
  EXPECT_EQ(c.train.lr0, 0.05);
  EXPECT_EQ(c.generate.samples, 1000u);
  EXPECT_EQ(c.noise.transmissivity, 1.0);
  EXPECT_EQ(c.sweep.t_values.size(), 10u);
  EXPECT_EQ(output_dir(c), std::filesystem::path("out") / "experiment");
}

TEST(Config, SupportBecomesGrid) {
  const auto c = parse_config(R"({"target": {"kind": "gamma", "params": [2.5, 0.5], "support": [0, 6]}})");
  EXPECT_EQ(c.grid.q_min, 0.0);
  EXPECT_EQ(c.grid.q_max, 6.0);
  EXPECT_EQ(c.grid.points, 1201u);
}

TEST(Config, RangeErrorsNameTheField) {
  const auto msg = error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"delta": -1}})");
  EXPECT_NE(msg.find("qbm.delta"), std::string::npos) << msg;
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"cutoff": 30}})").find("qbm.cutoff"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "train": {"lr0": 0}})").find("train.lr0"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1, 2]}})").find("target.params"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"steps": "two"}})").find("qbm.steps"),
            std::string::npos);
}

TEST(Config, UnknownKeySuggestsNearest) {
  const auto msg = error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"fooo": 1}})");
  EXPECT_NE(msg.find("qbm.fooo"), std::string::npos) << msg;
  EXPECT_NE(msg.find("expected one of"), std::string::npos) << msg;
  const auto near = error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"cutof": 10}})");
  EXPECT_NE(near.find("cutoff"), std::string::npos) << near;
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "extra": 1})").find("extra"),
            std::string::npos);
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  const auto msg = error_of("{\n  \"target\": {\n    \"kind\": \"rayleigh\",,\n  }\n}");
  EXPECT_NE(msg.find("line 3, column 24"), std::string::npos) << msg;
}

TEST(Config, CrossFieldChecks) {
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"steps": 2},
                        "train": {"init": [0, 0, 0, 0, 0.1]}})")
                .find("train.init"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"target": {"kind": "rayleigh", "params": [1]}, "qbm": {"cutoff": 15},
                        "noise": {"transmissivity": 0.5}})")
                .find("qbm.cutoff"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"name": "../x", "target": {"kind": "rayleigh", "params": [1]}})").find("name"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"qbm": {}})").find("target"), std::string::npos);
}

TEST(Config, BundledConfigsParseAndRoundTrip) {
  ASSERT_GE(bundled_configs().size(), 7u);
  for (const auto& [name, text] : bundled_configs()) {
    const auto c = parse_config(std::string(text));
    EXPECT_EQ(c.name, name);
    const auto echo = config_json(c);
    const auto again = parse_config(echo.dump());
    EXPECT_EQ(config_json(again), echo) << name;
  }
}

TEST(Config, LoadsFromDisk) {
  const auto c = load_config(std::string(CVQBM_SOURCE_DIR) + "/configs/rayleigh.json");
  EXPECT_EQ(c.name, "rayleigh");
  EXPECT_THROW(load_config(std::string(CVQBM_SOURCE_DIR) + "/tests/data/bad_key.json"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/cfg.json"), ConfigError);
}

class CaseArtifacts : public ::testing::Test {
 protected:
  static ExperimentConfig tiny(const std::filesystem::path& out) {
    auto c = parse_config(R"({
      "name": "tiny",
      "target": {"kind": "gaussian", "params": [0.3, 0.8], "support": [-4, 4]},
      "qbm": {"delta": 1.5, "steps": 1, "cutoff": 8},
      "train": {"epochs": 4, "seed": 3},
      "generate": {"samples": 64, "seed": 5}
    })");
    c.outputs = out.string();
    return c;
  }
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "cvqbm_case_test";
    std::filesystem::remove_all(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CaseArtifacts, DeterministicReportsAndFiles) {
  const auto cfg = tiny(dir_ / "a");
  const auto r1 = run_case(cfg);
  const auto r2 = run_case(cfg);
  EXPECT_EQ(report_json(r1).dump(), report_json(r2).dump());
  EXPECT_EQ(r1.train.fidelity_history.size(), 4u);
  write_case_artifacts(r1, output_dir(cfg));
  for (const char* f : {"report.json", "pdf.csv", "samples.csv", "params.json"})
    EXPECT_TRUE(std::filesystem::exists(output_dir(cfg) / f)) << f;

  std::ifstream pdf(output_dir(cfg) / "pdf.csv");
  const auto pdfs = read_case_pdf_csv(pdf);
  EXPECT_NEAR(kl_divergence(pdfs.generated, pdfs.target), r1.generated.kl, 1e-9);

  std::ifstream smp(output_dir(cfg) / "samples.csv");
  EXPECT_EQ(read_samples_csv(smp), r1.generated.samples);

  std::ifstream pj(output_dir(cfg) / "params.json");
  EXPECT_EQ(params_from_json(nlohmann::json::parse(pj)).flatten(), r1.train.best_params.flatten());

  std::ifstream rj(output_dir(cfg) / "report.json");
  const auto report = nlohmann::json::parse(rj);
  EXPECT_EQ(report["result"]["final_fidelity"].get<double>(), r1.train.final_fidelity);
  EXPECT_EQ(report["name"], "tiny");
  double prod = 1.0;
  for (double p : report["result"]["per_step_success"]) prod *= p;
  EXPECT_EQ(report["result"]["final_success_prob"].get<double>(), prod);
}

TEST_F(CaseArtifacts, ExpectationsAreChecked) {
  auto cfg = tiny(dir_ / "b");
  cfg.expect.min_fidelity = 1.01;
  cfg.expect.max_kl = -1.0;
  const auto r = run_case(cfg);
  EXPECT_EQ(missed_expectations(r).size(), 2u);
  cfg.expect = {};
  EXPECT_TRUE(missed_expectations(run_case(cfg)).empty());
}

TEST_F(CaseArtifacts, SweepWritesCsvs) {
  auto cfg = tiny(dir_ / "c");
  cfg.sweep.t_values = {1.0, 0.5};
  cfg.sweep.repeats = 2;
  const auto s = run_sweep(cfg, 2);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.runs.size(), 4u);
  write_sweep_artifacts(s, output_dir(cfg));
  std::ifstream in(output_dir(cfg) / "sweep_summary.csv");
  const auto rows = read_sweep_summary_csv(in);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].mean_fidelity, s.rows[1].mean_fidelity);
  EXPECT_EQ(s.runs[1].seed, cfg.train.seed + 1);
}

}  // namespace

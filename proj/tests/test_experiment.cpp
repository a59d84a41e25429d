// Copyright 2026 The certgrad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "certgrad/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "certgrad/error.hpp"
#include "certgrad/lp_format.hpp"

namespace certgrad {
namespace {

using nlohmann::json;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() /
          ("certgrad_exp_" + std::to_string(::getpid()) + "_" + name))
      .string();
}

ExperimentConfig small_config() {
  return config_from_json(json::parse(R"({
    "seed": 3,
    "dataset": {"n": 24},
    "test_dataset": {"n": 12, "seed": 99},
    "model": {"hidden": [4]},
    "train": {"loss": "hinge", "batch_size": 8, "epochs": 2, "learning_rate": 0.2},
    "perturbation": {"model": "bounded", "n": 1, "q": "0", "nu": 1},
    "certify": {"grid": 6, "backdoor_epsilon": 0.01}
  })"));
}

json strip_created(json doc) {
  doc.erase("created");
  return doc;
}

TEST(Config, JsonRoundTrip) {
  const ExperimentConfig c = small_config();
  const json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_EQ(j["perturbation"]["model"], "bounded");
  EXPECT_EQ(j["train"]["seed"], 3);
  EXPECT_EQ(j["model"]["hidden"], json::array({4}));
}

TEST(Config, RejectsUnknownAndInconsistent) {
  EXPECT_THROW(config_from_json(json::parse(R"({"sede": 1})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"train": {"lr": 1}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"perturbation": {"model": "substitution", "n": 1}})")),
               ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"dataset": {"source": "mnist"}})")),
               ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"train": {"loss": "l1"}})")), ConfigError);
}

TEST(Config, HashIsStableAndSensitive) {
  const json a = config_to_json(small_config());
  const std::string h = config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(config_hash(a), h);
  json b = a;
  b["seed"] = 4;
  EXPECT_NE(config_hash(b), h);
}

TEST(Experiment, DeterministicModuloTimestamp) {
  const ExperimentConfig c = small_config();
  const ResultsDocument a = run_experiment(c);
  const ResultsDocument b = run_experiment(c);
  EXPECT_EQ(strip_created(a).dump(), strip_created(b).dump());
  EXPECT_TRUE(a.contains("created"));
  EXPECT_EQ(a["schema_version"], kResultsSchemaVersion);
  EXPECT_EQ(a["train"]["iterations"], 6);
  EXPECT_EQ(a["train"]["widths"].size(), 7u);
  EXPECT_EQ(a["certificates"]["grid"]["total"], 36);
  EXPECT_TRUE(a["certificates"]["train"].contains("backdoor_accuracy"));
  EXPECT_EQ(a["certificates"]["test"]["size"], 12);
}

TEST(Experiment, ZeroPerturbationHasZeroWidths) {
  ExperimentConfig c = small_config();
  c.perturbation = BoundedPerturbation{};
  const ResultsDocument doc = run_experiment(c);
  for (const json& w : doc["train"]["widths"]) EXPECT_EQ(w.get<double>(), 0.0);
  EXPECT_EQ(doc["train"]["final_lower"], doc["train"]["final_upper"]);
  EXPECT_EQ(doc["train"]["final_lower"], doc["train"]["nominal"]);
  EXPECT_EQ(doc["certificates"]["train"]["certified_accuracy"],
            doc["certificates"]["train"]["nominal_accuracy"]);
}

TEST(Experiment, OracleEncodeAndPrivacyStages) {
  ExperimentConfig c = small_config();
  OracleSpec o;
  o.plan = EnumerationPlan::label_flips(1);
  c.oracle = o;
  EncodeSpec e;
  e.window = {0, 1};
  e.path = temp_path("enc.lp");
  c.encode = e;
  const ResultsDocument doc = run_experiment(c);
  EXPECT_EQ(doc["containment"]["total"], 25);
  EXPECT_EQ(doc["containment"]["contained"], 25);
  std::ifstream in(e.path);
  const std::string lp((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::remove(e.path.c_str());
  const ConstraintSystem cs = parse_lp(lp);
  EXPECT_EQ(cs.num_variables(), doc["encode"]["variables"].get<int>());
  EXPECT_EQ(cs.num_binaries(), doc["encode"]["binaries"].get<int>());

  ExperimentConfig p = small_config();
  p.train.loss = LossKind::kBinaryCrossEntropy;
  p.train.clip_kappa = 1.0;
  PrivacySpec ps;
  ps.budgets = {1, 2, 4};
  ps.epsilon = 1.0;
  ps.beta = 0.1;
  ps.max_points = 5;
  p.privacy = ps;
  const ResultsDocument pd = run_experiment(p);
  ASSERT_EQ(pd["privacy"]["points"].size(), 5u);
  for (const json& pt : pd["privacy"]["points"]) {
    const int np = pt["n_prime"];
    EXPECT_TRUE(np == 0 || np == 1 || np == 2 || np == 4);
    EXPECT_NEAR(pt["scale"].get<double>(), 6.0 * std::exp(-0.1 * np), 1e-12);
  }
}

TEST(Experiment, StageTagsOnErrors) {
  ExperimentConfig c = small_config();
  c.dataset.source = "csv";
  c.dataset.path = temp_path("absent.csv");
  try {
    run_experiment(c);
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("[data] ", 0), 0u) << e.what();
  }
  ExperimentConfig enc = small_config();
  EncodeSpec e;
  e.window = {0, 1};
  e.path = temp_path("enc2.lp");
  enc.encode = e;
  enc.train.loss = LossKind::kCrossEntropy;
  try {
    run_experiment(enc);
    FAIL() << "expected a config error";
  } catch (const ConfigError& err) {
    EXPECT_EQ(std::string(err.what()).rfind("[encode] ", 0), 0u) << err.what();
  }
}

TEST(Results, WriteReadVerify) {
  const ResultsDocument doc = run_experiment(small_config());
  const std::string path = temp_path("res.json");
  write_results(doc, path);
  const ResultsDocument back = read_results(path);
  std::remove(path.c_str());
  EXPECT_EQ(back, doc);
  EXPECT_NO_THROW(verify_results(back));
  ResultsDocument tampered = back;
  tampered["config"]["seed"] = 123;
  EXPECT_THROW(verify_results(tampered), DataError);
  ResultsDocument old = back;
  old["schema_version"] = 0;
  EXPECT_THROW(verify_results(old), DataError);
  const Architecture arch{{2, 4, 1}};
  EXPECT_TRUE(results_bounds(back, arch).contains(results_nominal(back, arch)));
  EXPECT_THROW(results_bounds(back, Architecture{{2, 3, 1}}), DataError);
}

TEST(Pipeline, FeaturesAndArchitecture) {
  ExperimentConfig c = small_config();
  c.features.poly_degree = 3;
  c.features.standardize = true;
  c.hidden.clear();
  const PreparedData d = prepare_data(c);
  EXPECT_EQ(d.train.dim(), 9);
  EXPECT_EQ(d.raw_train.dim(), 2);
  EXPECT_EQ(d.transform(d.raw_train.x(5)), d.train.x(5));
  EXPECT_EQ(experiment_arch(c, 9).param_count(), 10u);
  ExperimentConfig ce = small_config();
  ce.train.loss = LossKind::kCrossEntropy;
  EXPECT_EQ(experiment_arch(ce, 2).output_dim(), 2);
  EXPECT_EQ(experiment_schedule(c, 24).iterations(), 6);
}

}  // namespace
}  // namespace certgrad

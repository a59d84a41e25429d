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

#ifndef CERTGRAD_EXPERIMENT_HPP_
#define CERTGRAD_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "certgrad/bound_prop.hpp"
#include "certgrad/certify.hpp"
#include "certgrad/data.hpp"
#include "certgrad/encoding.hpp"
#include "certgrad/model.hpp"
#include "certgrad/oracle.hpp"
#include "certgrad/training.hpp"

namespace certgrad {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr const char* kCertgradVersion = "0.1.0";

struct DatasetSpec {
  std::string source = "halfmoons";  // halfmoons | blobs | csv
  int n = 128;
  double noise_sd = 0.1;
  Eigen::MatrixXd centers;  // blobs
  double sd = 1.0;          // blobs
  std::string path;         // csv
  CsvSchema schema;         // csv
  std::optional<std::uint64_t> seed;
};

struct FeatureSpec {
  int poly_degree = 1;
  bool standardize = false;
};

struct CertifySpec {
  int grid = 0;  // cells per axis, 0 for none; needs 2-d raw inputs
  double grid_inflation = 0.2;
  bool train_set = true;
  bool test_set = true;
  std::optional<double> backdoor_epsilon;
};

struct PrivacySpec {
  std::vector<int> budgets;
  double epsilon = 1.0;
  double beta = 0.1;
  NoiseMechanism mechanism = NoiseMechanism::kCauchy;
  int max_points = 100;
};

struct OracleSpec {
  EnumerationPlan plan;
  double tol = 1e-9;
};

struct EncodeSpec {
  Window window{0, 1};
  EncodeOptions options;
  std::string path;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  std::optional<DatasetSpec> test_dataset;
  FeatureSpec features;
  std::vector<int> hidden;
  TrainConfig train;
  PerturbationModel perturbation = BoundedPerturbation{};
  AbstractTrainOptions bounds;
  CertifySpec certify;
  std::optional<PrivacySpec> privacy;
  std::optional<OracleSpec> oracle;
  std::optional<EncodeSpec> encode;
  std::string output;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// 64-bit FNV-1a of the compact serialised configuration, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// The raw data, the feature pipeline and the transformed train/test sets.
struct PreparedData {
  Dataset raw_train;
  Dataset train;
  std::optional<Dataset> test;
  int poly_degree = 1;
  std::optional<Standardizer> standardizer;

  Eigen::VectorXd transform(const Eigen::VectorXd& raw) const;
};

PreparedData prepare_data(const ExperimentConfig& cfg);
Architecture experiment_arch(const ExperimentConfig& cfg, int input_dim);
BatchSchedule experiment_schedule(const ExperimentConfig& cfg, int N);
TrainConfig experiment_train_config(const ExperimentConfig& cfg);

struct GridResult {
  int resolution = 0;
  Eigen::Vector2d lo, hi;
  int stable = 0;
  int total = 0;
  std::vector<int> stable_mask;  // row-major, y outer
};

// Stability at cell centres of a resolution x resolution grid over the raw
// training bounding box inflated by `inflation` of its extent per side.
GridResult certify_grid(const PreparedData& data, const ParamIntervals& pi,
                        const Params& nominal, LossKind loss, int resolution,
                        double inflation, const BoundOptions& opts = {});

using ResultsDocument = nlohmann::json;

// Each stage adds its section to doc. Errors carry the stage name.
void run_train_stage(const ExperimentConfig& cfg, const PreparedData& data,
                     ResultsDocument& doc);
void run_certify_stage(const ExperimentConfig& cfg, const PreparedData& data,
                       ResultsDocument& doc);
void run_oracle_stage(const ExperimentConfig& cfg, const PreparedData& data,
                      ResultsDocument& doc);
void run_encode_stage(const ExperimentConfig& cfg, const PreparedData& data,
                      ResultsDocument& doc);
void run_privacy_stage(const ExperimentConfig& cfg, const PreparedData& data,
                       ResultsDocument& doc);

// Header fields: schema version, config, config hash, version, timestamp.
ResultsDocument new_results(const ExperimentConfig& cfg);

// All configured stages in order: train, certify, oracle, encode, privacy.
ResultsDocument run_experiment(const ExperimentConfig& cfg);

// Bounds and nominal parameters stored by the train stage.
ParamIntervals results_bounds(const ResultsDocument& doc, const Architecture& arch);
Params results_nominal(const ResultsDocument& doc, const Architecture& arch);

// Checks the schema version and that the stored hash matches the stored
// config. Throws DataError otherwise.
void verify_results(const ResultsDocument& doc);

void write_results(const ResultsDocument& doc, const std::string& path);
ResultsDocument read_results(const std::string& path);

}  // namespace certgrad

#endif  // CERTGRAD_EXPERIMENT_HPP_

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

#ifndef CERTGRAD_ENCODING_HPP_
#define CERTGRAD_ENCODING_HPP_

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "certgrad/constraint_system.hpp"
#include "certgrad/dataset.hpp"
#include "certgrad/model.hpp"
#include "certgrad/schedule.hpp"
#include "certgrad/training.hpp"

namespace certgrad {

// Iterations t_start + 1 .. t_end, starting from parameters at t_start.
struct Window {
  int t_start = 0;
  int t_end = 0;

  bool operator==(const Window&) const = default;
};

// Windows of length w every p iterations, the last one clipped at T.
std::vector<Window> rolling_horizon_plan(int T, int w, int p);

struct ObjectiveSpec {
  enum class Kind { kParamMin, kParamMax, kFace };
  Kind kind = Kind::kParamMax;
  int index = 0;
  Eigen::VectorXd direction;  // kFace only, over flattened parameters

  static ObjectiveSpec param_min(int j) { return {Kind::kParamMin, j, {}}; }
  static ObjectiveSpec param_max(int j) { return {Kind::kParamMax, j, {}}; }
  static ObjectiveSpec face(Eigen::VectorXd a) { return {Kind::kFace, 0, std::move(a)}; }
};

// "min:J", "max:J" or "face:a0,a1,...".
ObjectiveSpec parse_objective(const std::string& s);
std::string objective_label(const ObjectiveSpec& obj);

struct EncodeOptions {
  Relaxation relaxation = Relaxation::kMiqcp;
  ObjectiveSpec objective;
  double bigm_margin = 0.1;
  double domain_inflation = 0.1;
};

// Feature and label ranges of the dataset widened by `inflation` of their
// extent on each side.
struct DataDomain {
  Eigen::VectorXd feature_lo, feature_hi;
  double label_lo = 0.0, label_hi = 0.0;
};

DataDomain substitution_domain(const Dataset& data, double inflation);

// Exact mixed-integer quadratic model of the training iterations in the
// window, relaxed as requested. Parameters are named
// theta_t{t}_l{k}_i{row}_j{col}, with col == fan_in for the bias; activations
// z_t{t}_s{i}_l{k}_n{j}; perturbation selectors s_{i}. Variable bounds come
// from interval propagation started at seed. Supports single-output models
// with squared-error or hinge loss and unclipped updates.
ConstraintSystem encode_training(const Dataset& data, const Architecture& arch,
                                 const TrainConfig& cfg, const PerturbationModel& pm,
                                 const BatchSchedule& schedule, Window window,
                                 const ParamIntervals& seed,
                                 const EncodeOptions& opts = {});

// A concrete perturbed training run: the dataset actually used, the selector
// value per sample, and the resulting iterates theta^(0..T).
struct ConcreteRun {
  Dataset data;
  std::vector<int> selected;
  std::vector<Params> trajectory;
};

// Values for every variable of encode_training (before relaxation) implied
// by the run. Pass through complete_assignment for relaxed systems.
std::map<std::string, double> run_assignment(const Architecture& arch,
                                             const TrainConfig& cfg,
                                             const PerturbationModel& pm,
                                             const BatchSchedule& schedule,
                                             Window window, const ConcreteRun& run);

}  // namespace certgrad

#endif  // CERTGRAD_ENCODING_HPP_

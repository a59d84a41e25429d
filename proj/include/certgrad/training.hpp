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

#ifndef CERTGRAD_TRAINING_HPP_
#define CERTGRAD_TRAINING_HPP_

#include <string>
#include <variant>
#include <vector>

#include "certgrad/aggregation.hpp"
#include "certgrad/bound_prop.hpp"
#include "certgrad/dataset.hpp"
#include "certgrad/model.hpp"
#include "certgrad/schedule.hpp"

namespace certgrad {

enum class Norm { kL0, kL1, kL2, kLinf };

Norm parse_norm(const std::string& s);
std::string norm_name(Norm p);

// Up to n samples per batch perturbed: features within the p-ball of radius
// epsilon, labels within the q-ball of radius nu. q = 0 counts flipped label
// entries.
struct BoundedPerturbation {
  int n = 0;
  Norm p = Norm::kLinf;
  double epsilon = 0.0;
  Norm q = Norm::kL0;
  double nu = 0.0;
};

struct RemovalPerturbation {
  int n = 0;
};

// Needs a clip bound in the training config.
struct SubstitutionPerturbation {
  int n = 0;
};

using PerturbationModel =
    std::variant<BoundedPerturbation, RemovalPerturbation, SubstitutionPerturbation>;

int perturbation_budget(const PerturbationModel& pm);
std::string perturbation_name(const PerturbationModel& pm);
void validate_perturbation(const PerturbationModel& pm, const TrainConfig& cfg);

// Input box for a bounded perturbation; non-infinity norms are enclosed in
// their infinity-norm box.
IntervalTensor feature_box(const Eigen::VectorXd& x, const BoundedPerturbation& pm);

// Target interval covering every admissible label of a sample.
IntervalTensor label_box(double label, LossKind loss, int outputs,
                         const BoundedPerturbation& pm);

struct AbstractTrainOptions {
  BoundOptions bounds;
  double containment_tol = 1e-9;
};

struct AbstractTrajectory {
  std::vector<ParamIntervals> bounds;  // Theta^(0..T)
  std::vector<Params> nominal;         // theta^(0..T)
  std::vector<std::string> warnings;

  double width(int t) const { return bounds[t].width_l1(); }
};

// Interval training alongside nominal SGD on the same schedule. Throws
// InvariantError if the nominal iterate leaves its bounds.
AbstractTrajectory abstract_train(const Dataset& data, const Architecture& arch,
                                  const TrainConfig& cfg,
                                  const PerturbationModel& pm,
                                  const BatchSchedule& schedule,
                                  const AbstractTrainOptions& opts = {});

}  // namespace certgrad

#endif  // CERTGRAD_TRAINING_HPP_

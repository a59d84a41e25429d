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

#ifndef CERTGRAD_ORACLE_HPP_
#define CERTGRAD_ORACLE_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "certgrad/dataset.hpp"
#include "certgrad/model.hpp"
#include "certgrad/schedule.hpp"
#include "certgrad/training.hpp"

namespace certgrad {

struct EnumerationPlan {
  enum class Kind { kLabelFlips, kRemovals, kFeatureGrid };
  Kind kind = Kind::kLabelFlips;
  int n = 1;
  double epsilon = 0.0;     // kFeatureGrid
  int points_per_axis = 2;  // kFeatureGrid, endpoints included
  std::size_t cap = 10000;

  static EnumerationPlan label_flips(int n) { return {Kind::kLabelFlips, n, 0.0, 2}; }
  static EnumerationPlan removals(int n) { return {Kind::kRemovals, n, 0.0, 2}; }
  static EnumerationPlan feature_grid(int n, double eps, int points) {
    return {Kind::kFeatureGrid, n, eps, points};
  }
};

// One concrete dataset of the enumeration. `indices` lists the touched
// samples; removed samples stay in `data` and are flagged in `removed`.
struct PerturbedDataset {
  Dataset data;
  std::vector<int> indices;
  std::vector<bool> removed;
};

// Number of datasets the plan yields on N samples of dimension dim, nominal
// included.
std::size_t enumeration_count(const EnumerationPlan& plan, int N, int dim = 1);

// Nominal first, then every size-n index set in lexicographic order. For
// feature grids each touched sample takes every point of a regular grid on
// its infinity-norm box. Throws ConfigError past the cap.
std::vector<PerturbedDataset> enumerate_perturbed_datasets(const Dataset& data,
                                                           const EnumerationPlan& plan);

// Final parameters of one retraining per enumerated dataset, same schedule
// and initialisation as the abstract run.
std::vector<Params> empirical_reachable_params(const Dataset& data,
                                               const EnumerationPlan& plan,
                                               const Architecture& arch,
                                               const TrainConfig& cfg,
                                               const BatchSchedule& schedule);

struct ContainmentReport {
  int total = 0;
  int contained = 0;
  double worst_excess = 0.0;
  Eigen::VectorXd empirical_min;
  Eigen::VectorXd empirical_max;

  bool passed() const { return contained == total; }
};

ContainmentReport check_containment(const std::vector<Params>& params,
                                    const ParamIntervals& theta, double tol);

// Exact coordinate-wise range of the batch-mean descent direction over every
// admissible removal of up to n samples, or substitution of up to n samples
// by arbitrary gradients in [-kappa, kappa]. Substitution clips the given
// gradients first. Needs at most 12 gradients.
ParamIntervals brute_force_descent_envelope(const std::vector<Params>& grads,
                                            const PerturbationModel& pm,
                                            std::optional<double> kappa = {});

}  // namespace certgrad

#endif  // CERTGRAD_ORACLE_HPP_

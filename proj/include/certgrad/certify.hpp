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

#ifndef CERTGRAD_CERTIFY_HPP_
#define CERTGRAD_CERTIFY_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "certgrad/bound_prop.hpp"
#include "certgrad/dataset.hpp"
#include "certgrad/model.hpp"
#include "certgrad/schedule.hpp"
#include "certgrad/training.hpp"

namespace certgrad {

enum class CertificateKind { kStable, kCorrect, kBackdoor };

struct Certificate {
  CertificateKind kind = CertificateKind::kStable;
  bool holds = false;
  IntervalTensor logit_bounds;
  int predicted = 0;
};

// The nominal prediction at x is shared by every parameter in pi. For one
// logit the bounds must not straddle the decision threshold; otherwise the
// predicted logit must dominate the others, ties going to the lower index.
Certificate certify_stable(const ParamIntervals& pi, const Params& nominal,
                           const Eigen::VectorXd& x, LossKind loss,
                           const BoundOptions& opts = {});

// Stable and the nominal prediction equals the label.
Certificate certify_correct(const ParamIntervals& pi, const Params& nominal,
                            const Eigen::VectorXd& x, int label, LossKind loss,
                            const BoundOptions& opts = {});

// Correct for every input within eps_test of x in the infinity norm.
Certificate certify_backdoor(const ParamIntervals& pi, const Params& nominal,
                             const Eigen::VectorXd& x, int label, double eps_test,
                             LossKind loss, const BoundOptions& opts = {});

double certified_accuracy(const ParamIntervals& pi, const Params& nominal,
                          const Dataset& data, LossKind loss,
                          const BoundOptions& opts = {});

double nominal_accuracy(const Params& nominal, const Dataset& data, LossKind loss);

// Mean over the dataset of per-sample loss bounds.
Interval loss_bounds(const ParamIntervals& pi, const Dataset& data, LossKind loss,
                     const BoundOptions& opts = {});

// Final parameter bounds for each substitution budget, ascending in n.
using StabilityLadder = std::vector<std::pair<int, ParamIntervals>>;

StabilityLadder build_stability_ladder(const Dataset& data,
                                       const Architecture& arch,
                                       const TrainConfig& cfg,
                                       const BatchSchedule& schedule,
                                       const std::vector<int>& budgets,
                                       const AbstractTrainOptions& opts = {});

// Largest rung n such that every rung up to it is stable at x; 0 if none.
int max_stable_n(const StabilityLadder& ladder, const Params& nominal,
                 const Eigen::VectorXd& x, LossKind loss,
                 const BoundOptions& opts = {});

// exp(-beta * n').
double smooth_sensitivity_bound(int n_prime, double beta);

enum class NoiseMechanism { kLaplace, kCauchy };

NoiseMechanism parse_mechanism(const std::string& name);

// Laplace: 1 / epsilon. Cauchy: 6 * ss / epsilon, needs beta <= epsilon / 6.
double noise_scale(NoiseMechanism mech, double ss, double epsilon, double beta);

double noise_cdf(NoiseMechanism mech, double scale, double z);
double noise_quantile(NoiseMechanism mech, double scale, double u);

// 1 iff value + z > 0.5, z drawn by inverse CDF from one seeded uniform.
int private_predict(double value, double scale, NoiseMechanism mech,
                    std::uint64_t seed);

}  // namespace certgrad

#endif  // CERTGRAD_CERTIFY_HPP_

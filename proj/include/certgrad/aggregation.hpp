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

#ifndef CERTGRAD_AGGREGATION_HPP_
#define CERTGRAD_AGGREGATION_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "certgrad/bound_prop.hpp"
#include "certgrad/model.hpp"

namespace certgrad {

using GradBoundsBatch = std::vector<GradBoundsSample>;

// Coordinate-wise sum of the `count` largest (smallest) entries. Selected
// entries are summed in their original order; ties go to the lower index.
Eigen::VectorXd semax(std::size_t count, const std::vector<Eigen::VectorXd>& values);
Eigen::VectorXd semin(std::size_t count, const std::vector<Eigen::VectorXd>& values);

// Bounds on the batch-mean descent direction when up to n samples are
// removed. Requires n < |batch|.
ParamIntervals agg_removal(const GradBoundsBatch& batch, int n);

// Up to n samples replaced by arbitrary ones with every gradient entry in
// [-kappa, kappa]. Requires clipped bounds and n <= |batch|.
ParamIntervals agg_substitution(const GradBoundsBatch& batch, int n, double kappa);

// Up to n samples perturbed within their poisoned bounds. Requires poisoned
// bounds on every sample, each containing its nominal bounds.
ParamIntervals agg_bounded(const GradBoundsBatch& batch, int n);

GradBoundsSample clip_grad_bounds(const GradBoundsSample& sample, double kappa);

// theta minus alpha times the descent bounds.
ParamIntervals apply_update(const ParamIntervals& theta,
                            const ParamIntervals& descent, double alpha);

}  // namespace certgrad

#endif  // CERTGRAD_AGGREGATION_HPP_

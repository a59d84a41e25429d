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

#ifndef CERTGRAD_BOUND_PROP_HPP_
#define CERTGRAD_BOUND_PROP_HPP_

#include <optional>
#include <string>
#include <vector>

#include "certgrad/interval.hpp"
#include "certgrad/model.hpp"

namespace certgrad {

enum class ForwardMethod { kIbp, kCrown };

ForwardMethod parse_forward_method(const std::string& name);

struct BoundOptions {
  ForwardMethod method = ForwardMethod::kIbp;
  MatmulMethod matmul = MatmulMethod::kEndpoint;
  bool outward_rounding = false;
};

struct IntervalTrace {
  std::vector<IntervalTensor> pre;   // pre-activations per layer
  std::vector<IntervalTensor> post;  // post[0] = input
  const IntervalTensor& logits() const { return pre.back(); }
};

// Backward pass bounds. dpre[k] bounds dL/d pre[k]; dpost[k] bounds
// dL/d post[k] for k >= 1.
struct BackwardTrace {
  std::vector<IntervalTensor> dpre;
  std::vector<IntervalTensor> dpost;
  ParamIntervals grads;
};

// Per-sample gradient bounds on the clean point and, when the sample may be
// perturbed, on its admissible perturbations.
struct GradBoundsSample {
  ParamIntervals nominal;
  std::optional<ParamIntervals> poisoned;
};

// Linear bounds on the logits from backward substitution. lambda[k] and
// omega[k] hold the interval coefficients on post[k] of the upper and lower
// bounding functions; delta[k] and theta[k] the accumulated constant terms
// contributed by layer k (bias plus relaxation intercepts).
struct CrownState {
  std::vector<IntervalTensor> lambda;
  std::vector<IntervalTensor> omega;
  std::vector<Eigen::VectorXd> delta;
  std::vector<Eigen::VectorXd> theta;
  Eigen::VectorXd gamma_lo;
  Eigen::VectorXd gamma_hi;

  IntervalTensor bounds() const { return IntervalTensor(gamma_lo, gamma_hi); }
};

IntervalTrace ibp_forward(const ParamIntervals& pi, const IntervalTensor& x,
                          const BoundOptions& opts = {});

// Needs the IBP trace for pre-activation bounds of the hidden layers.
CrownState crown_forward(const ParamIntervals& pi, const IntervalTensor& x,
                         const IntervalTrace& ibp);

IntervalTensor loss_grad_interval(const IntervalTensor& yhat,
                                  const IntervalTensor& y, LossKind loss);

// Bounds on the loss value for an exact target.
Interval loss_value_interval(const IntervalTensor& yhat,
                             const Eigen::VectorXd& target, LossKind loss);

BackwardTrace ibp_backward_trace(const IntervalTrace& trace,
                                 const ParamIntervals& pi,
                                 const IntervalTensor& dL,
                                 const BoundOptions& opts = {});
ParamIntervals ibp_backward(const IntervalTrace& trace, const ParamIntervals& pi,
                            const IntervalTensor& dL,
                            const BoundOptions& opts = {});

// Forward pass (IBP, or CROWN logits intersected with IBP), loss gradient
// bounds, then IBP backward.
ParamIntervals per_sample_grad_bounds(const ParamIntervals& pi,
                                      const IntervalTensor& x,
                                      const IntervalTensor& y, LossKind loss,
                                      const BoundOptions& opts = {});

// Logit bounds with the selected forward method. CROWN is intersected with IBP.
IntervalTensor output_bounds(const ParamIntervals& pi, const IntervalTensor& x,
                             const BoundOptions& opts = {});

}  // namespace certgrad

#endif  // CERTGRAD_BOUND_PROP_HPP_

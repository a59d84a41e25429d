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

#ifndef CERTGRAD_MODEL_HPP_
#define CERTGRAD_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "certgrad/dataset.hpp"
#include "certgrad/interval.hpp"
#include "certgrad/schedule.hpp"

namespace certgrad {

// Layer widths [n_0, ..., n_K]. Layer k (0-based) maps n_k to n_{k+1}; ReLU
// on every layer except the last.
struct Architecture {
  std::vector<int> layer_sizes;

  void validate() const;
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int fan_in(int k) const { return layer_sizes[k]; }
  int fan_out(int k) const { return layer_sizes[k + 1]; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t param_count() const;

  bool operator==(const Architecture&) const = default;
};

// Weights W_k (fan_out x fan_in) and biases b_k. Flat order is layer by
// layer, W_k row-major then b_k.
class Params {
 public:
  Params() = default;
  static Params zeros(const Architecture& arch);
  static Params unflatten(const Architecture& arch, const Eigen::VectorXd& v);

  const Architecture& arch() const { return arch_; }
  Eigen::MatrixXd& W(int k) { return weights_[k]; }
  const Eigen::MatrixXd& W(int k) const { return weights_[k]; }
  Eigen::VectorXd& b(int k) { return biases_[k]; }
  const Eigen::VectorXd& b(int k) const { return biases_[k]; }

  Eigen::VectorXd flatten() const;
  bool operator==(const Params& o) const;

 private:
  Architecture arch_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

// Per-parameter intervals, shaped like Params.
class ParamIntervals {
 public:
  ParamIntervals() = default;
  ParamIntervals(Params lower, Params upper);
  static ParamIntervals point(const Params& p) { return ParamIntervals(p, p); }
  static ParamIntervals from_flat(const Architecture& arch,
                                  const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi);

  const Architecture& arch() const { return lower_.arch(); }
  const Params& lower() const { return lower_; }
  const Params& upper() const { return upper_; }
  IntervalTensor W(int k) const;
  IntervalTensor b(int k) const;

  Eigen::VectorXd flat_lower() const { return lower_.flatten(); }
  Eigen::VectorXd flat_upper() const { return upper_.flatten(); }
  bool contains(const Params& p, double tol = 0.0) const;
  bool subset_of(const ParamIntervals& outer, double tol = 0.0) const;
  double width_l1() const;
  bool is_degenerate() const { return lower_ == upper_; }

 private:
  Params lower_;
  Params upper_;
};

ParamIntervals assemble_intervals(const Architecture& arch,
                                  const std::vector<IntervalTensor>& W,
                                  const std::vector<IntervalTensor>& b);

enum class LossKind { kSquaredError, kBinaryCrossEntropy, kCrossEntropy, kHinge };

LossKind parse_loss(const std::string& name);
std::string loss_name(LossKind loss);

// Converts a stored label to the target vector a loss expects: {0,1} for
// binary cross-entropy, {-1,+1} for hinge, one-hot for cross-entropy, and the
// raw value (or one-hot for several outputs) for squared error.
Eigen::VectorXd encode_target(double label, LossKind loss, int outputs);

// Threshold on a single logit above which class 1 is predicted.
double decision_threshold(LossKind loss);
int predict_class(const Eigen::VectorXd& logits, LossKind loss);

struct TrainConfig {
  double learning_rate = 0.1;
  double lr_decay = 0.0;
  int batch_size = 1;
  int epochs = 1;
  std::optional<double> clip_kappa;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kSquaredError;

  void validate() const;
};

// alpha / (1 + decay * t), t counting completed iterations from 0.
double lr_at(const TrainConfig& cfg, int t);

// Uniform in +-init_scale / sqrt(fan_in), zero biases.
Params init_params(const Architecture& arch, std::uint64_t seed,
                   double init_scale);

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;   // pre[k] = W_k post[k] + b_k
  std::vector<Eigen::VectorXd> post;  // post[0] = x, post[k] = relu(pre[k-1])
  const Eigen::VectorXd& logits() const { return pre.back(); }
};

ForwardTrace forward(const Params& params, const Eigen::VectorXd& x);

double loss_value(const Eigen::VectorXd& logits, const Eigen::VectorXd& target,
                  LossKind loss);
Eigen::VectorXd loss_grad(const Eigen::VectorXd& logits,
                          const Eigen::VectorXd& target, LossKind loss);

// Softmax entry i as 1 / (1 + sum_{j != i} exp(z_j - z_i)).
Eigen::VectorXd softmax_pairwise(const Eigen::VectorXd& logits);

Params backward(const Params& params, const ForwardTrace& trace,
                const Eigen::VectorXd& grad_logits);
Params sample_gradient(const Params& params, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& target, LossKind loss);
Params clip_gradient(const Params& grad, double kappa);

// theta - alpha_t * (sum_i g_i / |B|), each g_i clipped first if kappa set.
Params sgd_step(const Params& params, const std::vector<Params>& batch_grads,
                double alpha_t, std::optional<double> clip_kappa);

// Returns theta^(0..T). Samples flagged in `removed` are dropped from every
// batch they appear in and the batch mean is taken over the rest.
std::vector<Params> train_nominal(const Dataset& data, const Architecture& arch,
                                  const TrainConfig& cfg,
                                  const BatchSchedule& schedule,
                                  const std::vector<bool>& removed = {});

}  // namespace certgrad

#endif  // CERTGRAD_MODEL_HPP_

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

#include "certgrad/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "certgrad/error.hpp"
#include "certgrad/rng.hpp"

namespace certgrad {

void Architecture::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("architecture needs at least an input and output width");
  }
  for (int n : layer_sizes) {
    if (n < 1) throw ConfigError("layer widths must be positive");
  }
}

std::size_t Architecture::param_count() const {
  std::size_t total = 0;
  for (int k = 0; k < num_layers(); ++k) {
    total += static_cast<std::size_t>(fan_out(k)) * (fan_in(k) + 1);
  }
  return total;
}

Params Params::zeros(const Architecture& arch) {
  arch.validate();
  Params p;
  p.arch_ = arch;
  for (int k = 0; k < arch.num_layers(); ++k) {
    p.weights_.push_back(Eigen::MatrixXd::Zero(arch.fan_out(k), arch.fan_in(k)));
    p.biases_.push_back(Eigen::VectorXd::Zero(arch.fan_out(k)));
  }
  return p;
}

Params Params::unflatten(const Architecture& arch, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != arch.param_count()) {
    std::ostringstream msg;
    msg << "unflatten: expected " << arch.param_count() << " values, got "
        << v.size();
    throw ConfigError(msg.str());
  }
  Params p = zeros(arch);
  Eigen::Index pos = 0;
  for (int k = 0; k < arch.num_layers(); ++k) {
    for (Eigen::Index i = 0; i < p.weights_[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weights_[k].cols(); ++j) {
        p.weights_[k](i, j) = v(pos++);
      }
    }
    for (Eigen::Index i = 0; i < p.biases_[k].size(); ++i) {
      p.biases_[k](i) = v(pos++);
    }
  }
  return p;
}

Eigen::VectorXd Params::flatten() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arch_.param_count()));
  Eigen::Index pos = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    for (Eigen::Index i = 0; i < weights_[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < weights_[k].cols(); ++j) {
        v(pos++) = weights_[k](i, j);
      }
    }
    for (Eigen::Index i = 0; i < biases_[k].size(); ++i) v(pos++) = biases_[k](i);
  }
  return v;
}

bool Params::operator==(const Params& o) const {
  if (!(arch_ == o.arch_)) return false;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] != o.weights_[k] || biases_[k] != o.biases_[k]) return false;
  }
  return true;
}

ParamIntervals::ParamIntervals(Params lower, Params upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (!(lower_.arch() == upper_.arch())) {
    throw ConfigError("parameter interval endpoints have different shapes");
  }
  const Eigen::VectorXd lo = lower_.flatten();
  const Eigen::VectorXd hi = upper_.flatten();
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(lo(i) <= hi(i))) {
      std::ostringstream msg;
      msg << "parameter interval " << i << " has lo > hi or NaN: [" << lo(i)
          << ", " << hi(i) << "]";
      throw ConfigError(msg.str());
    }
  }
}

ParamIntervals ParamIntervals::from_flat(const Architecture& arch,
                                         const Eigen::VectorXd& lo,
                                         const Eigen::VectorXd& hi) {
  return ParamIntervals(Params::unflatten(arch, lo), Params::unflatten(arch, hi));
}

IntervalTensor ParamIntervals::W(int k) const {
  return IntervalTensor(lower_.W(k), upper_.W(k));
}

IntervalTensor ParamIntervals::b(int k) const {
  return IntervalTensor(lower_.b(k), upper_.b(k));
}

bool ParamIntervals::contains(const Params& p, double tol) const {
  const Eigen::VectorXd v = p.flatten();
  const Eigen::VectorXd lo = flat_lower();
  const Eigen::VectorXd hi = flat_upper();
  if (v.size() != lo.size()) throw ConfigError("contains: shape mismatch");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) >= lo(i) - tol && v(i) <= hi(i) + tol)) return false;
  }
  return true;
}

bool ParamIntervals::subset_of(const ParamIntervals& outer, double tol) const {
  const Eigen::VectorXd lo = flat_lower(), hi = flat_upper();
  const Eigen::VectorXd olo = outer.flat_lower(), ohi = outer.flat_upper();
  if (lo.size() != olo.size()) throw ConfigError("subset_of: shape mismatch");
  return ((lo.array() >= olo.array() - tol) && (hi.array() <= ohi.array() + tol))
      .all();
}

double ParamIntervals::width_l1() const {
  return (flat_upper() - flat_lower()).sum();
}

ParamIntervals assemble_intervals(const Architecture& arch,
                                  const std::vector<IntervalTensor>& W,
                                  const std::vector<IntervalTensor>& b) {
  Params lo = Params::zeros(arch);
  Params hi = Params::zeros(arch);
  for (int k = 0; k < arch.num_layers(); ++k) {
    lo.W(k) = W[k].lo();
    hi.W(k) = W[k].hi();
    lo.b(k) = b[k].lo();
    hi.b(k) = b[k].hi();
  }
  return ParamIntervals(std::move(lo), std::move(hi));
}

LossKind parse_loss(const std::string& name) {
  if (name == "squared_error" || name == "mse") return LossKind::kSquaredError;
  if (name == "binary_cross_entropy" || name == "bce") {
    return LossKind::kBinaryCrossEntropy;
  }
  if (name == "cross_entropy" || name == "ce") return LossKind::kCrossEntropy;
  if (name == "hinge") return LossKind::kHinge;
  throw ConfigError("unknown loss '" + name + "'");
}

std::string loss_name(LossKind loss) {
  switch (loss) {
    case LossKind::kSquaredError:
      return "squared_error";
    case LossKind::kBinaryCrossEntropy:
      return "binary_cross_entropy";
    case LossKind::kCrossEntropy:
      return "cross_entropy";
    case LossKind::kHinge:
      return "hinge";
  }
  return "unknown";
}

namespace {

bool is_binary_label(double y) { return y == 0.0 || y == 1.0; }

Eigen::VectorXd one_hot(double label, int outputs) {
  const int c = static_cast<int>(label);
  if (static_cast<double>(c) != label || c < 0 || c >= outputs) {
    std::ostringstream msg;
    msg << "label " << label << " is not a class index in [0, " << outputs
        << ")";
    throw DataError(msg.str());
  }
  Eigen::VectorXd t = Eigen::VectorXd::Zero(outputs);
  t(c) = 1.0;
  return t;
}

void require_single_logit(LossKind loss, Eigen::Index outputs) {
  if (outputs != 1) {
    throw ConfigError(loss_name(loss) + " needs exactly one output, got " +
                      std::to_string(outputs));
  }
}

}  // namespace

Eigen::VectorXd encode_target(double label, LossKind loss, int outputs) {
  switch (loss) {
    case LossKind::kBinaryCrossEntropy:
    case LossKind::kHinge: {
      require_single_logit(loss, outputs);
      if (!is_binary_label(label)) {
        std::ostringstream msg;
        msg << loss_name(loss) << " expects labels in {0, 1}, got " << label;
        throw DataError(msg.str());
      }
      Eigen::VectorXd t(1);
      t(0) = loss == LossKind::kHinge ? 2.0 * label - 1.0 : label;
      return t;
    }
    case LossKind::kCrossEntropy:
      if (outputs < 2) throw ConfigError("cross_entropy needs two or more outputs");
      return one_hot(label, outputs);
    case LossKind::kSquaredError:
      if (outputs == 1) {
        Eigen::VectorXd t(1);
        t(0) = label;
        return t;
      }
      return one_hot(label, outputs);
  }
  throw ConfigError("unknown loss");
}

double decision_threshold(LossKind loss) {
  return loss == LossKind::kSquaredError ? 0.5 : 0.0;
}

int predict_class(const Eigen::VectorXd& logits, LossKind loss) {
  if (logits.size() == 1) return logits(0) > decision_threshold(loss) ? 1 : 0;
  int best = 0;
  for (int i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return best;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr_decay >= 0.0)) throw ConfigError("learning-rate decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (clip_kappa && !(*clip_kappa > 0.0)) {
    throw ConfigError("clip bound must be positive");
  }
  if (!(init_scale > 0.0)) throw ConfigError("init scale must be positive");
}

double lr_at(const TrainConfig& cfg, int t) {
  if (t < 0) throw ConfigError("iteration index must be nonnegative");
  return cfg.learning_rate / (1.0 + cfg.lr_decay * t);
}

Params init_params(const Architecture& arch, std::uint64_t seed,
                   double init_scale) {
  Params p = Params::zeros(arch);
  Rng rng(seed);
  for (int k = 0; k < arch.num_layers(); ++k) {
    const double s = init_scale / std::sqrt(static_cast<double>(arch.fan_in(k)));
    for (Eigen::Index i = 0; i < p.W(k).rows(); ++i) {
      for (Eigen::Index j = 0; j < p.W(k).cols(); ++j) {
        p.W(k)(i, j) = rng.uniform(-s, s);
      }
    }
  }
  return p;
}

ForwardTrace forward(const Params& params, const Eigen::VectorXd& x) {
  const Architecture& arch = params.arch();
  if (x.size() != arch.input_dim()) {
    std::ostringstream msg;
    msg << "input has " << x.size() << " features, model expects "
        << arch.input_dim();
    throw ConfigError(msg.str());
  }
  ForwardTrace tr;
  tr.post.push_back(x);
  for (int k = 0; k < arch.num_layers(); ++k) {
    Eigen::VectorXd pre = dense_matmul(params.W(k), tr.post[k]) + params.b(k);
    if (k + 1 < arch.num_layers()) {
      Eigen::VectorXd post(pre.size());
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        post(i) = apply_monotone(MonotoneFn::kRelu, pre(i));
      }
      tr.post.push_back(std::move(post));
    }
    tr.pre.push_back(std::move(pre));
  }
  return tr;
}

Eigen::VectorXd softmax_pairwise(const Eigen::VectorXd& logits) {
  const Eigen::Index n = logits.size();
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) s += std::exp(logits(j) - logits(i));
    }
    p(i) = 1.0 / (1.0 + s);
  }
  return p;
}

namespace {

void check_target(const Eigen::VectorXd& logits, const Eigen::VectorXd& target,
                  LossKind loss) {
  if (logits.size() != target.size()) {
    throw ConfigError("target has " + std::to_string(target.size()) +
                      " entries, logits have " + std::to_string(logits.size()));
  }
  switch (loss) {
    case LossKind::kHinge:
      require_single_logit(loss, logits.size());
      if (std::abs(target(0)) != 1.0) {
        throw DataError("hinge target must be -1 or +1");
      }
      break;
    case LossKind::kBinaryCrossEntropy:
      require_single_logit(loss, logits.size());
      if (!(target(0) >= 0.0 && target(0) <= 1.0)) {
        throw DataError("binary cross-entropy target must lie in [0, 1]");
      }
      break;
    case LossKind::kCrossEntropy:
      if (logits.size() < 2) {
        throw ConfigError("cross_entropy needs two or more outputs");
      }
      break;
    case LossKind::kSquaredError:
      break;
  }
}

}  // namespace

double loss_value(const Eigen::VectorXd& logits, const Eigen::VectorXd& target,
                  LossKind loss) {
  check_target(logits, target, loss);
  switch (loss) {
    case LossKind::kSquaredError:
      return (logits - target).squaredNorm();
    case LossKind::kBinaryCrossEntropy: {
      const double z = logits(0);
      return std::max(z, 0.0) - target(0) * z + std::log1p(std::exp(-std::abs(z)));
    }
    case LossKind::kCrossEntropy: {
      const Eigen::VectorXd p = softmax_pairwise(logits);
      double l = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (target(i) != 0.0) l -= target(i) * std::log(p(i));
      }
      return l;
    }
    case LossKind::kHinge:
      return std::max(0.0, 1.0 - target(0) * logits(0));
  }
  return 0.0;
}

Eigen::VectorXd loss_grad(const Eigen::VectorXd& logits,
                          const Eigen::VectorXd& target, LossKind loss) {
  check_target(logits, target, loss);
  switch (loss) {
    case LossKind::kSquaredError:
      return 2.0 * (logits - target);
    case LossKind::kBinaryCrossEntropy: {
      Eigen::VectorXd g(1);
      g(0) = apply_monotone(MonotoneFn::kSigmoid, logits(0)) - target(0);
      return g;
    }
    case LossKind::kCrossEntropy:
      return softmax_pairwise(logits) - target;
    case LossKind::kHinge: {
      Eigen::VectorXd g(1);
      const double margin = 1.0 - target(0) * logits(0);
      g(0) = margin > 0.0 ? -target(0) : 0.0;
      return g;
    }
  }
  return Eigen::VectorXd();
}

Params backward(const Params& params, const ForwardTrace& trace,
                const Eigen::VectorXd& grad_logits) {
  const Architecture& arch = params.arch();
  Params g = Params::zeros(arch);
  Eigen::VectorXd dpre = grad_logits;
  for (int k = arch.num_layers() - 1; k >= 0; --k) {
    g.W(k) = dense_matmul(dpre, trace.post[k].transpose());
    g.b(k) = dpre;
    if (k > 0) {
      const Eigen::VectorXd dpost =
          dense_matmul(params.W(k).transpose(), dpre);
      Eigen::VectorXd next(dpost.size());
      for (Eigen::Index i = 0; i < dpost.size(); ++i) {
        next(i) = apply_monotone(MonotoneFn::kHeaviside, trace.pre[k - 1](i)) *
                  dpost(i);
      }
      dpre = std::move(next);
    }
  }
  return g;
}

Params sample_gradient(const Params& params, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& target, LossKind loss) {
  const ForwardTrace tr = forward(params, x);
  return backward(params, tr, loss_grad(tr.logits(), target, loss));
}

Params clip_gradient(const Params& grad, double kappa) {
  if (!(kappa >= 0.0)) throw ConfigError("clip bound must be nonnegative");
  Eigen::VectorXd v = grad.flatten();
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::clamp(v(i), -kappa, kappa);
  return Params::unflatten(grad.arch(), v);
}

Params sgd_step(const Params& params, const std::vector<Params>& batch_grads,
                double alpha_t, std::optional<double> clip_kappa) {
  if (batch_grads.empty()) throw ConfigError("sgd_step: empty batch");
  if (!(alpha_t >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  const Eigen::Index n = static_cast<Eigen::Index>(params.arch().param_count());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (const Params& g : batch_grads) {
    if (!(g.arch() == params.arch())) {
      throw ConfigError("sgd_step: gradient shape differs from parameters");
    }
    acc += clip_kappa ? clip_gradient(g, *clip_kappa).flatten() : g.flatten();
  }
  const Eigen::VectorXd delta = acc / static_cast<double>(batch_grads.size());
  const Eigen::VectorXd step = alpha_t * delta;
  return Params::unflatten(params.arch(), params.flatten() - step);
}

std::vector<Params> train_nominal(const Dataset& data, const Architecture& arch,
                                  const TrainConfig& cfg,
                                  const BatchSchedule& schedule,
                                  const std::vector<bool>& removed) {
  arch.validate();
  cfg.validate();
  if (data.dim() != arch.input_dim()) {
    throw ConfigError("dataset dimension does not match model input");
  }
  if (schedule.dataset_size != data.size()) {
    throw ConfigError("schedule was built for a different dataset size");
  }
  if (!removed.empty() && static_cast<int>(removed.size()) != data.size()) {
    throw ConfigError("removal mask size differs from dataset size");
  }
  std::vector<Eigen::VectorXd> targets;
  targets.reserve(data.size());
  for (int i = 0; i < data.size(); ++i) {
    targets.push_back(encode_target(data.labels(i), cfg.loss, arch.output_dim()));
  }
  std::vector<Params> traj;
  traj.push_back(init_params(arch, cfg.seed, cfg.init_scale));
  for (int t = 0; t < schedule.iterations(); ++t) {
    const Params& theta = traj.back();
    std::vector<Params> grads;
    for (int i : schedule.batches[t]) {
      if (!removed.empty() && removed[i]) continue;
      grads.push_back(sample_gradient(theta, data.x(i), targets[i], cfg.loss));
    }
    if (grads.empty()) {
      traj.push_back(theta);
    } else {
      traj.push_back(sgd_step(theta, grads, lr_at(cfg, t), cfg.clip_kappa));
    }
  }
  return traj;
}

}  // namespace certgrad

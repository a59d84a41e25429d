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

#include "certgrad/certify.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "certgrad/error.hpp"
#include "certgrad/parallel.hpp"
#include "certgrad/rng.hpp"

namespace certgrad {
namespace {

Certificate stable_from_bounds(const IntervalTensor& bounds, int predicted,
                               LossKind loss) {
  Certificate c;
  c.logit_bounds = bounds;
  c.predicted = predicted;
  const Eigen::Index n = bounds.rows();
  if (n == 1) {
    const double thr = decision_threshold(loss);
    c.holds = bounds.lo()(0, 0) > thr || bounds.hi()(0, 0) <= thr;
    return c;
  }
  const double lo_t = bounds.lo()(predicted, 0);
  c.holds = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == predicted) continue;
    const double hi_j = bounds.hi()(j, 0);
    const bool ok = j < predicted ? lo_t > hi_j : lo_t >= hi_j;
    if (!ok) {
      c.holds = false;
      break;
    }
  }
  return c;
}

}  // namespace

Certificate certify_stable(const ParamIntervals& pi, const Params& nominal,
                           const Eigen::VectorXd& x, LossKind loss,
                           const BoundOptions& opts) {
  const int pred = predict_class(forward(nominal, x).logits(), loss);
  return stable_from_bounds(output_bounds(pi, IntervalTensor::point(x), opts),
                            pred, loss);
}

Certificate certify_correct(const ParamIntervals& pi, const Params& nominal,
                            const Eigen::VectorXd& x, int label, LossKind loss,
                            const BoundOptions& opts) {
  Certificate c = certify_stable(pi, nominal, x, loss, opts);
  c.kind = CertificateKind::kCorrect;
  c.holds = c.holds && c.predicted == label;
  return c;
}

Certificate certify_backdoor(const ParamIntervals& pi, const Params& nominal,
                             const Eigen::VectorXd& x, int label, double eps_test,
                             LossKind loss, const BoundOptions& opts) {
  if (!(eps_test >= 0.0)) throw ConfigError("test radius must be nonnegative");
  const Eigen::VectorXd e = Eigen::VectorXd::Constant(x.size(), eps_test);
  const int pred = predict_class(forward(nominal, x).logits(), loss);
  Certificate c = stable_from_bounds(
      output_bounds(pi, IntervalTensor(x - e, x + e), opts), pred, loss);
  c.kind = CertificateKind::kBackdoor;
  c.holds = c.holds && pred == label;
  return c;
}

double certified_accuracy(const ParamIntervals& pi, const Params& nominal,
                          const Dataset& data, LossKind loss,
                          const BoundOptions& opts) {
  if (data.size() == 0) throw DataError("certified accuracy on an empty dataset");
  std::vector<char> ok(data.size(), 0);
  parallel_for(static_cast<std::size_t>(data.size()), [&](std::size_t i) {
    const int label = static_cast<int>(data.labels(i));
    ok[i] = certify_correct(pi, nominal, data.x(i), label, loss, opts).holds;
  });
  int count = 0;
  for (char v : ok) count += v;
  return static_cast<double>(count) / data.size();
}

double nominal_accuracy(const Params& nominal, const Dataset& data, LossKind loss) {
  if (data.size() == 0) throw DataError("accuracy on an empty dataset");
  int count = 0;
  for (int i = 0; i < data.size(); ++i) {
    count += predict_class(forward(nominal, data.x(i)).logits(), loss) ==
             static_cast<int>(data.labels(i));
  }
  return static_cast<double>(count) / data.size();
}

Interval loss_bounds(const ParamIntervals& pi, const Dataset& data, LossKind loss,
                     const BoundOptions& opts) {
  if (data.size() == 0) throw DataError("loss bounds on an empty dataset");
  double lo = 0.0, hi = 0.0;
  const int n_out = pi.arch().output_dim();
  for (int i = 0; i < data.size(); ++i) {
    const IntervalTensor yhat = output_bounds(pi, IntervalTensor::point(data.x(i)), opts);
    const Interval l =
        loss_value_interval(yhat, encode_target(data.labels(i), loss, n_out), loss);
    lo += l.lo;
    hi += l.hi;
  }
  return Interval(lo / data.size(), hi / data.size());
}

StabilityLadder build_stability_ladder(const Dataset& data,
                                       const Architecture& arch,
                                       const TrainConfig& cfg,
                                       const BatchSchedule& schedule,
                                       const std::vector<int>& budgets,
                                       const AbstractTrainOptions& opts) {
  if (budgets.empty()) throw ConfigError("stability ladder needs at least one budget");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw ConfigError("ladder budgets must be positive");
    if (i > 0 && budgets[i] <= budgets[i - 1]) {
      throw ConfigError("ladder budgets must be strictly increasing");
    }
  }
  StabilityLadder ladder;
  for (int n : budgets) {
    AbstractTrajectory tr = abstract_train(data, arch, cfg,
                                           SubstitutionPerturbation{n}, schedule, opts);
    ladder.emplace_back(n, std::move(tr.bounds.back()));
  }
  return ladder;
}

int max_stable_n(const StabilityLadder& ladder, const Params& nominal,
                 const Eigen::VectorXd& x, LossKind loss, const BoundOptions& opts) {
  int best = 0;
  for (const auto& [n, pi] : ladder) {
    if (!certify_stable(pi, nominal, x, loss, opts).holds) break;
    best = n;
  }
  return best;
}

double smooth_sensitivity_bound(int n_prime, double beta) {
  if (n_prime < 0) throw ConfigError("stability distance must be nonnegative");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  return std::exp(-beta * n_prime);
}

NoiseMechanism parse_mechanism(const std::string& name) {
  if (name == "laplace") return NoiseMechanism::kLaplace;
  if (name == "cauchy") return NoiseMechanism::kCauchy;
  throw ConfigError("unknown noise mechanism '" + name + "'");
}

double noise_scale(NoiseMechanism mech, double ss, double epsilon, double beta) {
  if (!(epsilon > 0.0)) throw ConfigError("privacy epsilon must be positive");
  if (mech == NoiseMechanism::kLaplace) return 1.0 / epsilon;
  if (!(ss > 0.0)) throw ConfigError("smooth sensitivity must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (beta > epsilon / 6.0) {
    std::ostringstream msg;
    msg << "Cauchy mechanism needs beta <= epsilon / 6 (beta = " << beta
        << ", epsilon = " << epsilon << ")";
    throw ConfigError(msg.str());
  }
  return 6.0 * ss / epsilon;
}

double noise_cdf(NoiseMechanism mech, double scale, double z) {
  if (!(scale > 0.0)) throw ConfigError("noise scale must be positive");
  if (mech == NoiseMechanism::kLaplace) {
    return z < 0.0 ? 0.5 * std::exp(z / scale) : 1.0 - 0.5 * std::exp(-z / scale);
  }
  return 0.5 + std::atan(z / scale) / std::numbers::pi;
}

double noise_quantile(NoiseMechanism mech, double scale, double u) {
  if (!(scale > 0.0)) throw ConfigError("noise scale must be positive");
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("quantile level must be in (0, 1)");
  if (mech == NoiseMechanism::kLaplace) {
    return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
  }
  return scale * std::tan(std::numbers::pi * (u - 0.5));
}

int private_predict(double value, double scale, NoiseMechanism mech,
                    std::uint64_t seed) {
  Rng rng(seed);
  const double z = noise_quantile(mech, scale, rng.uniform());
  return value + z > 0.5 ? 1 : 0;
}

}  // namespace certgrad

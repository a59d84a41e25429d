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

#include "certgrad/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "certgrad/error.hpp"
#include "certgrad/parallel.hpp"

namespace certgrad {
namespace {

constexpr double kHuge = std::numeric_limits<double>::max();

// C(N, n) saturating at kHuge.
double binomial(int N, int n) {
  if (n < 0 || n > N) return 0.0;
  double c = 1.0;
  for (int k = 1; k <= n; ++k) {
    c = c * (N - n + k) / k;
    if (c > kHuge / 2) return kHuge;
  }
  return std::round(c);
}

// Advances a sorted index set of size n to the next one in lexicographic
// order; false when exhausted.
bool next_combination(std::vector<int>& c, int N) {
  const int n = static_cast<int>(c.size());
  int i = n - 1;
  while (i >= 0 && c[i] == N - n + i) --i;
  if (i < 0) return false;
  ++c[i];
  for (int j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
  return true;
}

void check_plan(const EnumerationPlan& plan, int N) {
  if (plan.n < 0) throw ConfigError("enumeration budget must be nonnegative");
  if (plan.n > N) throw ConfigError("enumeration budget exceeds the dataset size");
  if (plan.kind == EnumerationPlan::Kind::kFeatureGrid) {
    if (!(plan.epsilon >= 0.0)) throw ConfigError("grid radius must be nonnegative");
    if (plan.points_per_axis < 2) throw ConfigError("grid needs at least 2 points per axis");
  }
}

}  // namespace

std::size_t enumeration_count(const EnumerationPlan& plan, int N, int dim) {
  check_plan(plan, N);
  double count = 1.0;
  if (plan.n > 0) {
    double per_set = 1.0;
    if (plan.kind == EnumerationPlan::Kind::kFeatureGrid) {
      per_set = std::pow(static_cast<double>(plan.points_per_axis),
                         static_cast<double>(dim) * plan.n);
    }
    count += binomial(N, plan.n) * per_set;
  }
  if (count >= 1.8e19) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(count);
}

std::vector<PerturbedDataset> enumerate_perturbed_datasets(const Dataset& data,
                                                           const EnumerationPlan& plan) {
  const int N = data.size();
  const std::size_t count = enumeration_count(plan, N, data.dim());
  if (count > plan.cap) {
    std::ostringstream msg;
    msg << "enumeration would need " << count << " trainings, cap is " << plan.cap;
    throw ConfigError(msg.str());
  }
  if (plan.kind == EnumerationPlan::Kind::kLabelFlips) {
    for (int i = 0; i < N; ++i) {
      const double y = data.labels(i);
      if (y != 0.0 && y != 1.0) throw DataError("label flips need labels in {0, 1}");
    }
  }

  std::vector<PerturbedDataset> out;
  out.reserve(count);
  out.push_back({data, {}, std::vector<bool>(N, false)});
  if (plan.n == 0) return out;

  std::vector<int> c(plan.n);
  for (int i = 0; i < plan.n; ++i) c[i] = i;
  do {
    switch (plan.kind) {
      case EnumerationPlan::Kind::kLabelFlips: {
        PerturbedDataset p{data, c, std::vector<bool>(N, false)};
        for (int i : c) p.data.labels(i) = 1.0 - p.data.labels(i);
        out.push_back(std::move(p));
        break;
      }
      case EnumerationPlan::Kind::kRemovals: {
        PerturbedDataset p{data, c, std::vector<bool>(N, false)};
        for (int i : c) p.removed[i] = true;
        out.push_back(std::move(p));
        break;
      }
      case EnumerationPlan::Kind::kFeatureGrid: {
        const int d = data.dim();
        const int k = plan.points_per_axis;
        const int slots = d * plan.n;
        std::vector<int> digit(slots, 0);
        while (true) {
          PerturbedDataset p{data, c, std::vector<bool>(N, false)};
          for (int s = 0; s < slots; ++s) {
            const int i = c[s / d], f = s % d;
            const double step = -1.0 + 2.0 * digit[s] / (k - 1);
            p.data.features(i, f) = data.features(i, f) + plan.epsilon * step;
          }
          out.push_back(std::move(p));
          int s = slots - 1;
          while (s >= 0 && digit[s] == k - 1) digit[s--] = 0;
          if (s < 0) break;
          ++digit[s];
        }
        break;
      }
    }
  } while (next_combination(c, N));
  return out;
}

std::vector<Params> empirical_reachable_params(const Dataset& data,
                                               const EnumerationPlan& plan,
                                               const Architecture& arch,
                                               const TrainConfig& cfg,
                                               const BatchSchedule& schedule) {
  const auto sets = enumerate_perturbed_datasets(data, plan);
  std::vector<Params> out(sets.size());
  parallel_for(sets.size(), [&](std::size_t k) {
    out[k] = train_nominal(sets[k].data, arch, cfg, schedule, sets[k].removed).back();
  });
  return out;
}

ContainmentReport check_containment(const std::vector<Params>& params,
                                    const ParamIntervals& theta, double tol) {
  if (!(tol >= 0.0)) throw ConfigError("containment tolerance must be nonnegative");
  const Eigen::VectorXd lo = theta.flat_lower();
  const Eigen::VectorXd hi = theta.flat_upper();
  ContainmentReport r;
  r.total = static_cast<int>(params.size());
  r.empirical_min = Eigen::VectorXd::Constant(lo.size(), kHuge);
  r.empirical_max = Eigen::VectorXd::Constant(lo.size(), -kHuge);
  for (const Params& p : params) {
    if (!(p.arch() == theta.arch())) throw ConfigError("containment: shape mismatch");
    const Eigen::VectorXd v = p.flatten();
    r.empirical_min = r.empirical_min.cwiseMin(v);
    r.empirical_max = r.empirical_max.cwiseMax(v);
    double excess = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      excess = std::max({excess, lo(j) - v(j), v(j) - hi(j)});
    }
    r.worst_excess = std::max(r.worst_excess, excess);
    if (excess <= tol) ++r.contained;
  }
  return r;
}

ParamIntervals brute_force_descent_envelope(const std::vector<Params>& grads,
                                            const PerturbationModel& pm,
                                            std::optional<double> kappa) {
  const int b = static_cast<int>(grads.size());
  if (b == 0) throw ConfigError("envelope of an empty batch");
  if (b > 12) throw ConfigError("brute-force envelope needs at most 12 gradients");
  const Architecture& arch = grads.front().arch();
  std::vector<Eigen::VectorXd> g;
  for (const Params& p : grads) {
    if (!(p.arch() == arch)) throw ConfigError("envelope: gradients differ in shape");
    g.push_back(p.flatten());
  }
  const Eigen::Index d = g.front().size();
  const int n = perturbation_budget(pm);
  const bool removal = std::holds_alternative<RemovalPerturbation>(pm);
  const bool substitution = std::holds_alternative<SubstitutionPerturbation>(pm);
  if (!removal && !substitution) {
    throw ConfigError("brute-force envelope supports removal and substitution");
  }
  if (n < 0) throw ConfigError("budget must be nonnegative");
  if (removal && n >= b) throw ConfigError("removal budget must be smaller than the batch");
  if (substitution) {
    if (!kappa || !(*kappa > 0.0)) throw ConfigError("substitution needs a clip bound");
    if (n > b) throw ConfigError("substitution budget exceeds the batch");
    for (auto& v : g) v = v.cwiseMax(-*kappa).cwiseMin(*kappa);
  }

  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, kHuge);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, -kHuge);
  for (unsigned mask = 0; mask < (1u << b); ++mask) {
    const int touched = std::popcount(mask);
    if (touched > n) continue;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < b; ++i) {
      if (!(mask & (1u << i))) sum += g[i];
    }
    if (removal) {
      const Eigen::VectorXd mean = sum / static_cast<double>(b - touched);
      lo = lo.cwiseMin(mean);
      hi = hi.cwiseMax(mean);
    } else {
      // Replacements sit at the clip bound in the extreme case.
      const double k = touched * *kappa;
      lo = lo.cwiseMin((sum.array() - k).matrix() / static_cast<double>(b));
      hi = hi.cwiseMax((sum.array() + k).matrix() / static_cast<double>(b));
    }
  }
  return ParamIntervals::from_flat(arch, lo, hi);
}

}  // namespace certgrad

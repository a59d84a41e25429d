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

#include "certgrad/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "certgrad/error.hpp"

namespace certgrad {
namespace {

Eigen::VectorXd select_sum(std::size_t count,
                           const std::vector<Eigen::VectorXd>& values,
                           bool largest) {
  if (values.empty()) {
    if (count == 0) throw ConfigError("selection over an empty batch");
    throw ConfigError("selection count exceeds batch size");
  }
  if (count > values.size()) {
    std::ostringstream msg;
    msg << "selection count " << count << " exceeds batch size "
        << values.size();
    throw ConfigError(msg.str());
  }
  const Eigen::Index d = values.front().size();
  for (const auto& v : values) {
    if (v.size() != d) throw ConfigError("selection: tensors differ in shape");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  if (count == 0) return out;
  const std::size_t b = values.size();
  std::vector<std::size_t> idx(b);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (count < b) {
      auto better = [&](std::size_t p, std::size_t q) {
        const double vp = values[p](j), vq = values[q](j);
        if (vp != vq) return largest ? vp > vq : vp < vq;
        return p < q;
      };
      std::nth_element(idx.begin(), idx.begin() + (count - 1), idx.end(), better);
      std::sort(idx.begin(), idx.begin() + count);
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < count; ++s) acc += values[idx[s]](j);
    out(j) = acc;
  }
  return out;
}

void require_nonempty(const GradBoundsBatch& batch) {
  if (batch.empty()) throw ConfigError("aggregation over an empty batch");
}

std::vector<Eigen::VectorXd> lowers(const GradBoundsBatch& batch) {
  std::vector<Eigen::VectorXd> v;
  v.reserve(batch.size());
  for (const auto& s : batch) v.push_back(s.nominal.flat_lower());
  return v;
}

std::vector<Eigen::VectorXd> uppers(const GradBoundsBatch& batch) {
  std::vector<Eigen::VectorXd> v;
  v.reserve(batch.size());
  for (const auto& s : batch) v.push_back(s.nominal.flat_upper());
  return v;
}

}  // namespace

Eigen::VectorXd semax(std::size_t count, const std::vector<Eigen::VectorXd>& values) {
  return select_sum(count, values, true);
}

Eigen::VectorXd semin(std::size_t count, const std::vector<Eigen::VectorXd>& values) {
  return select_sum(count, values, false);
}

ParamIntervals agg_removal(const GradBoundsBatch& batch, int n) {
  require_nonempty(batch);
  const int b = static_cast<int>(batch.size());
  if (n < 0) throw ConfigError("removal budget must be nonnegative");
  if (n >= b) {
    std::ostringstream msg;
    msg << "removal budget " << n << " must be smaller than batch size " << b;
    throw ConfigError(msg.str());
  }
  const std::size_t keep = static_cast<std::size_t>(b - n);
  const double denom = static_cast<double>(b - n);
  const Eigen::VectorXd lo = semin(keep, lowers(batch)) / denom;
  const Eigen::VectorXd hi = semax(keep, uppers(batch)) / denom;
  return ParamIntervals::from_flat(batch.front().nominal.arch(), lo, hi);
}

ParamIntervals agg_substitution(const GradBoundsBatch& batch, int n,
                                double kappa) {
  require_nonempty(batch);
  const int b = static_cast<int>(batch.size());
  if (!(kappa > 0.0)) throw ConfigError("substitution needs a positive clip bound");
  if (n < 0 || n > b) {
    std::ostringstream msg;
    msg << "substitution budget " << n << " outside [0, " << b << "]";
    throw ConfigError(msg.str());
  }
  const auto lo_v = lowers(batch);
  const auto hi_v = uppers(batch);
  for (std::size_t i = 0; i < lo_v.size(); ++i) {
    if (lo_v[i].minCoeff() < -kappa || hi_v[i].maxCoeff() > kappa) {
      throw ConfigError("substitution aggregation got gradient bounds outside "
                        "[-kappa, kappa]; clip them first");
    }
  }
  const std::size_t keep = static_cast<std::size_t>(b - n);
  const double shift = n * kappa;
  const double denom = static_cast<double>(b);
  const Eigen::VectorXd lo =
      (semin(keep, lo_v).array() - shift).matrix() / denom;
  const Eigen::VectorXd hi =
      (semax(keep, hi_v).array() + shift).matrix() / denom;
  return ParamIntervals::from_flat(batch.front().nominal.arch(), lo, hi);
}

ParamIntervals agg_bounded(const GradBoundsBatch& batch, int n) {
  require_nonempty(batch);
  const int b = static_cast<int>(batch.size());
  if (n < 0 || n > b) {
    std::ostringstream msg;
    msg << "perturbation budget " << n << " outside [0, " << b << "]";
    throw ConfigError(msg.str());
  }
  std::vector<Eigen::VectorXd> dlo, dhi;
  dlo.reserve(b);
  dhi.reserve(b);
  for (int i = 0; i < b; ++i) {
    const GradBoundsSample& s = batch[i];
    if (!s.poisoned) {
      throw ConfigError("bounded aggregation needs poisoned bounds for sample " +
                        std::to_string(i));
    }
    if (!s.nominal.subset_of(*s.poisoned)) {
      throw InvariantError("poisoned bounds of sample " + std::to_string(i) +
                           " do not contain its nominal bounds");
    }
    dlo.push_back(s.poisoned->flat_lower() - s.nominal.flat_lower());
    dhi.push_back(s.poisoned->flat_upper() - s.nominal.flat_upper());
  }
  const auto lo_v = lowers(batch);
  const auto hi_v = uppers(batch);
  const double denom = static_cast<double>(b);
  const Eigen::VectorXd lo =
      (semin(static_cast<std::size_t>(b), lo_v) +
       semin(static_cast<std::size_t>(n), dlo)) / denom;
  const Eigen::VectorXd hi =
      (semax(static_cast<std::size_t>(b), hi_v) +
       semax(static_cast<std::size_t>(n), dhi)) / denom;
  return ParamIntervals::from_flat(batch.front().nominal.arch(), lo, hi);
}

GradBoundsSample clip_grad_bounds(const GradBoundsSample& sample, double kappa) {
  if (!(kappa > 0.0)) throw ConfigError("clip bound must be positive");
  auto clip = [kappa](const ParamIntervals& p) {
    const Eigen::VectorXd lo = p.flat_lower().cwiseMax(-kappa).cwiseMin(kappa);
    const Eigen::VectorXd hi = p.flat_upper().cwiseMax(-kappa).cwiseMin(kappa);
    return ParamIntervals::from_flat(p.arch(), lo, hi);
  };
  GradBoundsSample out{clip(sample.nominal), std::nullopt};
  if (sample.poisoned) out.poisoned = clip(*sample.poisoned);
  return out;
}

ParamIntervals apply_update(const ParamIntervals& theta,
                            const ParamIntervals& descent, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (!(theta.arch() == descent.arch())) {
    throw ConfigError("update: descent bounds differ in shape from parameters");
  }
  const Eigen::VectorXd step_lo = alpha * descent.flat_lower();
  const Eigen::VectorXd step_hi = alpha * descent.flat_upper();
  return ParamIntervals::from_flat(theta.arch(), theta.flat_lower() - step_hi,
                                   theta.flat_upper() - step_lo);
}

}  // namespace certgrad

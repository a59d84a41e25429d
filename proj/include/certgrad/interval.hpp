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

#ifndef CERTGRAD_INTERVAL_HPP_
#define CERTGRAD_INTERVAL_HPP_

#include <string>

#include <Eigen/Dense>

namespace certgrad {

// Closed scalar interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo, double hi);
  static Interval point(double x) { return Interval(x, x); }

  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
};

// Elementwise interval matrix with lo <= hi everywhere. Vectors are stored as
// single-column matrices.
class IntervalTensor {
 public:
  IntervalTensor() = default;
  IntervalTensor(Eigen::MatrixXd lo, Eigen::MatrixXd hi);

  static IntervalTensor point(const Eigen::MatrixXd& x);
  static IntervalTensor zeros(Eigen::Index rows, Eigen::Index cols);

  const Eigen::MatrixXd& lo() const { return lo_; }
  const Eigen::MatrixXd& hi() const { return hi_; }
  Eigen::Index rows() const { return lo_.rows(); }
  Eigen::Index cols() const { return lo_.cols(); }
  Eigen::Index size() const { return lo_.size(); }

  Interval at(Eigen::Index i, Eigen::Index j = 0) const {
    return Interval(lo_(i, j), hi_(i, j));
  }
  bool is_degenerate() const { return lo_ == hi_; }
  IntervalTensor transpose() const;

 private:
  Eigen::MatrixXd lo_;
  Eigen::MatrixXd hi_;
};

// Plain product with a fixed row-major accumulation order. The nominal model
// uses this so that degenerate interval products agree bit for bit.
Eigen::MatrixXd dense_matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

enum class MatmulMethod {
  kEndpoint,   // per-term endpoint products, tight for each term
  kMidRadius,  // midpoint-radius form, four real products
};

IntervalTensor iv_add(const IntervalTensor& a, const IntervalTensor& b);
IntervalTensor iv_sub(const IntervalTensor& a, const IntervalTensor& b);
IntervalTensor iv_matmul(const IntervalTensor& a, const IntervalTensor& b,
                         MatmulMethod method = MatmulMethod::kEndpoint);
IntervalTensor iv_elemmul(const IntervalTensor& a, const IntervalTensor& b);
IntervalTensor iv_scale(double alpha, const IntervalTensor& a);

enum class MonotoneFn { kRelu, kHeaviside, kSigmoid, kExp, kClip };

MonotoneFn parse_monotone_fn(const std::string& id);

// Nondecreasing scalar maps applied at the endpoints. kClip clamps to
// [-kappa, kappa].
double apply_monotone(MonotoneFn fn, double x, double kappa = 1.0);
IntervalTensor iv_monotone_map(MonotoneFn fn, const IntervalTensor& a,
                               double kappa = 1.0);

bool iv_contains(const IntervalTensor& a, const Eigen::MatrixXd& x,
                 double tol = 0.0);
bool iv_subset(const IntervalTensor& inner, const IntervalTensor& outer,
               double tol = 0.0);
double iv_width_l1(const IntervalTensor& a);
IntervalTensor iv_hull(const IntervalTensor& a, const IntervalTensor& b);

// Pushes each endpoint one ulp outward.
IntervalTensor iv_widen_ulp(const IntervalTensor& a);

}  // namespace certgrad

#endif  // CERTGRAD_INTERVAL_HPP_

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

#include "certgrad/interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "certgrad/error.hpp"

namespace certgrad {
namespace {

void require_same_shape(const IntervalTensor& a, const IntervalTensor& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
        << b.rows() << "x" << b.cols();
    throw ConfigError(msg.str());
  }
}

inline void product_range(double al, double ah, double bl, double bh,
                          double& lo, double& hi) {
  const double p1 = al * bl;
  const double p2 = al * bh;
  const double p3 = ah * bl;
  const double p4 = ah * bh;
  lo = std::min(std::min(p1, p2), std::min(p3, p4));
  hi = std::max(std::max(p1, p2), std::max(p3, p4));
}

}  // namespace

Interval::Interval(double lo_in, double hi_in) : lo(lo_in), hi(hi_in) {
  if (!(lo <= hi)) {
    std::ostringstream msg;
    msg << "interval with lo > hi or NaN: [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
}

IntervalTensor::IntervalTensor(Eigen::MatrixXd lo, Eigen::MatrixXd hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.rows() != hi_.rows() || lo_.cols() != hi_.cols()) {
    throw ConfigError("interval tensor: lo and hi shapes differ");
  }
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (!(lo_.data()[i] <= hi_.data()[i])) {
      std::ostringstream msg;
      msg << "interval tensor: lo > hi or NaN at flat index " << i << " ["
          << lo_.data()[i] << ", " << hi_.data()[i] << "]";
      throw ConfigError(msg.str());
    }
  }
}

IntervalTensor IntervalTensor::point(const Eigen::MatrixXd& x) {
  return IntervalTensor(x, x);
}

IntervalTensor IntervalTensor::zeros(Eigen::Index rows, Eigen::Index cols) {
  return point(Eigen::MatrixXd::Zero(rows, cols));
}

IntervalTensor IntervalTensor::transpose() const {
  return IntervalTensor(lo_.transpose(), hi_.transpose());
}

Eigen::MatrixXd dense_matmul(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream msg;
    msg << "matmul: inner dimensions differ (" << a.rows() << "x" << a.cols()
        << " * " << b.rows() << "x" << b.cols() << ")";
    throw ConfigError(msg.str());
  }
  Eigen::MatrixXd out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

IntervalTensor iv_add(const IntervalTensor& a, const IntervalTensor& b) {
  require_same_shape(a, b, "iv_add");
  return IntervalTensor(a.lo() + b.lo(), a.hi() + b.hi());
}

IntervalTensor iv_sub(const IntervalTensor& a, const IntervalTensor& b) {
  require_same_shape(a, b, "iv_sub");
  return IntervalTensor(a.lo() - b.hi(), a.hi() - b.lo());
}

IntervalTensor iv_matmul(const IntervalTensor& a, const IntervalTensor& b,
                         MatmulMethod method) {
  if (a.cols() != b.rows()) {
    std::ostringstream msg;
    msg << "iv_matmul: inner dimensions differ (" << a.rows() << "x"
        << a.cols() << " * " << b.rows() << "x" << b.cols() << ")";
    throw ConfigError(msg.str());
  }
  if (method == MatmulMethod::kMidRadius) {
    const Eigen::MatrixXd ma = (a.lo() + a.hi()) / 2.0;
    const Eigen::MatrixXd ra = (a.hi() - a.lo()) / 2.0;
    const Eigen::MatrixXd mb = (b.lo() + b.hi()) / 2.0;
    const Eigen::MatrixXd rb = (b.hi() - b.lo()) / 2.0;
    const Eigen::MatrixXd mid = dense_matmul(ma, mb);
    const Eigen::MatrixXd rad = dense_matmul(ma.cwiseAbs(), rb) +
                                dense_matmul(ra, mb.cwiseAbs()) +
                                dense_matmul(ra, rb);
    return IntervalTensor(mid - rad, mid + rad);
  }
  Eigen::MatrixXd lo(a.rows(), b.cols());
  Eigen::MatrixXd hi(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc_lo = 0.0;
      double acc_hi = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        double pl, ph;
        product_range(a.lo()(i, k), a.hi()(i, k), b.lo()(k, j), b.hi()(k, j),
                      pl, ph);
        acc_lo += pl;
        acc_hi += ph;
      }
      lo(i, j) = acc_lo;
      hi(i, j) = acc_hi;
    }
  }
  return IntervalTensor(std::move(lo), std::move(hi));
}

IntervalTensor iv_elemmul(const IntervalTensor& a, const IntervalTensor& b) {
  require_same_shape(a, b, "iv_elemmul");
  Eigen::MatrixXd lo(a.rows(), a.cols());
  Eigen::MatrixXd hi(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    product_range(a.lo().data()[i], a.hi().data()[i], b.lo().data()[i],
                  b.hi().data()[i], lo.data()[i], hi.data()[i]);
  }
  return IntervalTensor(std::move(lo), std::move(hi));
}

IntervalTensor iv_scale(double alpha, const IntervalTensor& a) {
  if (alpha >= 0.0) return IntervalTensor(alpha * a.lo(), alpha * a.hi());
  return IntervalTensor(alpha * a.hi(), alpha * a.lo());
}

MonotoneFn parse_monotone_fn(const std::string& id) {
  if (id == "relu") return MonotoneFn::kRelu;
  if (id == "heaviside") return MonotoneFn::kHeaviside;
  if (id == "sigmoid") return MonotoneFn::kSigmoid;
  if (id == "exp") return MonotoneFn::kExp;
  if (id == "clip") return MonotoneFn::kClip;
  throw ConfigError("unknown monotone function id '" + id + "'");
}

double apply_monotone(MonotoneFn fn, double x, double kappa) {
  switch (fn) {
    case MonotoneFn::kRelu:
      return x > 0.0 ? x : 0.0;
    case MonotoneFn::kHeaviside:
      return x > 0.0 ? 1.0 : 0.0;
    case MonotoneFn::kSigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case MonotoneFn::kExp:
      return std::exp(x);
    case MonotoneFn::kClip:
      return std::clamp(x, -kappa, kappa);
  }
  return x;
}

IntervalTensor iv_monotone_map(MonotoneFn fn, const IntervalTensor& a,
                               double kappa) {
  if (fn == MonotoneFn::kClip && !(kappa >= 0.0)) {
    throw ConfigError("clip bound must be nonnegative");
  }
  Eigen::MatrixXd lo(a.rows(), a.cols());
  Eigen::MatrixXd hi(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    lo.data()[i] = apply_monotone(fn, a.lo().data()[i], kappa);
    hi.data()[i] = apply_monotone(fn, a.hi().data()[i], kappa);
  }
  return IntervalTensor(std::move(lo), std::move(hi));
}

bool iv_contains(const IntervalTensor& a, const Eigen::MatrixXd& x,
                 double tol) {
  if (a.rows() != x.rows() || a.cols() != x.cols()) {
    throw ConfigError("iv_contains: shape mismatch");
  }
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double v = x.data()[i];
    if (!(v >= a.lo().data()[i] - tol && v <= a.hi().data()[i] + tol)) {
      return false;
    }
  }
  return true;
}

bool iv_subset(const IntervalTensor& inner, const IntervalTensor& outer,
               double tol) {
  require_same_shape(inner, outer, "iv_subset");
  return ((inner.lo().array() >= outer.lo().array() - tol) &&
          (inner.hi().array() <= outer.hi().array() + tol))
      .all();
}

double iv_width_l1(const IntervalTensor& a) { return (a.hi() - a.lo()).sum(); }

IntervalTensor iv_hull(const IntervalTensor& a, const IntervalTensor& b) {
  require_same_shape(a, b, "iv_hull");
  return IntervalTensor(a.lo().cwiseMin(b.lo()), a.hi().cwiseMax(b.hi()));
}

IntervalTensor iv_widen_ulp(const IntervalTensor& a) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd lo = a.lo();
  Eigen::MatrixXd hi = a.hi();
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    lo.data()[i] = std::nextafter(lo.data()[i], -kInf);
    hi.data()[i] = std::nextafter(hi.data()[i], kInf);
  }
  return IntervalTensor(std::move(lo), std::move(hi));
}

}  // namespace certgrad

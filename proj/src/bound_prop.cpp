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

#include "certgrad/bound_prop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "certgrad/error.hpp"

namespace certgrad {
namespace {

IntervalTensor maybe_widen(IntervalTensor t, const BoundOptions& opts) {
  return opts.outward_rounding ? iv_widen_ulp(t) : t;
}

void check_input(const ParamIntervals& pi, const IntervalTensor& x) {
  if (x.cols() != 1 || x.rows() != pi.arch().input_dim()) {
    std::ostringstream msg;
    msg << "input bounds have shape " << x.rows() << "x" << x.cols()
        << ", model expects " << pi.arch().input_dim() << "x1";
    throw ConfigError(msg.str());
  }
}

// Linear relaxation of relu on [l, u]: upper line su * z + tu, lower line
// sl * z.
struct ReluRelax {
  double su, tu, sl;
};

ReluRelax relax_relu(double l, double u) {
  if (l >= 0.0) return {1.0, 0.0, 1.0};
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  const double su = u / (u - l);
  return {su, -u * l / (u - l), std::abs(l) >= std::abs(u) ? 0.0 : 1.0};
}

// Backward substitution for one side. upper selects the bound direction.
void crown_side(const ParamIntervals& pi, const IntervalTensor& x,
                const IntervalTrace& ibp, bool upper,
                std::vector<IntervalTensor>& coeffs,
                std::vector<Eigen::VectorXd>& consts, Eigen::VectorXd& gamma) {
  const int m = pi.arch().num_layers();
  const int n_out = pi.arch().output_dim();
  coeffs.assign(m, IntervalTensor());
  consts.assign(m, Eigen::VectorXd());
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n_out, n_out);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n_out);
  for (int k = m - 1; k >= 0; --k) {
    const IntervalTensor Cp = IntervalTensor::point(C);
    IntervalTensor A = iv_matmul(Cp, pi.W(k));
    const IntervalTensor cb = iv_matmul(Cp, pi.b(k));
    Eigen::VectorXd d = upper ? Eigen::VectorXd(cb.hi()) : Eigen::VectorXd(cb.lo());
    if (k == 0) {
      const IntervalTensor ax = iv_matmul(A, x);
      consts[k] = d;
      total += d;
      gamma = total + (upper ? Eigen::VectorXd(ax.hi()) : Eigen::VectorXd(ax.lo()));
    } else {
      const IntervalTensor& pre = ibp.pre[k - 1];
      Eigen::MatrixXd next(n_out, A.cols());
      for (Eigen::Index i = 0; i < A.cols(); ++i) {
        const ReluRelax r = relax_relu(pre.lo()(i, 0), pre.hi()(i, 0));
        for (Eigen::Index j = 0; j < n_out; ++j) {
          // post >= 0, so the extreme coefficient endpoint is the binding one.
          const double c = upper ? A.hi()(j, i) : A.lo()(j, i);
          const bool use_upper_line = upper ? c >= 0.0 : c < 0.0;
          if (use_upper_line) {
            next(j, i) = c * r.su;
            d(j) += c * r.tu;
          } else {
            next(j, i) = c * r.sl;
          }
        }
      }
      consts[k] = d;
      total += d;
      C = std::move(next);
    }
    coeffs[k] = std::move(A);
  }
}

}  // namespace

ForwardMethod parse_forward_method(const std::string& name) {
  if (name == "ibp") return ForwardMethod::kIbp;
  if (name == "crown") return ForwardMethod::kCrown;
  throw ConfigError("unknown bound method '" + name + "'");
}

IntervalTrace ibp_forward(const ParamIntervals& pi, const IntervalTensor& x,
                          const BoundOptions& opts) {
  check_input(pi, x);
  const int m = pi.arch().num_layers();
  IntervalTrace tr;
  tr.post.push_back(x);
  for (int k = 0; k < m; ++k) {
    IntervalTensor pre = maybe_widen(
        iv_add(iv_matmul(pi.W(k), tr.post[k], opts.matmul), pi.b(k)), opts);
    if (k + 1 < m) tr.post.push_back(iv_monotone_map(MonotoneFn::kRelu, pre));
    tr.pre.push_back(std::move(pre));
  }
  return tr;
}

CrownState crown_forward(const ParamIntervals& pi, const IntervalTensor& x,
                         const IntervalTrace& ibp) {
  check_input(pi, x);
  const int m = pi.arch().num_layers();
  if (static_cast<int>(ibp.pre.size()) != m) {
    throw ConfigError("crown_forward: intermediate bounds missing for " +
                      std::to_string(m - static_cast<int>(ibp.pre.size())) +
                      " layer(s)");
  }
  for (int k = 0; k + 1 < m; ++k) {
    if (ibp.pre[k].rows() != pi.arch().fan_out(k) || ibp.pre[k].cols() != 1) {
      throw ConfigError("crown_forward: intermediate bounds have wrong shape");
    }
  }
  CrownState st;
  crown_side(pi, x, ibp, true, st.lambda, st.delta, st.gamma_hi);
  crown_side(pi, x, ibp, false, st.omega, st.theta, st.gamma_lo);
  // Rounding can leave a degenerate bound a few ulps inverted.
  for (Eigen::Index j = 0; j < st.gamma_lo.size(); ++j) {
    if (st.gamma_lo(j) > st.gamma_hi(j)) std::swap(st.gamma_lo(j), st.gamma_hi(j));
  }
  return st;
}

IntervalTensor loss_grad_interval(const IntervalTensor& yhat,
                                  const IntervalTensor& y, LossKind loss) {
  if (yhat.rows() != y.rows() || yhat.cols() != 1 || y.cols() != 1) {
    throw ConfigError("loss_grad_interval: target and logit shapes differ");
  }
  switch (loss) {
    case LossKind::kSquaredError:
      return iv_scale(2.0, iv_sub(yhat, y));
    case LossKind::kBinaryCrossEntropy:
      if (yhat.rows() != 1) throw ConfigError("binary_cross_entropy needs one output");
      return iv_sub(iv_monotone_map(MonotoneFn::kSigmoid, yhat), y);
    case LossKind::kCrossEntropy: {
      const Eigen::Index n = yhat.rows();
      if (n < 2) throw ConfigError("cross_entropy needs two or more outputs");
      Eigen::VectorXd plo(n), phi(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double s_lo = 0.0, s_hi = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          s_lo += std::exp(yhat.hi()(j, 0) - yhat.lo()(i, 0));
          s_hi += std::exp(yhat.lo()(j, 0) - yhat.hi()(i, 0));
        }
        plo(i) = 1.0 / (1.0 + s_lo);
        phi(i) = 1.0 / (1.0 + s_hi);
      }
      return iv_sub(IntervalTensor(plo, phi), y);
    }
    case LossKind::kHinge: {
      if (yhat.rows() != 1) throw ConfigError("hinge needs one output");
      const IntervalTensor margin =
          iv_sub(IntervalTensor::point(Eigen::MatrixXd::Ones(1, 1)),
                 iv_elemmul(y, yhat));
      const IntervalTensor neg_y = iv_scale(-1.0, y);
      if (margin.hi()(0, 0) <= 0.0) return IntervalTensor::zeros(1, 1);
      if (margin.lo()(0, 0) > 0.0) return neg_y;
      return iv_hull(neg_y, IntervalTensor::zeros(1, 1));
    }
  }
  throw ConfigError("unknown loss");
}

namespace {

Interval square_range(double l, double u) {
  if (l >= 0.0) return Interval(l * l, u * u);
  if (u <= 0.0) return Interval(u * u, l * l);
  return Interval(0.0, std::max(l * l, u * u));
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

Interval loss_value_interval(const IntervalTensor& yhat,
                             const Eigen::VectorXd& target, LossKind loss) {
  if (yhat.rows() != target.size() || yhat.cols() != 1) {
    throw ConfigError("loss_value_interval: target and logit shapes differ");
  }
  switch (loss) {
    case LossKind::kSquaredError: {
      double lo = 0.0, hi = 0.0;
      for (Eigen::Index i = 0; i < target.size(); ++i) {
        const Interval s = square_range(yhat.lo()(i, 0) - target(i),
                                        yhat.hi()(i, 0) - target(i));
        lo += s.lo;
        hi += s.hi;
      }
      return Interval(lo, hi);
    }
    case LossKind::kBinaryCrossEntropy: {
      const double y = target(0);
      const double l = yhat.lo()(0, 0), u = yhat.hi()(0, 0);
      auto f = [y](double z) { return softplus(z) - y * z; };
      const double fl = f(l), fu = f(u);
      double lo = std::min(fl, fu);
      if (y > 0.0 && y < 1.0) {
        const double zstar = std::log(y / (1.0 - y));
        if (zstar > l && zstar < u) lo = std::min(lo, f(zstar));
      }
      return Interval(lo, std::max(fl, fu));
    }
    case LossKind::kCrossEntropy: {
      const IntervalTensor p = loss_grad_interval(
          yhat, IntervalTensor::zeros(yhat.rows(), 1), LossKind::kCrossEntropy);
      double lo = 0.0, hi = 0.0;
      for (Eigen::Index i = 0; i < target.size(); ++i) {
        if (target(i) == 0.0) continue;
        lo += target(i) * -std::log(p.hi()(i, 0));
        hi += target(i) * -std::log(p.lo()(i, 0));
      }
      return Interval(lo, hi);
    }
    case LossKind::kHinge: {
      const double t = target(0);
      const double a = std::max(0.0, 1.0 - t * yhat.lo()(0, 0));
      const double b = std::max(0.0, 1.0 - t * yhat.hi()(0, 0));
      return Interval(std::min(a, b), std::max(a, b));
    }
  }
  throw ConfigError("unknown loss");
}

BackwardTrace ibp_backward_trace(const IntervalTrace& trace,
                                 const ParamIntervals& pi,
                                 const IntervalTensor& dL,
                                 const BoundOptions& opts) {
  const int m = pi.arch().num_layers();
  if (static_cast<int>(trace.pre.size()) != m ||
      static_cast<int>(trace.post.size()) != m) {
    throw ConfigError("ibp_backward: forward trace does not match architecture");
  }
  if (dL.rows() != pi.arch().output_dim() || dL.cols() != 1) {
    throw ConfigError("ibp_backward: loss gradient has wrong shape");
  }
  BackwardTrace bt;
  bt.dpre.assign(m, IntervalTensor());
  bt.dpost.assign(m, IntervalTensor());
  std::vector<IntervalTensor> gW(m), gb(m);
  bt.dpre[m - 1] = dL;
  for (int k = m - 1; k >= 0; --k) {
    gW[k] = maybe_widen(
        iv_matmul(bt.dpre[k], trace.post[k].transpose(), opts.matmul), opts);
    gb[k] = bt.dpre[k];
    if (k > 0) {
      bt.dpost[k] = maybe_widen(
          iv_matmul(pi.W(k).transpose(), bt.dpre[k], opts.matmul), opts);
      bt.dpre[k - 1] = maybe_widen(
          iv_elemmul(iv_monotone_map(MonotoneFn::kHeaviside, trace.pre[k - 1]),
                     bt.dpost[k]),
          opts);
    }
  }
  bt.grads = assemble_intervals(pi.arch(), gW, gb);
  return bt;
}

ParamIntervals ibp_backward(const IntervalTrace& trace, const ParamIntervals& pi,
                            const IntervalTensor& dL, const BoundOptions& opts) {
  return ibp_backward_trace(trace, pi, dL, opts).grads;
}

namespace {

// Intersection of two enclosures of the same logits. Falls back to `ibp` if
// rounding leaves the intersection empty, so degenerate inputs keep the
// nominal forward values.
IntervalTensor intersect_or_keep(const IntervalTensor& ibp, const IntervalTensor& crown) {
  const Eigen::MatrixXd lo = ibp.lo().cwiseMax(crown.lo());
  const Eigen::MatrixXd hi = ibp.hi().cwiseMin(crown.hi());
  if ((lo.array() > hi.array()).any()) return ibp;
  return IntervalTensor(lo, hi);
}

}  // namespace

IntervalTensor output_bounds(const ParamIntervals& pi, const IntervalTensor& x,
                             const BoundOptions& opts) {
  IntervalTrace tr = ibp_forward(pi, x, opts);
  if (opts.method == ForwardMethod::kCrown) {
    return intersect_or_keep(tr.logits(), crown_forward(pi, x, tr).bounds());
  }
  return tr.logits();
}

ParamIntervals per_sample_grad_bounds(const ParamIntervals& pi,
                                      const IntervalTensor& x,
                                      const IntervalTensor& y, LossKind loss,
                                      const BoundOptions& opts) {
  IntervalTrace tr = ibp_forward(pi, x, opts);
  if (opts.method == ForwardMethod::kCrown) {
    tr.pre.back() = intersect_or_keep(tr.logits(), crown_forward(pi, x, tr).bounds());
  }
  return ibp_backward(tr, pi, loss_grad_interval(tr.logits(), y, loss), opts);
}

}  // namespace certgrad

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

// Test helpers: seeded random instances and reference computations written
// independently of the library code they check.

#ifndef CERTGRAD_TESTS_SUPPORT_HPP_
#define CERTGRAD_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "certgrad/dataset.hpp"
#include "certgrad/interval.hpp"
#include "certgrad/model.hpp"

namespace certgrad::testing {

class Gen {
 public:
  explicit Gen(unsigned seed) : eng_(seed) {}

  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  Eigen::MatrixXd matrix(int r, int c, double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) m(i, j) = real(lo, hi);
    }
    return m;
  }

  Eigen::VectorXd vector(int n, double lo = -1.0, double hi = 1.0) {
    return matrix(n, 1, lo, hi).col(0);
  }

  IntervalTensor interval(int r, int c, double spread = 1.0, double width = 0.3) {
    const Eigen::MatrixXd mid = matrix(r, c, -spread, spread);
    const Eigen::MatrixXd rad = matrix(r, c, 0.0, width);
    return IntervalTensor(mid - rad, mid + rad);
  }

  // A point inside every interval entry, endpoints included sometimes.
  Eigen::MatrixXd member(const IntervalTensor& t) {
    Eigen::MatrixXd m(t.rows(), t.cols());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        const int pick = integer(0, 9);
        const double lo = t.lo()(i, j), hi = t.hi()(i, j);
        m(i, j) = pick == 0 ? lo : pick == 1 ? hi : real(lo, hi);
      }
    }
    return m;
  }

  Architecture arch(int max_layers, int max_width, int in, int out) {
    Architecture a;
    a.layer_sizes.push_back(in);
    const int hidden = integer(0, max_layers - 1);
    for (int h = 0; h < hidden; ++h) a.layer_sizes.push_back(integer(1, max_width));
    a.layer_sizes.push_back(out);
    return a;
  }

  Params params(const Architecture& a, double scale = 1.0) {
    return Params::unflatten(a, vector(static_cast<int>(a.param_count()), -scale, scale));
  }

  ParamIntervals param_box(const Params& centre, double width) {
    const Eigen::VectorXd c = centre.flatten();
    const Eigen::VectorXd r = vector(static_cast<int>(c.size()), 0.0, width);
    return ParamIntervals::from_flat(centre.arch(), c - r, c + r);
  }

  Params member(const ParamIntervals& pi) {
    const Eigen::VectorXd lo = pi.flat_lower(), hi = pi.flat_upper();
    Eigen::VectorXd v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const int pick = integer(0, 9);
      v(i) = pick == 0 ? lo(i) : pick == 1 ? hi(i) : real(lo(i), hi(i));
    }
    return Params::unflatten(pi.arch(), v);
  }

  Dataset binary_dataset(int n, int d) {
    Dataset ds;
    ds.features = matrix(n, d);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) ds.labels(i) = integer(0, 1);
    ds.num_classes = 2;
    return ds;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Forward pass written out with explicit loops.
inline Eigen::VectorXd ref_forward(const Params& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  const int m = p.arch().num_layers();
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd z(p.W(k).rows());
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      double s = p.b(k)(r);
      for (Eigen::Index c = 0; c < h.size(); ++c) s += p.W(k)(r, c) * h(c);
      z(r) = s;
    }
    if (k + 1 < m) {
      for (Eigen::Index r = 0; r < z.size(); ++r) z(r) = std::max(z(r), 0.0);
    }
    h = z;
  }
  return h;
}

// Loss by its textbook formula.
inline double ref_loss(const Eigen::VectorXd& z, const Eigen::VectorXd& y, LossKind loss) {
  switch (loss) {
    case LossKind::kSquaredError:
      return (z - y).squaredNorm();
    case LossKind::kBinaryCrossEntropy: {
      const double s = 1.0 / (1.0 + std::exp(-z(0)));
      return -(y(0) * std::log(s) + (1.0 - y(0)) * std::log(1.0 - s));
    }
    case LossKind::kCrossEntropy: {
      const double mx = z.maxCoeff();
      const double lse = mx + std::log((z.array() - mx).exp().sum());
      return -(y.array() * (z.array() - lse)).sum();
    }
    case LossKind::kHinge:
      return std::max(0.0, 1.0 - y(0) * z(0));
  }
  return 0.0;
}

// Central differences of ref_loss(ref_forward(.)) in every parameter.
inline Eigen::VectorXd ref_numeric_grad(const Params& p, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& y, LossKind loss,
                                        double h = 1e-6) {
  const Eigen::VectorXd v = p.flatten();
  Eigen::VectorXd g(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    Eigen::VectorXd a = v, b = v;
    a(i) += h;
    b(i) -= h;
    const double fa = ref_loss(ref_forward(Params::unflatten(p.arch(), a), x), y, loss);
    const double fb = ref_loss(ref_forward(Params::unflatten(p.arch(), b), x), y, loss);
    g(i) = (fa - fb) / (2 * h);
  }
  return g;
}

// Loss derivative in the logits by its textbook formula.
inline Eigen::VectorXd ref_loss_grad(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                                     LossKind loss) {
  Eigen::VectorXd g(z.size());
  switch (loss) {
    case LossKind::kSquaredError:
      for (Eigen::Index j = 0; j < z.size(); ++j) g(j) = 2.0 * (z(j) - y(j));
      break;
    case LossKind::kBinaryCrossEntropy:
      g(0) = 1.0 / (1.0 + std::exp(-z(0))) - y(0);
      break;
    case LossKind::kCrossEntropy: {
      const double mx = z.maxCoeff();
      double total = 0.0;
      for (Eigen::Index j = 0; j < z.size(); ++j) total += std::exp(z(j) - mx);
      for (Eigen::Index j = 0; j < z.size(); ++j) g(j) = std::exp(z(j) - mx) / total - y(j);
      break;
    }
    case LossKind::kHinge:
      g(0) = 1.0 - y(0) * z(0) > 0.0 ? -y(0) : 0.0;
      break;
  }
  return g;
}

// Backpropagation with explicit loops, flattened in Params order.
inline Params ref_gradient(const Params& p, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, LossKind loss) {
  const int m = p.arch().num_layers();
  std::vector<Eigen::VectorXd> post{x}, pre;
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd z(p.W(k).rows());
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      double s = p.b(k)(r);
      for (Eigen::Index c = 0; c < post[k].size(); ++c) s += p.W(k)(r, c) * post[k](c);
      z(r) = s;
    }
    pre.push_back(z);
    Eigen::VectorXd h = z;
    if (k + 1 < m) {
      for (Eigen::Index r = 0; r < h.size(); ++r) h(r) = std::max(h(r), 0.0);
    }
    post.push_back(h);
  }
  Params g = Params::zeros(p.arch());
  Eigen::VectorXd d = ref_loss_grad(pre.back(), y, loss);
  for (int k = m - 1; k >= 0; --k) {
    for (Eigen::Index r = 0; r < d.size(); ++r) {
      g.b(k)(r) = d(r);
      for (Eigen::Index c = 0; c < post[k].size(); ++c) g.W(k)(r, c) = d(r) * post[k](c);
    }
    if (k == 0) break;
    Eigen::VectorXd up(post[k].size());
    for (Eigen::Index c = 0; c < up.size(); ++c) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < d.size(); ++r) s += p.W(k)(r, c) * d(r);
      up(c) = pre[k - 1](c) > 0.0 ? s : 0.0;
    }
    d = up;
  }
  return g;
}

inline bool inside(double v, double lo, double hi, double tol) {
  return v >= lo - tol && v <= hi + tol;
}

}  // namespace certgrad::testing

#endif  // CERTGRAD_TESTS_SUPPORT_HPP_

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

#include <cmath>

#include <gtest/gtest.h>

#include "certgrad/error.hpp"
#include "certgrad/parallel.hpp"
#include "certgrad/schedule.hpp"
#include "support.hpp"

namespace certgrad {
namespace {

using testing::Gen;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Architecture, Validation) {
  EXPECT_THROW(Architecture{{3}}.validate(), ConfigError);
  EXPECT_THROW((Architecture{{3, 0, 1}}.validate()), ConfigError);
  const Architecture a{{3, 4, 2}};
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.param_count(), 3u * 4 + 4 + 4 * 2 + 2);
}

TEST(Params, FlattenRoundTrip) {
  Gen g(1);
  const Architecture a{{3, 4, 2}};
  const Eigen::VectorXd v = g.vector(static_cast<int>(a.param_count()));
  const Params p = Params::unflatten(a, v);
  EXPECT_EQ(p.flatten(), v);
  // W row-major, then b.
  EXPECT_EQ(p.W(0)(0, 1), v(1));
  EXPECT_EQ(p.W(0)(1, 0), v(3));
  EXPECT_EQ(p.b(0)(0), v(12));
  EXPECT_THROW(Params::unflatten(a, v.head(5)), ConfigError);
}

TEST(InitParams, DeterministicAndScaled) {
  const Architecture a{{4, 3, 1}};
  EXPECT_EQ(init_params(a, 7, 1.0), init_params(a, 7, 1.0));
  EXPECT_FALSE(init_params(a, 7, 1.0) == init_params(a, 8, 1.0));
  const Params z = init_params(a, 7, 0.0);
  EXPECT_EQ(z.flatten().cwiseAbs().maxCoeff(), 0.0);
  const Params p = init_params(a, 3, 2.0);
  EXPECT_LE(p.W(0).cwiseAbs().maxCoeff(), 2.0 / std::sqrt(4.0));
  EXPECT_LE(p.W(1).cwiseAbs().maxCoeff(), 2.0 / std::sqrt(3.0));
  EXPECT_EQ(p.b(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, Examples) {
  const Architecture a{{2, 3, 1}};
  EXPECT_EQ(forward(Params::zeros(a), vec({1, 2})).logits()(0), 0.0);
  Params id = Params::zeros(Architecture{{2, 2}});
  id.W(0) = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_EQ(forward(id, vec({3, -4})).logits(), vec({3, -4}));
  EXPECT_THROW(forward(id, vec({1, 2, 3})), ConfigError);
}

TEST(Forward, MatchesStraightLineEvaluation) {
  Gen g(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Architecture a = g.arch(4, 6, 3, 2);
    const Params p = g.params(a);
    const Eigen::VectorXd x = g.vector(3);
    const Eigen::VectorXd ref = testing::ref_forward(p, x);
    const Eigen::VectorXd got = forward(p, x).logits();
    for (Eigen::Index i = 0; i < ref.size(); ++i) EXPECT_NEAR(got(i), ref(i), 1e-12);
  }
}

TEST(LossGrad, Examples) {
  EXPECT_EQ(loss_grad(vec({1}), vec({0}), LossKind::kSquaredError)(0), 2.0);
  const Eigen::VectorXd ce = loss_grad(vec({0, 0}), vec({1, 0}), LossKind::kCrossEntropy);
  EXPECT_EQ(ce(0), -0.5);
  EXPECT_EQ(ce(1), 0.5);
  EXPECT_EQ(loss_grad(vec({2}), vec({1}), LossKind::kHinge)(0), 0.0);
  // Kink: 1 - y yhat = 0.
  EXPECT_EQ(loss_grad(vec({1}), vec({1}), LossKind::kHinge)(0), 0.0);
  EXPECT_EQ(loss_grad(vec({0.5}), vec({-1}), LossKind::kHinge)(0), 1.0);
}

TEST(EncodeTarget, Conventions) {
  EXPECT_EQ(encode_target(1, LossKind::kHinge, 1)(0), 1.0);
  EXPECT_EQ(encode_target(0, LossKind::kHinge, 1)(0), -1.0);
  EXPECT_EQ(encode_target(0, LossKind::kBinaryCrossEntropy, 1)(0), 0.0);
  EXPECT_EQ(encode_target(2, LossKind::kCrossEntropy, 3), vec({0, 0, 1}));
  EXPECT_EQ(encode_target(0.25, LossKind::kSquaredError, 1)(0), 0.25);
  EXPECT_THROW(encode_target(0.5, LossKind::kHinge, 1), DataError);
  EXPECT_THROW(encode_target(1, LossKind::kCrossEntropy, 1), ConfigError);
  EXPECT_THROW(encode_target(1, LossKind::kHinge, 2), ConfigError);
}

TEST(LossValue, MatchesReference) {
  Gen g(3);
  for (LossKind loss : {LossKind::kSquaredError, LossKind::kBinaryCrossEntropy,
                        LossKind::kCrossEntropy, LossKind::kHinge}) {
    const int out = loss == LossKind::kCrossEntropy ? 3 : 1;
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd z = g.vector(out, -3, 3);
      const Eigen::VectorXd y = encode_target(g.integer(0, out == 1 ? 1 : out - 1), loss, out);
      EXPECT_NEAR(loss_value(z, y, loss), testing::ref_loss(z, y, loss), 1e-12);
    }
  }
}

TEST(Backward, Examples) {
  Gen g(4);
  const Architecture a{{3, 4, 1}};
  const Params p = g.params(a);
  const Eigen::VectorXd x = g.vector(3);
  const Params zero = backward(p, forward(p, x), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(zero.flatten().cwiseAbs().maxCoeff(), 0.0);

  const Architecture lin{{3, 1}};
  const Params q = g.params(lin);
  const double yhat = forward(q, x).logits()(0);
  const Params gq = sample_gradient(q, x, vec({0.3}), LossKind::kSquaredError);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(gq.W(0)(0, c), 2 * (yhat - 0.3) * x(c), 1e-14);
  EXPECT_NEAR(gq.b(0)(0), 2 * (yhat - 0.3), 1e-14);
}

// Central differences at 100 random points per loss, away from kinks.
TEST(Backward, FiniteDifferences) {
  Gen g(5);
  for (LossKind loss : {LossKind::kSquaredError, LossKind::kBinaryCrossEntropy,
                        LossKind::kCrossEntropy, LossKind::kHinge}) {
    const int out = loss == LossKind::kCrossEntropy ? 3 : 1;
    int checked = 0;
    while (checked < 100) {
      const Architecture a{{3, 5, out}};
      const Params p = g.params(a);
      const Eigen::VectorXd x = g.vector(3);
      const Eigen::VectorXd y = encode_target(g.integer(0, out == 1 ? 1 : 2), loss, out);
      const ForwardTrace tr = forward(p, x);
      bool near_kink = false;
      for (Eigen::Index j = 0; j < tr.pre[0].size(); ++j) {
        if (std::abs(tr.pre[0](j)) < 1e-3) near_kink = true;
      }
      if (loss == LossKind::kHinge && std::abs(1 - y(0) * tr.logits()(0)) < 1e-3) near_kink = true;
      if (near_kink) continue;
      const Eigen::VectorXd got = sample_gradient(p, x, y, loss).flatten();
      const Eigen::VectorXd ref = testing::ref_numeric_grad(p, x, y, loss);
      for (Eigen::Index i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got(i), ref(i), 1e-5 * std::max(1.0, std::abs(ref(i))))
            << loss_name(loss) << " param " << i;
      }
      ++checked;
    }
  }
}

TEST(SgdStep, Examples) {
  const Architecture a{{3, 1}};
  Gen g(6);
  const Params p = g.params(a);
  const Params gr = g.params(a);
  EXPECT_EQ(sgd_step(p, {gr}, 1.0, std::nullopt).flatten(), p.flatten() - gr.flatten());
  EXPECT_EQ(sgd_step(p, {gr}, 1.0, 0.0), p);
  EXPECT_THROW(sgd_step(p, {}, 1.0, std::nullopt), ConfigError);

  Params c = Params::zeros(a);
  c.W(0) << -3, 0.5, 2;
  const Params clipped = clip_gradient(c, 1.0);
  EXPECT_EQ(clipped.W(0), (Eigen::MatrixXd(1, 3) << -1, 0.5, 1).finished());
}

TEST(SgdStep, ClippedUpdateBounded) {
  Gen g(7);
  const Architecture a{{2, 3, 1}};
  for (int trial = 0; trial < 100; ++trial) {
    const Params p = g.params(a);
    std::vector<Params> grads;
    for (int i = 0; i < 5; ++i) grads.push_back(g.params(a, 10.0));
    const double alpha = g.real(0.01, 2.0), kappa = g.real(0.1, 3.0);
    const Params q = sgd_step(p, grads, alpha, kappa);
    EXPECT_LE((q.flatten() - p.flatten()).cwiseAbs().maxCoeff(), alpha * kappa * (1 + 1e-12));
  }
}

TEST(LearningRate, Schedule) {
  TrainConfig cfg;
  cfg.learning_rate = 2.0;
  EXPECT_EQ(lr_at(cfg, 0), 2.0);
  EXPECT_EQ(lr_at(cfg, 9), 2.0);
  cfg.lr_decay = 0.5;
  EXPECT_EQ(lr_at(cfg, 2), 1.0);
}

TEST(Schedule, DropsLastShortBatch) {
  const BatchSchedule s = make_schedule(10, 3, 2, 1);
  EXPECT_EQ(s.iterations(), 6);
  for (const auto& b : s.batches) EXPECT_EQ(b.size(), 3u);
  // Same order every epoch.
  for (int t = 0; t < 3; ++t) EXPECT_EQ(s.batches[t], s.batches[t + 3]);
  EXPECT_EQ(make_schedule(10, 3, 2, 1).batches, s.batches);
  EXPECT_THROW(make_schedule(2, 3, 1, 0), ConfigError);
}

TEST(TrainNominal, DeterministicAndShaped) {
  Gen g(8);
  const Dataset d = g.binary_dataset(20, 3);
  const Architecture a{{3, 4, 1}};
  TrainConfig cfg;
  cfg.batch_size = 5;
  cfg.epochs = 2;
  cfg.loss = LossKind::kBinaryCrossEntropy;
  const BatchSchedule s = make_schedule(20, 5, 2, 3);
  const auto t1 = train_nominal(d, a, cfg, s);
  ASSERT_EQ(t1.size(), 9u);
  EXPECT_EQ(t1.front(), init_params(a, cfg.seed, cfg.init_scale));
  const auto t2 = train_nominal(d, a, cfg, s);
  for (std::size_t t = 0; t < t1.size(); ++t) EXPECT_EQ(t1[t], t2[t]);
  BatchSchedule empty;
  empty.dataset_size = 20;
  EXPECT_EQ(train_nominal(d, a, cfg, empty).size(), 1u);
}

TEST(TrainNominal, IndependentOfThreadCount) {
  Gen g(9);
  const Dataset d = g.binary_dataset(32, 2);
  const Architecture a{{2, 6, 1}};
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 3;
  const BatchSchedule s = make_schedule(32, 8, 3, 1);
  setenv("CERTGRAD_THREADS", "1", 1);
  const auto t1 = train_nominal(d, a, cfg, s);
  setenv("CERTGRAD_THREADS", "4", 1);
  const auto t4 = train_nominal(d, a, cfg, s);
  unsetenv("CERTGRAD_THREADS");
  EXPECT_EQ(t1.back(), t4.back());
}

TEST(TrainNominal, RemovalMaskShrinksBatch) {
  Gen g(10);
  const Dataset d = g.binary_dataset(4, 2);
  const Architecture a{{2, 1}};
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.5;
  cfg.loss = LossKind::kSquaredError;
  const BatchSchedule s = schedule_from_permutation({0, 1, 2, 3}, 4, 1);
  const std::vector<bool> removed{false, true, false, false};
  const Params p0 = init_params(a, cfg.seed, cfg.init_scale);
  std::vector<Params> grads;
  for (int i : {0, 2, 3}) {
    grads.push_back(sample_gradient(p0, d.x(i), encode_target(d.labels(i), cfg.loss, 1),
                                    cfg.loss));
  }
  EXPECT_EQ(train_nominal(d, a, cfg, s, removed).back(), sgd_step(p0, grads, 0.5, std::nullopt));
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.clip_kappa = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_loss("mse"), LossKind::kSquaredError);
  EXPECT_THROW(parse_loss("l1"), ConfigError);
}

}  // namespace
}  // namespace certgrad

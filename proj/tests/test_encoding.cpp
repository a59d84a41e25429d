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

#include "certgrad/encoding.hpp"

#include <set>

#include <gtest/gtest.h>

#include "certgrad/error.hpp"
#include "certgrad/oracle.hpp"
#include "support.hpp"

namespace certgrad {
namespace {

using testing::Gen;

struct Counts {
  int variables = 0;
  int constraints = 0;
  int binaries = 0;
  int quadratic = 0;
};

struct Flags {
  bool hinge = false;
  bool x_vars = false;
  bool y_vars = false;
  bool label_flip = false;
  bool removal = false;
  bool binary_labels = false;  // substitution on a classification dataset
};

// Size of the exact encoding, counted from the layer widths and the batches.
Counts expected_counts(const Architecture& arch, const BatchSchedule& sch, Window w,
                       int N, Flags f) {
  const auto& L = arch.layer_sizes;
  const int m = arch.num_layers();
  const int d = L[0];
  int P = 0, Wc = 0, H = 0;
  for (int k = 0; k < m; ++k) {
    Wc += L[k + 1] * L[k];
    P += L[k + 1] * L[k] + L[k + 1];
    if (k + 1 < m) H += L[k + 1];
  }
  const int W0 = L[1] * L[0];
  const int later_neurons = H + 1 - L[1];
  const int T = w.t_end - w.t_start;
  std::set<int> used;
  int samples = 0;
  for (int t = w.t_start; t < w.t_end; ++t) {
    used.insert(sch.batches[t].begin(), sch.batches[t].end());
    samples += static_cast<int>(sch.batches[t].size());
  }
  const int U = static_cast<int>(used.size());
  const int hg = f.hinge ? 1 : 0;

  const int per_vars = 5 * H + 2 + Wc + 3 * hg;
  const int per_rows = 6 * H + 2 + Wc + 4 * hg;
  const int per_bin = H + hg;
  const int per_quad = later_neurons + (f.x_vars ? L[1] : 0) + (Wc - W0) +
                       (f.x_vars ? W0 : 0) + 2 * H + (f.hinge && f.y_vars ? 2 : 0);

  Counts c;
  c.variables = (T + 1) * P + N + (f.x_vars ? U * d : 0) + (f.y_vars ? U : 0) +
                samples * per_vars;
  const int data_rows =
      (f.x_vars ? 2 * U * d : 0) + (f.y_vars ? (f.label_flip ? U : 2 * U) : 0);
  c.constraints = 1 + data_rows + samples * per_rows + T * P;
  c.binaries = N + (f.binary_labels ? U : 0) + samples * per_bin;
  c.quadratic = samples * per_quad + (f.removal ? T * P : 0);
  return c;
}

Counts actual_counts(const ConstraintSystem& cs) {
  return {cs.num_variables(), cs.num_constraints(), cs.num_binaries(), cs.num_quadratic()};
}

struct Case {
  Dataset data;
  Architecture arch;
  TrainConfig cfg;
  BatchSchedule schedule;
  ParamIntervals seed;
};

Case make_case(const Architecture& arch, LossKind loss, int N, int b, int epochs,
               unsigned seed) {
  Gen g(seed);
  Case c;
  c.data = g.binary_dataset(N, arch.input_dim());
  c.arch = arch;
  c.cfg.loss = loss;
  c.cfg.learning_rate = 0.3;
  c.cfg.batch_size = b;
  c.cfg.epochs = epochs;
  c.cfg.seed = seed;
  c.schedule = make_schedule(N, b, epochs, seed);
  c.seed = ParamIntervals::point(init_params(arch, seed, 1.0));
  return c;
}

void expect_counts(const Case& c, const PerturbationModel& pm, Window w, Flags f) {
  const ConstraintSystem cs =
      encode_training(c.data, c.arch, c.cfg, pm, c.schedule, w, c.seed);
  const Counts want = expected_counts(c.arch, c.schedule, w, c.data.size(), f);
  const Counts got = actual_counts(cs);
  EXPECT_EQ(got.variables, want.variables);
  EXPECT_EQ(got.constraints, want.constraints);
  EXPECT_EQ(got.binaries, want.binaries);
  EXPECT_EQ(got.quadratic, want.quadratic);
  const ConstraintSystem lp =
      encode_training(c.data, c.arch, c.cfg, pm, c.schedule, w, c.seed,
                      {Relaxation::kLp, {}, 0.1, 0.1});
  EXPECT_EQ(lp.num_binaries(), 0);
  EXPECT_EQ(lp.num_quadratic(), 0);
  const ConstraintSystem milp =
      encode_training(c.data, c.arch, c.cfg, pm, c.schedule, w, c.seed,
                      {Relaxation::kMilp, {}, 0.1, 0.1});
  EXPECT_EQ(milp.num_quadratic(), 0);
  EXPECT_EQ(milp.num_binaries(), want.binaries);
}

const Architecture kArchs[] = {Architecture{{2, 1}}, Architecture{{2, 3, 1}},
                               Architecture{{3, 2, 2, 1}}};

TEST(EncodingCounts, BoundedLabelFlips) {
  for (const Architecture& a : kArchs) {
    const Case c = make_case(a, LossKind::kHinge, 6, 3, 1, 4);
    BoundedPerturbation pm;
    pm.n = 1;
    pm.q = Norm::kL0;
    pm.nu = 1;
    Flags f;
    f.hinge = f.y_vars = f.label_flip = true;
    expect_counts(c, pm, {0, 2}, f);
  }
}

TEST(EncodingCounts, BoundedFeatureBox) {
  for (const Architecture& a : kArchs) {
    const Case c = make_case(a, LossKind::kSquaredError, 6, 2, 1, 5);
    BoundedPerturbation pm;
    pm.n = 1;
    pm.epsilon = 0.1;
    pm.q = Norm::kLinf;
    pm.nu = 0.2;
    Flags f;
    f.x_vars = f.y_vars = true;
    expect_counts(c, pm, {1, 3}, f);
  }
}

TEST(EncodingCounts, Removal) {
  for (const Architecture& a : kArchs) {
    const Case c = make_case(a, LossKind::kSquaredError, 6, 3, 1, 6);
    Flags f;
    f.removal = true;
    expect_counts(c, RemovalPerturbation{1}, {0, 2}, f);
  }
}

TEST(EncodingCounts, Substitution) {
  for (const Architecture& a : kArchs) {
    const Case c = make_case(a, LossKind::kHinge, 4, 2, 1, 7);
    Flags f;
    f.hinge = f.x_vars = f.y_vars = f.binary_labels = true;
    expect_counts(c, SubstitutionPerturbation{1}, {0, 2}, f);
  }
}

// One linear neuron, two samples, one step, one label flip.
TEST(EncodingCounts, SmallestInstance) {
  Case c = make_case(Architecture{{1, 1}}, LossKind::kSquaredError, 2, 2, 1, 1);
  BoundedPerturbation pm;
  pm.n = 1;
  pm.q = Norm::kL0;
  pm.nu = 1;
  const ConstraintSystem cs =
      encode_training(c.data, c.arch, c.cfg, pm, c.schedule, {0, 1}, c.seed);
  EXPECT_EQ(cs.num_binaries(), 2);
  const Constraint& card = cs.constraints()[0];
  EXPECT_EQ(card.name, "card");
  EXPECT_EQ(card.sense, Sense::kLe);
  EXPECT_EQ(card.rhs, 1.0);
  EXPECT_EQ(card.linear.size(), 2u);
}

// Assignments built from concrete retrainings satisfy the encoding.
void expect_feasible(const Case& c, const PerturbationModel& pm, Window w,
                     const ConcreteRun& run, const std::string& what) {
  const std::map<std::string, double> named =
      run_assignment(c.arch, c.cfg, pm, c.schedule, w, run);
  for (Relaxation r : {Relaxation::kMiqcp, Relaxation::kMilp, Relaxation::kQcp,
                       Relaxation::kLp}) {
    EncodeOptions opts;
    opts.relaxation = r;
    const ConstraintSystem cs =
        encode_training(c.data, c.arch, c.cfg, pm, c.schedule, w, c.seed, opts);
    const FeasibilityReport rep = check_feasible(cs, complete_assignment(cs, named), 1e-6);
    ASSERT_TRUE(rep.feasible) << what << " " << relaxation_tag(r) << ": " << rep.worst
                              << " residual " << rep.max_residual;
  }
}

TEST(EncodingFeasibility, LabelFlipRetrainings) {
  for (LossKind loss : {LossKind::kHinge, LossKind::kSquaredError}) {
    const Case c = make_case(Architecture{{2, 2, 1}}, loss, 4, 2, 1, 8);
    BoundedPerturbation pm;
    pm.n = 1;
    pm.q = Norm::kL0;
    pm.nu = 1;
    for (const PerturbedDataset& pd :
         enumerate_perturbed_datasets(c.data, EnumerationPlan::label_flips(1))) {
      ConcreteRun run;
      run.data = pd.data;
      run.selected.assign(c.data.size(), 0);
      for (int i : pd.indices) run.selected[i] = 1;
      run.trajectory = train_nominal(pd.data, c.arch, c.cfg, c.schedule);
      expect_feasible(c, pm, {0, 2}, run, "flip");
    }
  }
}

TEST(EncodingFeasibility, RemovalRetrainings) {
  const Case c = make_case(Architecture{{2, 2, 1}}, LossKind::kSquaredError, 6, 3, 1, 9);
  for (const PerturbedDataset& pd :
       enumerate_perturbed_datasets(c.data, EnumerationPlan::removals(1))) {
    ConcreteRun run;
    run.data = pd.data;
    run.selected.assign(c.data.size(), 0);
    for (int i : pd.indices) run.selected[i] = 1;
    run.trajectory = train_nominal(pd.data, c.arch, c.cfg, c.schedule, pd.removed);
    expect_feasible(c, RemovalPerturbation{1}, {0, 2}, run, "removal");
  }
}

TEST(EncodingFeasibility, FeatureAndSubstitutionSamples) {
  Gen g(10);
  const Case c = make_case(Architecture{{2, 3, 1}}, LossKind::kSquaredError, 4, 2, 1, 10);
  BoundedPerturbation box;
  box.n = 2;
  box.epsilon = 0.1;
  box.q = Norm::kLinf;
  box.nu = 0.3;
  const DataDomain dom = substitution_domain(c.data, 0.1);
  for (int trial = 0; trial < 10; ++trial) {
    ConcreteRun run;
    run.data = c.data;
    run.selected.assign(c.data.size(), 0);
    const int a = g.integer(0, 3), b = (a + 1 + g.integer(0, 2)) % 4;
    for (int i : {a, b}) {
      run.selected[i] = 1;
      for (int f = 0; f < 2; ++f) run.data.features(i, f) += g.real(-0.1, 0.1);
      run.data.labels(i) += g.real(-0.3, 0.3);
    }
    run.trajectory = train_nominal(run.data, c.arch, c.cfg, c.schedule);
    expect_feasible(c, box, {0, 2}, run, "box");

    ConcreteRun sub;
    sub.data = c.data;
    sub.selected.assign(c.data.size(), 0);
    sub.selected[a] = 1;
    for (int f = 0; f < 2; ++f) {
      sub.data.features(a, f) = g.real(dom.feature_lo(f), dom.feature_hi(f));
    }
    sub.data.labels(a) = g.integer(0, 1);
    sub.trajectory = train_nominal(sub.data, c.arch, c.cfg, c.schedule);
    expect_feasible(c, SubstitutionPerturbation{1}, {0, 2}, sub, "substitution");
  }
}

// A later window seeded with the abstract bounds accepts the nominal run.
TEST(EncodingFeasibility, RollingWindowSeededFromBounds) {
  Case c = make_case(Architecture{{2, 2, 1}}, LossKind::kHinge, 6, 2, 1, 11);
  BoundedPerturbation pm;
  pm.n = 1;
  pm.q = Norm::kL0;
  pm.nu = 1;
  const AbstractTrajectory tr = abstract_train(c.data, c.arch, c.cfg, pm, c.schedule);
  for (const Window& w : rolling_horizon_plan(3, 2, 1)) {
    c.seed = tr.bounds[w.t_start];
    ConcreteRun run;
    run.data = c.data;
    run.selected.assign(c.data.size(), 0);
    run.trajectory = tr.nominal;
    expect_feasible(c, pm, w, run, "window");
  }
}

TEST(EncodingFeasibility, CorruptedParameterIsReported) {
  const Case c = make_case(Architecture{{2, 2, 1}}, LossKind::kHinge, 4, 2, 1, 12);
  BoundedPerturbation pm;
  pm.n = 1;
  pm.q = Norm::kL0;
  pm.nu = 1;
  ConcreteRun run;
  run.data = c.data;
  run.selected.assign(c.data.size(), 0);
  run.trajectory = train_nominal(c.data, c.arch, c.cfg, c.schedule);
  auto named = run_assignment(c.arch, c.cfg, pm, c.schedule, {0, 2}, run);
  named.at("theta_t2_l0_i1_j0") += 1.0;
  const ConstraintSystem cs =
      encode_training(c.data, c.arch, c.cfg, pm, c.schedule, {0, 2}, c.seed);
  const FeasibilityReport rep = check_feasible(cs, complete_assignment(cs, named), 1e-6);
  EXPECT_FALSE(rep.feasible);
  bool saw_update = false;
  for (const auto& [name, r] : rep.violations) {
    if (name == "upd_t2_l0_i1_j0") {
      saw_update = true;
      EXPECT_NEAR(r, 1.0, 1e-9);
    }
  }
  EXPECT_TRUE(saw_update);
}

TEST(Encoding, Objectives) {
  const Case c = make_case(Architecture{{2, 2, 1}}, LossKind::kHinge, 4, 2, 1, 13);
  BoundedPerturbation pm;
  pm.n = 1;
  pm.q = Norm::kL0;
  pm.nu = 1;
  EncodeOptions opts;
  opts.objective = ObjectiveSpec::param_min(3);
  ConstraintSystem cs = encode_training(c.data, c.arch, c.cfg, pm, c.schedule, {0, 1},
                                        c.seed, opts);
  EXPECT_FALSE(cs.objective().maximize);
  ASSERT_EQ(cs.objective().terms.size(), 1u);
  EXPECT_EQ(cs.variables()[cs.objective().terms[0].var].name, "theta_t1_l0_i1_j1");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(9);
  a(0) = 3;
  a(8) = 4;
  opts.objective = ObjectiveSpec::face(a);
  cs = encode_training(c.data, c.arch, c.cfg, pm, c.schedule, {0, 1}, c.seed, opts);
  EXPECT_TRUE(cs.objective().maximize);
  ASSERT_EQ(cs.objective().terms.size(), 2u);
  EXPECT_DOUBLE_EQ(cs.objective().terms[0].coef, 0.6);
  EXPECT_DOUBLE_EQ(cs.objective().terms[1].coef, 0.8);
  EXPECT_EQ(cs.variables()[cs.objective().terms[1].var].name, "theta_t1_l1_i0_j2");
  opts.objective = ObjectiveSpec::param_max(9);
  EXPECT_THROW(encode_training(c.data, c.arch, c.cfg, pm, c.schedule, {0, 1}, c.seed, opts),
               ConfigError);
  opts.objective = ObjectiveSpec::face(Eigen::VectorXd::Zero(9));
  EXPECT_THROW(encode_training(c.data, c.arch, c.cfg, pm, c.schedule, {0, 1}, c.seed, opts),
               ConfigError);
}

TEST(Encoding, RejectsUnsupportedInputs) {
  Case c = make_case(Architecture{{2, 2, 1}}, LossKind::kHinge, 4, 2, 1, 14);
  const PerturbationModel pm = RemovalPerturbation{1};
  auto enc = [&](const Case& k, Window w, const PerturbationModel& p) {
    return encode_training(k.data, k.arch, k.cfg, p, k.schedule, w, k.seed);
  };
  Case ce = c;
  ce.cfg.loss = LossKind::kCrossEntropy;
  EXPECT_THROW(enc(ce, {0, 1}, pm), ConfigError);
  Case bce = c;
  bce.cfg.loss = LossKind::kBinaryCrossEntropy;
  EXPECT_THROW(enc(bce, {0, 1}, pm), ConfigError);
  Case two = make_case(Architecture{{2, 2, 2}}, LossKind::kSquaredError, 4, 2, 1, 14);
  EXPECT_THROW(enc(two, {0, 1}, pm), ConfigError);
  Case clipped = c;
  clipped.cfg.clip_kappa = 1.0;
  EXPECT_THROW(enc(clipped, {0, 1}, pm), ConfigError);
  EXPECT_THROW(enc(c, {0, 3}, pm), ConfigError);
  EXPECT_THROW(enc(c, {1, 1}, pm), ConfigError);
  EXPECT_THROW(enc(c, {0, 1}, RemovalPerturbation{2}), ConfigError);
  BoundedPerturbation l2;
  l2.n = 1;
  l2.p = Norm::kL2;
  l2.epsilon = 0.1;
  EXPECT_THROW(enc(c, {0, 1}, l2), ConfigError);
  Case reg = c;
  reg.data.labels(0) = 0.5;
  BoundedPerturbation flip;
  flip.n = 1;
  flip.q = Norm::kL0;
  flip.nu = 1;
  EXPECT_THROW(enc(reg, {0, 1}, flip), DataError);
}

TEST(RollingHorizon, Plans) {
  EXPECT_EQ(rolling_horizon_plan(14, 14, 14), (std::vector<Window>{{0, 14}}));
  EXPECT_EQ(rolling_horizon_plan(4, 1, 1),
            (std::vector<Window>{{0, 1}, {1, 2}, {2, 3}, {3, 4}}));
  EXPECT_EQ(rolling_horizon_plan(5, 3, 2), (std::vector<Window>{{0, 3}, {2, 5}}));
  EXPECT_EQ(rolling_horizon_plan(6, 3, 2), (std::vector<Window>{{0, 3}, {2, 5}, {4, 6}}));
  EXPECT_THROW(rolling_horizon_plan(0, 1, 1), ConfigError);
  EXPECT_THROW(rolling_horizon_plan(4, 0, 1), ConfigError);
  EXPECT_THROW(rolling_horizon_plan(4, 2, 0), ConfigError);
}

TEST(ObjectiveParse, Forms) {
  EXPECT_EQ(parse_objective("min:3").kind, ObjectiveSpec::Kind::kParamMin);
  EXPECT_EQ(parse_objective("max:12").index, 12);
  const ObjectiveSpec f = parse_objective("face:1,-2.5,0");
  EXPECT_EQ(f.kind, ObjectiveSpec::Kind::kFace);
  ASSERT_EQ(f.direction.size(), 3);
  EXPECT_EQ(f.direction(1), -2.5);
  EXPECT_EQ(objective_label(parse_objective("min:3")), "min3");
  for (const char* bad : {"min", "min:-1", "max:x", "max:2x", "face:1,a", "mid:1"}) {
    EXPECT_THROW(parse_objective(bad), ConfigError) << bad;
  }
}

TEST(SubstitutionDomain, InflatedBox) {
  Dataset d;
  d.features.resize(2, 2);
  d.features << 0, 10, 2, 20;
  d.labels.resize(2);
  d.labels << 0, 1;
  const DataDomain dom = substitution_domain(d, 0.1);
  EXPECT_DOUBLE_EQ(dom.feature_lo(0), -0.2);
  EXPECT_DOUBLE_EQ(dom.feature_hi(0), 2.2);
  EXPECT_DOUBLE_EQ(dom.feature_lo(1), 9.0);
  EXPECT_DOUBLE_EQ(dom.feature_hi(1), 21.0);
  EXPECT_DOUBLE_EQ(dom.label_lo, -0.1);
  EXPECT_THROW(substitution_domain(Dataset{}, 0.1), DataError);
}

}  // namespace
}  // namespace certgrad

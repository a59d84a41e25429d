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

#include "certgrad/training.hpp"

#include <cmath>
#include <sstream>

#include "certgrad/error.hpp"
#include "certgrad/parallel.hpp"

namespace certgrad {

Norm parse_norm(const std::string& s) {
  if (s == "0") return Norm::kL0;
  if (s == "1") return Norm::kL1;
  if (s == "2") return Norm::kL2;
  if (s == "inf" || s == "infinity") return Norm::kLinf;
  throw ConfigError("unknown norm '" + s + "' (expected 0, 1, 2 or inf)");
}

std::string norm_name(Norm p) {
  switch (p) {
    case Norm::kL0:
      return "0";
    case Norm::kL1:
      return "1";
    case Norm::kL2:
      return "2";
    case Norm::kLinf:
      return "inf";
  }
  return "?";
}

int perturbation_budget(const PerturbationModel& pm) {
  return std::visit([](const auto& m) { return m.n; }, pm);
}

std::string perturbation_name(const PerturbationModel& pm) {
  if (std::holds_alternative<BoundedPerturbation>(pm)) return "bounded";
  if (std::holds_alternative<RemovalPerturbation>(pm)) return "removal";
  return "substitution";
}

void validate_perturbation(const PerturbationModel& pm, const TrainConfig& cfg) {
  if (perturbation_budget(pm) < 0) {
    throw ConfigError("perturbation budget must be nonnegative");
  }
  if (const auto* b = std::get_if<BoundedPerturbation>(&pm)) {
    if (!(b->epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
    if (!(b->nu >= 0.0)) throw ConfigError("nu must be nonnegative");
    if (b->p == Norm::kL0 && b->epsilon > 0.0) {
      throw ConfigError("feature perturbations in the 0-norm are unbounded");
    }
  } else if (const auto* r = std::get_if<RemovalPerturbation>(&pm)) {
    if (r->n >= cfg.batch_size) {
      std::ostringstream msg;
      msg << "removal budget " << r->n << " must be smaller than batch size "
          << cfg.batch_size;
      throw ConfigError(msg.str());
    }
  } else if (std::holds_alternative<SubstitutionPerturbation>(pm)) {
    if (!cfg.clip_kappa) {
      throw ConfigError("substitution training needs a gradient clip bound");
    }
  }
}

IntervalTensor feature_box(const Eigen::VectorXd& x, const BoundedPerturbation& pm) {
  const Eigen::VectorXd e = Eigen::VectorXd::Constant(x.size(), pm.epsilon);
  return IntervalTensor(x - e, x + e);
}

IntervalTensor label_box(double label, LossKind loss, int outputs,
                         const BoundedPerturbation& pm) {
  const Eigen::VectorXd t = encode_target(label, loss, outputs);
  if (pm.nu == 0.0) return IntervalTensor::point(t);
  if (pm.q == Norm::kL0) {
    if (pm.nu < 1.0) return IntervalTensor::point(t);
    switch (loss) {
      case LossKind::kHinge:
        return IntervalTensor(Eigen::MatrixXd::Constant(1, 1, -1.0),
                              Eigen::MatrixXd::Constant(1, 1, 1.0));
      case LossKind::kSquaredError:
        if (outputs == 1 && label != 0.0 && label != 1.0) {
          throw DataError("label flips need labels in {0, 1}");
        }
        [[fallthrough]];
      case LossKind::kBinaryCrossEntropy:
      case LossKind::kCrossEntropy:
        return IntervalTensor(Eigen::MatrixXd::Zero(outputs, 1),
                              Eigen::MatrixXd::Ones(outputs, 1));
    }
  }
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(t.size(), pm.nu);
  return IntervalTensor(t - r, t + r);
}

AbstractTrajectory abstract_train(const Dataset& data, const Architecture& arch,
                                  const TrainConfig& cfg,
                                  const PerturbationModel& pm,
                                  const BatchSchedule& schedule,
                                  const AbstractTrainOptions& opts) {
  arch.validate();
  cfg.validate();
  validate_perturbation(pm, cfg);
  if (data.dim() != arch.input_dim()) {
    throw ConfigError("dataset dimension does not match model input");
  }
  if (schedule.dataset_size != data.size()) {
    throw ConfigError("schedule was built for a different dataset size");
  }
  const int n_budget = perturbation_budget(pm);
  const auto* bounded = std::get_if<BoundedPerturbation>(&pm);
  const bool is_removal = std::holds_alternative<RemovalPerturbation>(pm);
  const bool is_substitution = std::holds_alternative<SubstitutionPerturbation>(pm);

  AbstractTrajectory out;
  if (bounded && bounded->p != Norm::kLinf && bounded->epsilon > 0.0) {
    out.warnings.push_back("feature " + norm_name(bounded->p) +
                           "-ball enclosed in its infinity-norm box");
  }

  const int N = data.size();
  const int n_out = arch.output_dim();
  std::vector<Eigen::VectorXd> targets(N);
  std::vector<IntervalTensor> xbox, ybox;
  for (int i = 0; i < N; ++i) {
    targets[i] = encode_target(data.labels(i), cfg.loss, n_out);
  }
  bool perturbed = false;
  if (bounded && bounded->n > 0) {
    xbox.resize(N);
    ybox.resize(N);
    for (int i = 0; i < N; ++i) {
      xbox[i] = feature_box(data.x(i), *bounded);
      ybox[i] = label_box(data.labels(i), cfg.loss, n_out, *bounded);
    }
    perturbed = bounded->epsilon > 0.0;
    for (int i = 0; i < N && !perturbed; ++i) perturbed = !ybox[i].is_degenerate();
  }

  const Params theta0 = init_params(arch, cfg.seed, cfg.init_scale);
  out.bounds.push_back(ParamIntervals::point(theta0));
  out.nominal.push_back(theta0);

  for (int t = 0; t < schedule.iterations(); ++t) {
    const std::vector<int>& idx = schedule.batches[t];
    const int b = static_cast<int>(idx.size());
    if (is_removal && n_budget >= b) {
      throw ConfigError("removal budget must be smaller than every batch");
    }
    const ParamIntervals& theta = out.bounds.back();
    const Params& nominal = out.nominal.back();
    GradBoundsBatch batch(b);
    std::vector<Params> grads(b);
    parallel_for(static_cast<std::size_t>(b), [&](std::size_t s) {
      const int i = idx[s];
      const IntervalTensor xp = IntervalTensor::point(data.x(i));
      const IntervalTensor yp = IntervalTensor::point(targets[i]);
      GradBoundsSample g{per_sample_grad_bounds(theta, xp, yp, cfg.loss, opts.bounds),
                         std::nullopt};
      if (bounded) {
        if (perturbed) {
          const ParamIntervals p = per_sample_grad_bounds(theta, xbox[i], ybox[i],
                                                          cfg.loss, opts.bounds);
          g.poisoned = ParamIntervals::from_flat(
              arch, p.flat_lower().cwiseMin(g.nominal.flat_lower()),
              p.flat_upper().cwiseMax(g.nominal.flat_upper()));
        } else {
          g.poisoned = g.nominal;
        }
      }
      if (cfg.clip_kappa) g = clip_grad_bounds(g, *cfg.clip_kappa);
      batch[s] = std::move(g);
      grads[s] = sample_gradient(nominal, data.x(i), targets[i], cfg.loss);
    });

    ParamIntervals descent;
    if (bounded) {
      descent = agg_bounded(batch, std::min(n_budget, b));
    } else if (is_removal) {
      descent = agg_removal(batch, n_budget);
    } else if (is_substitution) {
      descent = agg_substitution(batch, n_budget, *cfg.clip_kappa);
    }
    const double alpha = lr_at(cfg, t);
    ParamIntervals next = apply_update(theta, descent, alpha);
    if (opts.bounds.outward_rounding) {
      const IntervalTensor w =
          iv_widen_ulp(IntervalTensor(next.flat_lower(), next.flat_upper()));
      next = ParamIntervals::from_flat(arch, w.lo(), w.hi());
    }
    Params next_nominal = sgd_step(nominal, grads, alpha, cfg.clip_kappa);

    const Eigen::VectorXd v = next_nominal.flatten();
    const Eigen::VectorXd lo = next.flat_lower(), hi = next.flat_upper();
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double tol = opts.containment_tol * (1.0 + std::abs(v(j)));
      if (!(v(j) >= lo(j) - tol && v(j) <= hi(j) + tol)) {
        std::ostringstream msg;
        msg << "nominal parameter " << j << " = " << v(j) << " left its bounds ["
            << lo(j) << ", " << hi(j) << "] at iteration " << (t + 1);
        throw InvariantError(msg.str());
      }
    }
    out.bounds.push_back(std::move(next));
    out.nominal.push_back(std::move(next_nominal));
  }
  return out;
}

}  // namespace certgrad

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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "certgrad/aggregation.hpp"
#include "certgrad/bound_prop.hpp"
#include "certgrad/error.hpp"

namespace certgrad {

std::vector<Window> rolling_horizon_plan(int T, int w, int p) {
  if (T < 1) throw ConfigError("horizon must be at least one iteration");
  if (w < 1) throw ConfigError("window length must be at least 1");
  if (p < 1) throw ConfigError("window stride must be at least 1");
  std::vector<Window> out;
  for (int start = 0;; start += p) {
    const int end = std::min(start + w, T);
    out.push_back({start, end});
    if (end == T) break;
  }
  return out;
}

ObjectiveSpec parse_objective(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("objective '" + s + "' must look like min:J, max:J or face:a,b,...");
  }
  const std::string kind = s.substr(0, colon);
  const std::string rest = s.substr(colon + 1);
  if (kind == "min" || kind == "max") {
    std::size_t used = 0;
    int j = -1;
    try {
      j = std::stoi(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != rest.size() || rest.empty() || j < 0) {
      throw ConfigError("objective index must be a nonnegative integer: '" + s + "'");
    }
    return kind == "min" ? ObjectiveSpec::param_min(j) : ObjectiveSpec::param_max(j);
  }
  if (kind == "face") {
    std::vector<double> v;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(item, &used));
        if (used != item.size()) throw ConfigError("");
      } catch (const std::exception&) {
        throw ConfigError("bad face direction entry '" + item + "'");
      }
    }
    return ObjectiveSpec::face(Eigen::Map<Eigen::VectorXd>(v.data(), v.size()));
  }
  throw ConfigError("unknown objective kind '" + kind + "'");
}

std::string objective_label(const ObjectiveSpec& obj) {
  switch (obj.kind) {
    case ObjectiveSpec::Kind::kParamMin:
      return "min" + std::to_string(obj.index);
    case ObjectiveSpec::Kind::kParamMax:
      return "max" + std::to_string(obj.index);
    case ObjectiveSpec::Kind::kFace:
      return "face";
  }
  return "objective";
}

DataDomain substitution_domain(const Dataset& data, double inflation) {
  if (data.size() == 0) throw DataError("domain of an empty dataset");
  if (!(inflation >= 0.0)) throw ConfigError("domain inflation must be nonnegative");
  DataDomain d;
  const Eigen::VectorXd lo = data.features.colwise().minCoeff().transpose();
  const Eigen::VectorXd hi = data.features.colwise().maxCoeff().transpose();
  const Eigen::VectorXd pad = inflation * (hi - lo);
  d.feature_lo = lo - pad;
  d.feature_hi = hi + pad;
  const double ylo = data.labels.minCoeff(), yhi = data.labels.maxCoeff();
  d.label_lo = ylo - inflation * (yhi - ylo);
  d.label_hi = yhi + inflation * (yhi - ylo);
  return d;
}

namespace {

std::string theta_name(int t, int k, int r, int c) {
  return "theta_t" + std::to_string(t) + "_l" + std::to_string(k) + "_i" +
         std::to_string(r) + "_j" + std::to_string(c);
}

std::string ts_prefix(const char* stem, int t, int i) {
  return std::string(stem) + "_t" + std::to_string(t) + "_s" + std::to_string(i);
}

std::string neuron_name(const char* stem, int t, int i, int k, int j) {
  return ts_prefix(stem, t, i) + "_l" + std::to_string(k) + "_n" + std::to_string(j);
}

std::string dw_name(int t, int i, int k, int r, int c) {
  return ts_prefix("dw", t, i) + "_l" + std::to_string(k) + "_i" + std::to_string(r) +
         "_j" + std::to_string(c);
}

std::string x_name(int i, int f) {
  return "x_s" + std::to_string(i) + "_f" + std::to_string(f);
}

std::string y_name(int i) { return "y_s" + std::to_string(i); }
std::string s_name(int i) { return "s_" + std::to_string(i); }

// Which data quantities are variables, by perturbation model.
struct Shape {
  bool removal = false;
  bool substitution = false;
  bool x_vars = false;
  bool y_vars = false;
  bool label_flip = false;  // bounded, q = 0
  int n = 0;
  double epsilon = 0.0;
  double nu = 0.0;
};

Shape shape_of(const PerturbationModel& pm, const Dataset* data, LossKind loss) {
  Shape s;
  s.n = perturbation_budget(pm);
  if (s.n < 0) throw ConfigError("perturbation budget must be nonnegative");
  if (std::holds_alternative<RemovalPerturbation>(pm)) {
    s.removal = true;
  } else if (std::holds_alternative<SubstitutionPerturbation>(pm)) {
    s.substitution = true;
    s.x_vars = true;
    s.y_vars = true;
  } else {
    const auto& b = std::get<BoundedPerturbation>(pm);
    if (b.epsilon < 0.0 || b.nu < 0.0) throw ConfigError("perturbation radii must be nonnegative");
    if (b.epsilon > 0.0 && b.p != Norm::kLinf) {
      throw ConfigError("the encoding supports infinity-norm feature perturbations only");
    }
    s.epsilon = b.epsilon;
    s.nu = b.nu;
    s.x_vars = b.epsilon > 0.0;
    if (b.q == Norm::kL0) {
      s.label_flip = b.nu >= 1.0;
      s.y_vars = s.label_flip;
    } else {
      if (loss != LossKind::kSquaredError && b.nu > 0.0) {
        throw ConfigError("real-valued label perturbations need squared-error loss");
      }
      s.y_vars = b.nu > 0.0;
    }
  }
  if (data && (s.label_flip || (s.substitution && data->num_classes != 0))) {
    for (int i = 0; i < data->size(); ++i) {
      const double y = data->labels(i);
      if (y != 0.0 && y != 1.0) throw DataError("label perturbations need labels in {0, 1}");
    }
  }
  return s;
}

void check_supported(const Architecture& arch, const TrainConfig& cfg) {
  arch.validate();
  cfg.validate();
  if (arch.output_dim() != 1) {
    throw ConfigError("the encoding supports single-output models only");
  }
  if (cfg.loss != LossKind::kSquaredError && cfg.loss != LossKind::kHinge) {
    throw ConfigError("the encoding supports squared-error and hinge losses only");
  }
  if (cfg.clip_kappa) throw ConfigError("clipped updates cannot be encoded");
}

void check_window(Window w, const BatchSchedule& schedule) {
  if (w.t_start < 0 || w.t_end <= w.t_start || w.t_end > schedule.iterations()) {
    std::ostringstream msg;
    msg << "window (" << w.t_start << ", " << w.t_end << ") outside [0, "
        << schedule.iterations() << "]";
    throw ConfigError(msg.str());
  }
}

std::set<int> window_samples(const BatchSchedule& schedule, Window w) {
  std::set<int> out;
  for (int t = w.t_start + 1; t <= w.t_end; ++t) {
    out.insert(schedule.batches[t - 1].begin(), schedule.batches[t - 1].end());
  }
  return out;
}

// Label bounds in loss units for a sample whose label may change.
IntervalTensor perturbed_target_box(double label, const Shape& sh, LossKind loss,
                                    const DataDomain& dom, int num_classes) {
  if (sh.substitution) {
    if (num_classes == 0) {
      return IntervalTensor(Eigen::MatrixXd::Constant(1, 1, dom.label_lo),
                            Eigen::MatrixXd::Constant(1, 1, dom.label_hi));
    }
    const double lo = loss == LossKind::kHinge ? -1.0 : 0.0;
    return IntervalTensor(Eigen::MatrixXd::Constant(1, 1, lo),
                          Eigen::MatrixXd::Constant(1, 1, 1.0));
  }
  BoundedPerturbation b;
  b.n = sh.n;
  b.epsilon = sh.epsilon;
  b.nu = sh.nu;
  b.q = sh.label_flip ? Norm::kL0 : Norm::kLinf;
  if (!sh.y_vars) b.nu = 0.0;
  return label_box(label, loss, 1, b);
}

struct SampleBounds {
  IntervalTrace fwd;
  BackwardTrace bwd;
  IntervalTensor margin;
};

struct WindowBounds {
  std::vector<ParamIntervals> theta;       // index t - t_start
  std::map<std::pair<int, int>, SampleBounds> samples;  // (t, i)
};

WindowBounds propagate_window(const Dataset& data, const Architecture& arch,
                              const TrainConfig& cfg, const Shape& sh,
                              const BatchSchedule& schedule, Window w,
                              const ParamIntervals& seed, const DataDomain& dom) {
  WindowBounds wb;
  wb.theta.push_back(seed);
  for (int t = w.t_start + 1; t <= w.t_end; ++t) {
    const ParamIntervals& theta = wb.theta.back();
    const auto& idx = schedule.batches[t - 1];
    GradBoundsBatch batch;
    for (int i : idx) {
      const Eigen::VectorXd x0 = data.x(i);
      const Eigen::VectorXd t0 = encode_target(data.labels(i), cfg.loss, 1);
      IntervalTensor xb = IntervalTensor::point(x0);
      if (sh.substitution) {
        xb = iv_hull(IntervalTensor(dom.feature_lo, dom.feature_hi), xb);
      } else if (sh.x_vars) {
        const Eigen::VectorXd e = Eigen::VectorXd::Constant(x0.size(), sh.epsilon);
        xb = IntervalTensor(x0 - e, x0 + e);
      }
      IntervalTensor yb = IntervalTensor::point(t0);
      if (sh.y_vars) {
        yb = iv_hull(perturbed_target_box(data.labels(i), sh, cfg.loss, dom,
                                          data.num_classes),
                     yb);
      }
      SampleBounds sb;
      sb.fwd = ibp_forward(theta, xb);
      const IntervalTensor dL = loss_grad_interval(sb.fwd.logits(), yb, cfg.loss);
      sb.bwd = ibp_backward_trace(sb.fwd, theta, dL);
      if (cfg.loss == LossKind::kHinge) {
        sb.margin = iv_sub(IntervalTensor::point(Eigen::MatrixXd::Ones(1, 1)),
                           iv_elemmul(yb, sb.fwd.logits()));
      }
      GradBoundsSample g;
      if (sh.removal) {
        g.nominal = sb.bwd.grads;
      } else {
        g.nominal = per_sample_grad_bounds(theta, IntervalTensor::point(x0),
                                           IntervalTensor::point(t0), cfg.loss);
        g.poisoned = ParamIntervals::from_flat(
            arch, sb.bwd.grads.flat_lower().cwiseMin(g.nominal.flat_lower()),
            sb.bwd.grads.flat_upper().cwiseMax(g.nominal.flat_upper()));
      }
      batch.push_back(std::move(g));
      wb.samples.emplace(std::make_pair(t, i), std::move(sb));
    }
    const int b = static_cast<int>(idx.size());
    const ParamIntervals descent =
        sh.removal ? agg_removal(batch, sh.n) : agg_bounded(batch, std::min(sh.n, b));
    wb.theta.push_back(apply_update(theta, descent, lr_at(cfg, t - 1)));
  }
  return wb;
}

class Builder {
 public:
  explicit Builder(ConstraintSystem& cs) : cs_(cs) {}

  int var(const std::string& name, double lo, double hi,
          VarType type = VarType::kContinuous) {
    return cs_.add_variable(name, lo, hi, type);
  }
  int id(const std::string& name) const { return cs_.index_of(name); }

  void row(const std::string& name, std::vector<LinearTerm> lin,
           std::vector<QuadTerm> quad, Sense s, double rhs) {
    Constraint c;
    c.name = name;
    c.linear = std::move(lin);
    c.quad = std::move(quad);
    c.sense = s;
    c.rhs = rhs;
    cs_.add_constraint(std::move(c));
  }

  // Encodes out = relu(in) with indicator `ind`, given bounds [l, u] on in.
  void relu(const std::string& tag, int in, int out, int ind, double l, double u,
            double margin) {
    const double m_lo = std::max(-l, 0.0) + margin;
    const double m_hi = std::max(u, 0.0) + margin;
    row(tag + "_lb", {{out, 1.0}, {in, -1.0}}, {}, Sense::kGe, 0.0);
    row(tag + "_on", {{out, 1.0}, {in, -1.0}, {ind, m_lo}}, {}, Sense::kLe, m_lo);
    row(tag + "_off", {{out, 1.0}, {ind, -m_hi}}, {}, Sense::kLe, 0.0);
  }

 private:
  ConstraintSystem& cs_;
};

// An input to a layer: a variable or a constant.
struct Operand {
  int var = -1;
  double value = 0.0;
};

}  // namespace

ConstraintSystem encode_training(const Dataset& data, const Architecture& arch,
                                 const TrainConfig& cfg, const PerturbationModel& pm,
                                 const BatchSchedule& schedule, Window window,
                                 const ParamIntervals& seed, const EncodeOptions& opts) {
  check_supported(arch, cfg);
  check_window(window, schedule);
  if (!(seed.arch() == arch)) throw ConfigError("seed interval has the wrong shape");
  if (data.dim() != arch.input_dim()) {
    throw ConfigError("dataset dimension does not match model input");
  }
  if (schedule.dataset_size != data.size()) {
    throw ConfigError("schedule was built for a different dataset size");
  }
  if (!(opts.bigm_margin > 0.0)) throw ConfigError("big-M margin must be positive");
  const Shape sh = shape_of(pm, &data, cfg.loss);
  if (sh.removal) {
    for (int t = window.t_start + 1; t <= window.t_end; ++t) {
      if (sh.n >= static_cast<int>(schedule.batches[t - 1].size())) {
        throw ConfigError("removal budget must be smaller than every batch");
      }
    }
  }
  const DataDomain dom = substitution_domain(data, opts.domain_inflation);
  const WindowBounds wb =
      propagate_window(data, arch, cfg, sh, schedule, window, seed, dom);

  ConstraintSystem cs;
  cs.window_start = window.t_start;
  cs.window_end = window.t_end;
  Builder B(cs);
  const int m = arch.num_layers();
  const double M = opts.bigm_margin;

  // Parameters at every step of the window.
  std::vector<std::vector<int>> theta_flat;
  for (int t = window.t_start; t <= window.t_end; ++t) {
    const ParamIntervals& th = wb.theta[t - window.t_start];
    std::vector<int> flat;
    for (int k = 0; k < m; ++k) {
      for (int r = 0; r < arch.fan_out(k); ++r) {
        for (int c = 0; c < arch.fan_in(k); ++c) {
          flat.push_back(B.var(theta_name(t, k, r, c), th.lower().W(k)(r, c),
                               th.upper().W(k)(r, c)));
        }
      }
      for (int r = 0; r < arch.fan_out(k); ++r) {
        flat.push_back(B.var(theta_name(t, k, r, arch.fan_in(k)), th.lower().b(k)(r),
                             th.upper().b(k)(r)));
      }
    }
    theta_flat.push_back(std::move(flat));
  }
  auto theta_var = [&](int t, int k, int r, int c) {
    return B.id(theta_name(t, k, r, c));
  };

  // Selectors and perturbed data.
  std::vector<int> s(data.size());
  for (int i = 0; i < data.size(); ++i) s[i] = B.var(s_name(i), 0.0, 1.0, VarType::kBinary);
  {
    std::vector<LinearTerm> card;
    for (int i = 0; i < data.size(); ++i) card.push_back({s[i], 1.0});
    B.row("card", std::move(card), {}, Sense::kLe, static_cast<double>(sh.n));
  }
  const std::set<int> used = window_samples(schedule, window);
  for (int i : used) {
    const Eigen::VectorXd x0 = data.x(i);
    const double y0 = data.labels(i);
    const std::string si = std::to_string(i);
    if (sh.x_vars) {
      for (int f = 0; f < data.dim(); ++f) {
        const std::string sf = si + "_f" + std::to_string(f);
        double dn, up;
        if (sh.substitution) {
          dn = x0(f) - std::min(dom.feature_lo(f), x0(f));
          up = std::max(dom.feature_hi(f), x0(f)) - x0(f);
        } else {
          dn = up = sh.epsilon;
        }
        const int xv = B.var(x_name(i, f), x0(f) - dn, x0(f) + up);
        B.row("xlo_s" + sf, {{xv, 1.0}, {s[i], dn}}, {}, Sense::kGe, x0(f));
        B.row("xhi_s" + sf, {{xv, 1.0}, {s[i], -up}}, {}, Sense::kLe, x0(f));
      }
    }
    if (sh.y_vars) {
      if (sh.label_flip) {
        const int yv = B.var(y_name(i), 0.0, 1.0);
        B.row("ylab_s" + si, {{yv, 1.0}, {s[i], -(1.0 - 2.0 * y0)}}, {}, Sense::kEq, y0);
      } else if (sh.substitution && data.num_classes != 0) {
        const int yv = B.var(y_name(i), 0.0, 1.0, VarType::kBinary);
        B.row("ylo_s" + si, {{yv, 1.0}, {s[i], y0}}, {}, Sense::kGe, y0);
        B.row("yhi_s" + si, {{yv, 1.0}, {s[i], y0 - 1.0}}, {}, Sense::kLe, y0);
      } else {
        double dn, up;
        if (sh.substitution) {
          dn = y0 - std::min(dom.label_lo, y0);
          up = std::max(dom.label_hi, y0) - y0;
        } else {
          dn = up = sh.nu;
        }
        const int yv = B.var(y_name(i), y0 - dn, y0 + up);
        B.row("ylo_s" + si, {{yv, 1.0}, {s[i], dn}}, {}, Sense::kGe, y0);
        B.row("yhi_s" + si, {{yv, 1.0}, {s[i], -up}}, {}, Sense::kLe, y0);
      }
    }
  }

  for (int t = window.t_start + 1; t <= window.t_end; ++t) {
    const auto& idx = schedule.batches[t - 1];
    const int b = static_cast<int>(idx.size());
    const double alpha = lr_at(cfg, t - 1);
    // Per-sample gradient variables, flat parameter order.
    std::vector<std::vector<int>> grads;
    for (int i : idx) {
      const SampleBounds& sb = wb.samples.at({t, i});
      const Eigen::VectorXd x0 = data.x(i);
      // Layer inputs.
      std::vector<std::vector<Operand>> in(m);
      for (int f = 0; f < data.dim(); ++f) {
        in[0].push_back(sh.x_vars ? Operand{B.id(x_name(i, f)), 0.0}
                                  : Operand{-1, x0(f)});
      }
      std::vector<std::vector<int>> zhat(m), act(m);
      for (int k = 0; k < m; ++k) {
        for (int j = 0; j < arch.fan_out(k); ++j) {
          const Interval pb = sb.fwd.pre[k].at(j);
          const int zh = B.var(neuron_name("zhat", t, i, k, j), pb.lo, pb.hi);
          zhat[k].push_back(zh);
          std::vector<LinearTerm> lin{{zh, 1.0}, {theta_var(t - 1, k, j, arch.fan_in(k)), -1.0}};
          std::vector<QuadTerm> quad;
          for (int c = 0; c < arch.fan_in(k); ++c) {
            const int w = theta_var(t - 1, k, j, c);
            if (in[k][c].var >= 0) {
              quad.push_back({w, in[k][c].var, -1.0});
            } else {
              lin.push_back({w, -in[k][c].value});
            }
          }
          B.row(neuron_name("pre", t, i, k, j), std::move(lin), std::move(quad),
                Sense::kEq, 0.0);
          if (k + 1 < m) {
            const int z = B.var(neuron_name("z", t, i, k, j), std::max(pb.lo, 0.0),
                                std::max(pb.hi, 0.0));
            const int a = B.var(neuron_name("a", t, i, k, j), 0.0, 1.0, VarType::kBinary);
            act[k].push_back(a);
            B.relu(neuron_name("relu", t, i, k, j), zh, z, a, pb.lo, pb.hi, M);
            in[k + 1].push_back({z, 0.0});
          }
        }
      }

      // Loss gradient.
      const std::string tsi = ts_prefix("", t, i);
      const int out = zhat[m - 1][0];
      const Interval gb = sb.bwd.dpre[m - 1].at(0);
      const int g = B.var(ts_prefix("g", t, i), gb.lo, gb.hi);
      const int yv = sh.y_vars ? B.id(y_name(i)) : -1;
      const double t0 = encode_target(data.labels(i), cfg.loss, 1)(0);
      if (cfg.loss == LossKind::kSquaredError) {
        if (yv >= 0) {
          B.row("loss" + tsi, {{g, 1.0}, {out, -2.0}, {yv, 2.0}}, {}, Sense::kEq, 0.0);
        } else {
          B.row("loss" + tsi, {{g, 1.0}, {out, -2.0}}, {}, Sense::kEq, -2.0 * t0);
        }
      } else {
        const Interval mb = sb.margin.at(0);
        const int u = B.var(ts_prefix("u", t, i), mb.lo, mb.hi);
        const int r = B.var(ts_prefix("r", t, i), std::max(mb.lo, 0.0), std::max(mb.hi, 0.0));
        const int h = B.var(ts_prefix("h", t, i), 0.0, 1.0, VarType::kBinary);
        if (yv >= 0) {
          B.row("margin" + tsi, {{u, 1.0}, {out, -1.0}}, {{yv, out, 2.0}}, Sense::kEq, 1.0);
          B.row("loss" + tsi, {{g, 1.0}, {h, -1.0}}, {{yv, h, 2.0}}, Sense::kEq, 0.0);
        } else {
          B.row("margin" + tsi, {{u, 1.0}, {out, t0}}, {}, Sense::kEq, 1.0);
          B.row("loss" + tsi, {{g, 1.0}, {h, t0}}, {}, Sense::kEq, 0.0);
        }
        B.relu("hinge" + tsi, u, r, h, mb.lo, mb.hi, M);
      }

      // Backward pass.
      std::vector<std::vector<int>> dpre(m);
      dpre[m - 1] = {g};
      std::vector<std::vector<int>> dw(m);
      for (int k = m - 1; k >= 0; --k) {
        const IntervalTensor gw = sb.bwd.grads.W(k);
        for (int r = 0; r < arch.fan_out(k); ++r) {
          for (int c = 0; c < arch.fan_in(k); ++c) {
            const Interval wbnd = gw.at(r, c);
            const int v = B.var(dw_name(t, i, k, r, c), wbnd.lo, wbnd.hi);
            dw[k].push_back(v);
            const std::string rn = "grad_" + dw_name(t, i, k, r, c).substr(3);
            if (in[k][c].var >= 0) {
              B.row(rn, {{v, 1.0}}, {{dpre[k][r], in[k][c].var, -1.0}}, Sense::kEq, 0.0);
            } else {
              B.row(rn, {{v, 1.0}, {dpre[k][r], -in[k][c].value}}, {}, Sense::kEq, 0.0);
            }
          }
        }
        if (k > 0) {
          for (int c = 0; c < arch.fan_in(k); ++c) {
            const Interval db = sb.bwd.dpost[k].at(c);
            const int dz = B.var(neuron_name("dz", t, i, k - 1, c), db.lo, db.hi);
            std::vector<QuadTerm> quad;
            for (int r = 0; r < arch.fan_out(k); ++r) {
              quad.push_back({theta_var(t - 1, k, r, c), dpre[k][r], -1.0});
            }
            B.row(neuron_name("bdz", t, i, k - 1, c), {{dz, 1.0}}, std::move(quad),
                  Sense::kEq, 0.0);
            const Interval pb = sb.bwd.dpre[k - 1].at(c);
            const int dzh = B.var(neuron_name("dzhat", t, i, k - 1, c), pb.lo, pb.hi);
            B.row(neuron_name("bdzhat", t, i, k - 1, c), {{dzh, 1.0}},
                  {{act[k - 1][c], dz, -1.0}}, Sense::kEq, 0.0);
            dpre[k - 1].push_back(dzh);
          }
        }
      }
      std::vector<int> flat;
      for (int k = 0; k < m; ++k) {
        flat.insert(flat.end(), dw[k].begin(), dw[k].end());
        flat.insert(flat.end(), dpre[k].begin(), dpre[k].end());
      }
      grads.push_back(std::move(flat));
    }

    // Parameter update.
    const auto& prev = theta_flat[t - 1 - window.t_start];
    const auto& next = theta_flat[t - window.t_start];
    for (std::size_t p = 0; p < prev.size(); ++p) {
      const std::string rn = "upd" + cs.variables()[next[p]].name.substr(5);
      std::vector<LinearTerm> lin;
      std::vector<QuadTerm> quad;
      if (sh.removal) {
        lin.push_back({next[p], static_cast<double>(b)});
        lin.push_back({prev[p], -static_cast<double>(b)});
        for (int q = 0; q < b; ++q) {
          const int si = s[idx[q]];
          lin.push_back({grads[q][p], alpha});
          quad.push_back({si, next[p], -1.0});
          quad.push_back({si, prev[p], 1.0});
          quad.push_back({si, grads[q][p], -alpha});
        }
      } else {
        lin.push_back({next[p], 1.0});
        lin.push_back({prev[p], -1.0});
        for (int q = 0; q < b; ++q) lin.push_back({grads[q][p], alpha / b});
      }
      B.row(rn, std::move(lin), std::move(quad), Sense::kEq, 0.0);
    }
  }

  // Objective over the final parameters.
  const auto& final_theta = theta_flat.back();
  Objective obj;
  const int P = static_cast<int>(final_theta.size());
  switch (opts.objective.kind) {
    case ObjectiveSpec::Kind::kParamMin:
    case ObjectiveSpec::Kind::kParamMax:
      if (opts.objective.index >= P) {
        throw ConfigError("objective index " + std::to_string(opts.objective.index) +
                          " outside [0, " + std::to_string(P) + ")");
      }
      obj.maximize = opts.objective.kind == ObjectiveSpec::Kind::kParamMax;
      obj.terms.push_back({final_theta[opts.objective.index], 1.0});
      break;
    case ObjectiveSpec::Kind::kFace: {
      const Eigen::VectorXd& a = opts.objective.direction;
      if (a.size() != P) {
        throw ConfigError("face direction has " + std::to_string(a.size()) +
                          " entries, model has " + std::to_string(P) + " parameters");
      }
      const double norm = a.norm();
      if (!(norm > 0.0)) throw ConfigError("face direction must be nonzero");
      obj.maximize = true;
      for (int j = 0; j < P; ++j) {
        if (a(j) != 0.0) obj.terms.push_back({final_theta[j], a(j) / norm});
      }
      break;
    }
  }
  cs.set_objective(std::move(obj));
  if (opts.relaxation == Relaxation::kMiqcp) return cs;
  return relax(cs, opts.relaxation);
}

std::map<std::string, double> run_assignment(const Architecture& arch,
                                             const TrainConfig& cfg,
                                             const PerturbationModel& pm,
                                             const BatchSchedule& schedule,
                                             Window window, const ConcreteRun& run) {
  check_supported(arch, cfg);
  check_window(window, schedule);
  const Shape sh = shape_of(pm, nullptr, cfg.loss);
  if (static_cast<int>(run.trajectory.size()) <= window.t_end) {
    throw ConfigError("run trajectory is shorter than the window");
  }
  if (static_cast<int>(run.selected.size()) != run.data.size()) {
    throw ConfigError("selector vector size differs from dataset size");
  }
  std::map<std::string, double> v;
  const int m = arch.num_layers();
  for (int t = window.t_start; t <= window.t_end; ++t) {
    const Params& th = run.trajectory[t];
    for (int k = 0; k < m; ++k) {
      for (int r = 0; r < arch.fan_out(k); ++r) {
        for (int c = 0; c < arch.fan_in(k); ++c) v[theta_name(t, k, r, c)] = th.W(k)(r, c);
        v[theta_name(t, k, r, arch.fan_in(k))] = th.b(k)(r);
      }
    }
  }
  for (int i = 0; i < run.data.size(); ++i) v[s_name(i)] = run.selected[i];
  for (int i : window_samples(schedule, window)) {
    if (sh.x_vars) {
      for (int f = 0; f < run.data.dim(); ++f) v[x_name(i, f)] = run.data.features(i, f);
    }
    if (sh.y_vars) v[y_name(i)] = run.data.labels(i);
  }
  for (int t = window.t_start + 1; t <= window.t_end; ++t) {
    const Params& th = run.trajectory[t - 1];
    for (int i : schedule.batches[t - 1]) {
      const ForwardTrace tr = forward(th, run.data.x(i));
      for (int k = 0; k < m; ++k) {
        for (int j = 0; j < arch.fan_out(k); ++j) {
          v[neuron_name("zhat", t, i, k, j)] = tr.pre[k](j);
          if (k + 1 < m) {
            v[neuron_name("z", t, i, k, j)] = tr.post[k + 1](j);
            v[neuron_name("a", t, i, k, j)] = tr.pre[k](j) > 0.0 ? 1.0 : 0.0;
          }
        }
      }
      const double target = encode_target(run.data.labels(i), cfg.loss, 1)(0);
      const double yhat = tr.logits()(0);
      double g;
      if (cfg.loss == LossKind::kSquaredError) {
        g = 2.0 * (yhat - target);
      } else {
        const double u = 1.0 - target * yhat;
        const double h = u > 0.0 ? 1.0 : 0.0;
        v[ts_prefix("u", t, i)] = u;
        v[ts_prefix("r", t, i)] = std::max(u, 0.0);
        v[ts_prefix("h", t, i)] = h;
        g = -target * h;
      }
      v[ts_prefix("g", t, i)] = g;
      Eigen::VectorXd dpre = Eigen::VectorXd::Constant(1, g);
      for (int k = m - 1; k >= 0; --k) {
        for (int r = 0; r < arch.fan_out(k); ++r) {
          for (int c = 0; c < arch.fan_in(k); ++c) {
            v[dw_name(t, i, k, r, c)] = dpre(r) * tr.post[k](c);
          }
        }
        if (k > 0) {
          const Eigen::VectorXd dpost = th.W(k).transpose() * dpre;
          Eigen::VectorXd next(dpost.size());
          for (int c = 0; c < dpost.size(); ++c) {
            next(c) = (tr.pre[k - 1](c) > 0.0 ? 1.0 : 0.0) * dpost(c);
            v[neuron_name("dz", t, i, k - 1, c)] = dpost(c);
            v[neuron_name("dzhat", t, i, k - 1, c)] = next(c);
          }
          dpre = next;
        }
      }
    }
  }
  return v;
}

}  // namespace certgrad

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

#include "certgrad/experiment.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "certgrad/error.hpp"
#include "certgrad/lp_format.hpp"
#include "certgrad/parallel.hpp"
#include "certgrad/schedule.hpp"

namespace certgrad {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out,
              const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

MatmulMethod parse_matmul(const std::string& s) {
  if (s == "endpoint") return MatmulMethod::kEndpoint;
  if (s == "midradius") return MatmulMethod::kMidRadius;
  throw ConfigError("unknown matmul method '" + s + "' (expected endpoint or midradius)");
}

std::string matmul_name(MatmulMethod m) {
  return m == MatmulMethod::kEndpoint ? "endpoint" : "midradius";
}

std::string method_name(ForwardMethod m) { return m == ForwardMethod::kIbp ? "ibp" : "crown"; }

std::string mechanism_name(NoiseMechanism m) {
  return m == NoiseMechanism::kLaplace ? "laplace" : "cauchy";
}

std::string plan_name(EnumerationPlan::Kind k) {
  switch (k) {
    case EnumerationPlan::Kind::kLabelFlips:
      return "label_flips";
    case EnumerationPlan::Kind::kRemovals:
      return "removals";
    case EnumerationPlan::Kind::kFeatureGrid:
      return "feature_grid";
  }
  return "?";
}

DatasetSpec dataset_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"source", "n", "noise_sd", "centers", "sd", "path",
                        "label_column", "feature_columns", "num_classes", "seed"});
  DatasetSpec d;
  read(j, "source", d.source, where);
  read(j, "n", d.n, where);
  read(j, "noise_sd", d.noise_sd, where);
  read(j, "sd", d.sd, where);
  read(j, "path", d.path, where);
  read(j, "label_column", d.schema.label_column, where);
  read(j, "feature_columns", d.schema.feature_columns, where);
  read(j, "num_classes", d.schema.num_classes, where);
  read_opt(j, "seed", d.seed, where);
  if (j.contains("centers")) {
    std::vector<std::vector<double>> c;
    read(j, "centers", c, where);
    if (c.empty() || c.front().empty()) throw ConfigError(where + ".centers: empty");
    d.centers.resize(static_cast<Eigen::Index>(c.size()),
                     static_cast<Eigen::Index>(c.front().size()));
    for (std::size_t r = 0; r < c.size(); ++r) {
      if (c[r].size() != c.front().size()) {
        throw ConfigError(where + ".centers: rows differ in length");
      }
      for (std::size_t f = 0; f < c[r].size(); ++f) {
        d.centers(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = c[r][f];
      }
    }
  }
  return d;
}

json dataset_to_json(const DatasetSpec& d) {
  json j{{"source", d.source}};
  if (d.source == "halfmoons") {
    j["n"] = d.n;
    j["noise_sd"] = d.noise_sd;
  } else if (d.source == "blobs") {
    j["n"] = d.n;
    j["sd"] = d.sd;
    json c = json::array();
    for (Eigen::Index r = 0; r < d.centers.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index f = 0; f < d.centers.cols(); ++f) row.push_back(d.centers(r, f));
      c.push_back(row);
    }
    j["centers"] = c;
  } else {
    j["path"] = d.path;
    j["label_column"] = d.schema.label_column;
    if (!d.schema.feature_columns.empty()) j["feature_columns"] = d.schema.feature_columns;
  }
  j["num_classes"] = d.schema.num_classes;
  if (d.seed) j["seed"] = *d.seed;
  return j;
}

Dataset materialize(const DatasetSpec& d, std::uint64_t seed) {
  const std::uint64_t s = d.seed.value_or(seed);
  if (d.source == "halfmoons") return gen_halfmoons(d.n, d.noise_sd, s);
  if (d.source == "blobs") return gen_blobs(d.n, d.centers, d.sd, s);
  if (d.source == "csv") return load_csv(d.path, d.schema);
  throw ConfigError("unknown dataset source '" + d.source + "'");
}

json vec_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vec(const json& j, const char* what) {
  std::vector<double> v;
  try {
    v = j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw DataError(std::string("results: malformed ") + what);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Runs fn, prefixing any error with the stage name and keeping its type.
template <typename Fn>
void staged(const char* stage, Fn&& fn) {
  const std::string tag = std::string("[") + stage + "] ";
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(tag + e.what());
  } catch (const json::exception& e) {
    throw DataError(tag + e.what());
  }
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.source != "halfmoons" && dataset.source != "blobs" && dataset.source != "csv") {
    throw ConfigError("unknown dataset source '" + dataset.source + "'");
  }
  if (features.poly_degree < 1) throw ConfigError("poly_degree must be at least 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  train.validate();
  validate_perturbation(perturbation, train);
  if (certify.grid < 0) throw ConfigError("grid resolution must be nonnegative");
  if (!(certify.grid_inflation >= 0.0)) throw ConfigError("grid inflation must be nonnegative");
  if (certify.backdoor_epsilon && !(*certify.backdoor_epsilon >= 0.0)) {
    throw ConfigError("backdoor epsilon must be nonnegative");
  }
  if (privacy) {
    if (!train.clip_kappa) throw ConfigError("privacy ladder needs a gradient clip bound");
    if (privacy->budgets.empty()) throw ConfigError("privacy needs ladder budgets");
    if (!(privacy->epsilon > 0.0)) throw ConfigError("privacy epsilon must be positive");
    if (!(privacy->beta > 0.0)) throw ConfigError("privacy beta must be positive");
    if (privacy->max_points < 1) throw ConfigError("privacy max_points must be positive");
  }
  if (oracle && !(oracle->tol >= 0.0)) throw ConfigError("oracle tolerance must be nonnegative");
  if (encode && encode->path.empty()) throw ConfigError("encode needs an output path");
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "config", {"seed", "dataset", "test_dataset", "features", "model", "train",
                           "perturbation", "bounds", "certify", "privacy", "oracle",
                           "encode", "output"});
  ExperimentConfig c;
  read(j, "seed", c.seed, "config");
  read(j, "output", c.output, "config");
  if (j.contains("dataset")) c.dataset = dataset_from_json(j["dataset"], "dataset");
  if (j.contains("test_dataset") && !j["test_dataset"].is_null()) {
    c.test_dataset = dataset_from_json(j["test_dataset"], "test_dataset");
  }
  if (j.contains("features")) {
    const json& f = j["features"];
    check_keys(f, "features", {"poly_degree", "standardize"});
    read(f, "poly_degree", c.features.poly_degree, "features");
    read(f, "standardize", c.features.standardize, "features");
  }
  if (j.contains("model")) {
    check_keys(j["model"], "model", {"hidden"});
    read(j["model"], "hidden", c.hidden, "model");
  }
  c.train.seed = c.seed;
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, "train", {"learning_rate", "lr_decay", "batch_size", "epochs",
                            "clip_kappa", "init_scale", "seed", "loss"});
    read(t, "learning_rate", c.train.learning_rate, "train");
    read(t, "lr_decay", c.train.lr_decay, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "epochs", c.train.epochs, "train");
    read_opt(t, "clip_kappa", c.train.clip_kappa, "train");
    read(t, "init_scale", c.train.init_scale, "train");
    read(t, "seed", c.train.seed, "train");
    std::string loss = loss_name(c.train.loss);
    read(t, "loss", loss, "train");
    c.train.loss = parse_loss(loss);
  }
  if (j.contains("perturbation")) {
    const json& p = j["perturbation"];
    check_keys(p, "perturbation", {"model", "n", "p", "epsilon", "q", "nu"});
    std::string model = "bounded";
    int n = 0;
    read(p, "model", model, "perturbation");
    read(p, "n", n, "perturbation");
    if (model == "bounded") {
      BoundedPerturbation b;
      b.n = n;
      std::string pn = "inf", qn = "0";
      read(p, "p", pn, "perturbation");
      read(p, "q", qn, "perturbation");
      b.p = parse_norm(pn);
      b.q = parse_norm(qn);
      read(p, "epsilon", b.epsilon, "perturbation");
      read(p, "nu", b.nu, "perturbation");
      c.perturbation = b;
    } else if (model == "removal") {
      c.perturbation = RemovalPerturbation{n};
    } else if (model == "substitution") {
      c.perturbation = SubstitutionPerturbation{n};
    } else {
      throw ConfigError("unknown perturbation model '" + model + "'");
    }
  }
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    check_keys(b, "bounds", {"method", "matmul", "outward_rounding", "containment_tol"});
    std::string m = "ibp", mm = "endpoint";
    read(b, "method", m, "bounds");
    read(b, "matmul", mm, "bounds");
    c.bounds.bounds.method = parse_forward_method(m);
    c.bounds.bounds.matmul = parse_matmul(mm);
    read(b, "outward_rounding", c.bounds.bounds.outward_rounding, "bounds");
    read(b, "containment_tol", c.bounds.containment_tol, "bounds");
  }
  if (j.contains("certify")) {
    const json& k = j["certify"];
    check_keys(k, "certify", {"grid", "grid_inflation", "train_set", "test_set",
                              "backdoor_epsilon"});
    read(k, "grid", c.certify.grid, "certify");
    read(k, "grid_inflation", c.certify.grid_inflation, "certify");
    read(k, "train_set", c.certify.train_set, "certify");
    read(k, "test_set", c.certify.test_set, "certify");
    read_opt(k, "backdoor_epsilon", c.certify.backdoor_epsilon, "certify");
  }
  if (j.contains("privacy") && !j["privacy"].is_null()) {
    const json& p = j["privacy"];
    check_keys(p, "privacy", {"budgets", "epsilon", "beta", "mechanism", "max_points"});
    PrivacySpec s;
    read(p, "budgets", s.budgets, "privacy");
    read(p, "epsilon", s.epsilon, "privacy");
    read(p, "beta", s.beta, "privacy");
    read(p, "max_points", s.max_points, "privacy");
    std::string mech = "cauchy";
    read(p, "mechanism", mech, "privacy");
    s.mechanism = parse_mechanism(mech);
    c.privacy = s;
  }
  if (j.contains("oracle") && !j["oracle"].is_null()) {
    const json& o = j["oracle"];
    check_keys(o, "oracle", {"plan", "n", "epsilon", "points_per_axis", "cap", "tol"});
    OracleSpec s;
    std::string kind = "label_flips";
    read(o, "plan", kind, "oracle");
    if (kind == "label_flips") {
      s.plan.kind = EnumerationPlan::Kind::kLabelFlips;
    } else if (kind == "removals") {
      s.plan.kind = EnumerationPlan::Kind::kRemovals;
    } else if (kind == "feature_grid") {
      s.plan.kind = EnumerationPlan::Kind::kFeatureGrid;
    } else {
      throw ConfigError("unknown enumeration plan '" + kind + "'");
    }
    read(o, "n", s.plan.n, "oracle");
    read(o, "epsilon", s.plan.epsilon, "oracle");
    read(o, "points_per_axis", s.plan.points_per_axis, "oracle");
    read(o, "cap", s.plan.cap, "oracle");
    read(o, "tol", s.tol, "oracle");
    c.oracle = s;
  }
  if (j.contains("encode") && !j["encode"].is_null()) {
    const json& e = j["encode"];
    check_keys(e, "encode", {"t_start", "t_end", "relaxation", "objective", "bigm_margin",
                             "domain_inflation", "path"});
    EncodeSpec s;
    read(e, "t_start", s.window.t_start, "encode");
    read(e, "t_end", s.window.t_end, "encode");
    std::string rel = "miqcp", obj = "max:0";
    read(e, "relaxation", rel, "encode");
    read(e, "objective", obj, "encode");
    s.options.relaxation = parse_relaxation(rel);
    s.options.objective = parse_objective(obj);
    read(e, "bigm_margin", s.options.bigm_margin, "encode");
    read(e, "domain_inflation", s.options.domain_inflation, "encode");
    read(e, "path", s.path, "encode");
    c.encode = s;
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["dataset"] = dataset_to_json(c.dataset);
  if (c.test_dataset) j["test_dataset"] = dataset_to_json(*c.test_dataset);
  j["features"] = {{"poly_degree", c.features.poly_degree},
                   {"standardize", c.features.standardize}};
  j["model"] = {{"hidden", c.hidden}};
  json t{{"learning_rate", c.train.learning_rate}, {"lr_decay", c.train.lr_decay},
         {"batch_size", c.train.batch_size},       {"epochs", c.train.epochs},
         {"init_scale", c.train.init_scale},       {"seed", c.train.seed},
         {"loss", loss_name(c.train.loss)}};
  if (c.train.clip_kappa) t["clip_kappa"] = *c.train.clip_kappa;
  j["train"] = t;
  json p{{"model", perturbation_name(c.perturbation)}, {"n", perturbation_budget(c.perturbation)}};
  if (const auto* b = std::get_if<BoundedPerturbation>(&c.perturbation)) {
    p["p"] = norm_name(b->p);
    p["epsilon"] = b->epsilon;
    p["q"] = norm_name(b->q);
    p["nu"] = b->nu;
  }
  j["perturbation"] = p;
  j["bounds"] = {{"method", method_name(c.bounds.bounds.method)},
                 {"matmul", matmul_name(c.bounds.bounds.matmul)},
                 {"outward_rounding", c.bounds.bounds.outward_rounding},
                 {"containment_tol", c.bounds.containment_tol}};
  json k{{"grid", c.certify.grid},
         {"grid_inflation", c.certify.grid_inflation},
         {"train_set", c.certify.train_set},
         {"test_set", c.certify.test_set}};
  if (c.certify.backdoor_epsilon) k["backdoor_epsilon"] = *c.certify.backdoor_epsilon;
  j["certify"] = k;
  if (c.privacy) {
    j["privacy"] = {{"budgets", c.privacy->budgets},
                    {"epsilon", c.privacy->epsilon},
                    {"beta", c.privacy->beta},
                    {"mechanism", mechanism_name(c.privacy->mechanism)},
                    {"max_points", c.privacy->max_points}};
  }
  if (c.oracle) {
    j["oracle"] = {{"plan", plan_name(c.oracle->plan.kind)},
                   {"n", c.oracle->plan.n},
                   {"epsilon", c.oracle->plan.epsilon},
                   {"points_per_axis", c.oracle->plan.points_per_axis},
                   {"cap", c.oracle->plan.cap},
                   {"tol", c.oracle->tol}};
  }
  if (c.encode) {
    std::string obj;
    const ObjectiveSpec& o = c.encode->options.objective;
    if (o.kind == ObjectiveSpec::Kind::kFace) {
      obj = "face:";
      char buf[32];
      for (Eigen::Index i = 0; i < o.direction.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", o.direction(i));
        obj += buf;
      }
    } else {
      obj = (o.kind == ObjectiveSpec::Kind::kParamMin ? "min:" : "max:") +
            std::to_string(o.index);
    }
    j["encode"] = {{"t_start", c.encode->window.t_start},
                   {"t_end", c.encode->window.t_end},
                   {"relaxation", relaxation_tag(c.encode->options.relaxation)},
                   {"objective", obj},
                   {"bigm_margin", c.encode->options.bigm_margin},
                   {"domain_inflation", c.encode->options.domain_inflation},
                   {"path", c.encode->path}};
  }
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Eigen::VectorXd PreparedData::transform(const Eigen::VectorXd& raw) const {
  Eigen::MatrixXd row = raw.transpose();
  Eigen::MatrixXd f = poly_features(row, poly_degree);
  if (standardizer) f = standardizer->apply(f);
  return f.row(0).transpose();
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData p;
  p.poly_degree = cfg.features.poly_degree;
  p.raw_train = materialize(cfg.dataset, cfg.seed);
  auto pipeline = [&](const Dataset& raw) {
    Dataset d = raw;
    d.features = poly_features(raw.features, p.poly_degree);
    if (p.standardizer) d.features = p.standardizer->apply(d.features);
    return d;
  };
  if (cfg.features.standardize) {
    p.standardizer = Standardizer::fit(poly_features(p.raw_train.features, p.poly_degree));
  }
  p.train = pipeline(p.raw_train);
  if (cfg.test_dataset) {
    Dataset raw = materialize(*cfg.test_dataset, cfg.seed + 1);
    if (raw.dim() != p.raw_train.dim()) {
      throw DataError("test set dimension differs from the training set");
    }
    p.test = pipeline(raw);
  }
  return p;
}

Architecture experiment_arch(const ExperimentConfig& cfg, int input_dim) {
  Architecture a;
  a.layer_sizes.push_back(input_dim);
  a.layer_sizes.insert(a.layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  const int classes = cfg.dataset.schema.num_classes;
  const bool multi = cfg.train.loss == LossKind::kCrossEntropy ||
                     (cfg.train.loss == LossKind::kSquaredError && classes > 2);
  a.layer_sizes.push_back(multi ? std::max(classes, 2) : 1);
  a.validate();
  return a;
}

BatchSchedule experiment_schedule(const ExperimentConfig& cfg, int N) {
  return make_schedule(N, cfg.train.batch_size, cfg.train.epochs, cfg.seed);
}

TrainConfig experiment_train_config(const ExperimentConfig& cfg) { return cfg.train; }

GridResult certify_grid(const PreparedData& data, const ParamIntervals& pi,
                        const Params& nominal, LossKind loss, int resolution,
                        double inflation, const BoundOptions& opts) {
  if (resolution < 1) throw ConfigError("grid resolution must be positive");
  if (data.raw_train.dim() != 2) throw ConfigError("grid certification needs 2-d raw inputs");
  GridResult g;
  g.resolution = resolution;
  const Eigen::Vector2d lo = data.raw_train.features.colwise().minCoeff().transpose();
  const Eigen::Vector2d hi = data.raw_train.features.colwise().maxCoeff().transpose();
  g.lo = lo - inflation * (hi - lo);
  g.hi = hi + inflation * (hi - lo);
  g.total = resolution * resolution;
  g.stable_mask.assign(static_cast<std::size_t>(g.total), 0);
  parallel_for(static_cast<std::size_t>(g.total), [&](std::size_t c) {
    const int iy = static_cast<int>(c) / resolution, ix = static_cast<int>(c) % resolution;
    Eigen::Vector2d raw;
    raw(0) = g.lo(0) + (ix + 0.5) * (g.hi(0) - g.lo(0)) / resolution;
    raw(1) = g.lo(1) + (iy + 0.5) * (g.hi(1) - g.lo(1)) / resolution;
    g.stable_mask[c] = certify_stable(pi, nominal, data.transform(raw), loss, opts).holds;
  });
  for (int s : g.stable_mask) g.stable += s;
  return g;
}

ResultsDocument new_results(const ExperimentConfig& cfg) {
  ResultsDocument doc;
  doc["schema_version"] = kResultsSchemaVersion;
  doc["version"] = kCertgradVersion;
  doc["created"] = timestamp();
  doc["config"] = config_to_json(cfg);
  doc["config_hash"] = config_hash(doc["config"]);
  return doc;
}

void run_train_stage(const ExperimentConfig& cfg, const PreparedData& data,
                     ResultsDocument& doc) {
  staged("train", [&] {
    const Architecture arch = experiment_arch(cfg, data.train.dim());
    const BatchSchedule schedule = experiment_schedule(cfg, data.train.size());
    const AbstractTrajectory tr =
        abstract_train(data.train, arch, cfg.train, cfg.perturbation, schedule, cfg.bounds);
    json widths = json::array();
    for (int t = 0; t <= schedule.iterations(); ++t) widths.push_back(tr.width(t));
    doc["train"] = {{"architecture", arch.layer_sizes},
                    {"iterations", schedule.iterations()},
                    {"dataset_size", data.train.size()},
                    {"feature_dim", data.train.dim()},
                    {"widths", widths},
                    {"final_lower", vec_json(tr.bounds.back().flat_lower())},
                    {"final_upper", vec_json(tr.bounds.back().flat_upper())},
                    {"nominal", vec_json(tr.nominal.back().flatten())},
                    {"warnings", tr.warnings}};
  });
}

ParamIntervals results_bounds(const ResultsDocument& doc, const Architecture& arch) {
  if (!doc.contains("train")) throw DataError("results have no train section");
  const Eigen::VectorXd lo = json_vec(doc["train"]["final_lower"], "final_lower");
  const Eigen::VectorXd hi = json_vec(doc["train"]["final_upper"], "final_upper");
  if (lo.size() != static_cast<Eigen::Index>(arch.param_count()) || hi.size() != lo.size()) {
    throw DataError("results bounds do not match the architecture");
  }
  return ParamIntervals::from_flat(arch, lo, hi);
}

Params results_nominal(const ResultsDocument& doc, const Architecture& arch) {
  if (!doc.contains("train")) throw DataError("results have no train section");
  const Eigen::VectorXd v = json_vec(doc["train"]["nominal"], "nominal");
  if (v.size() != static_cast<Eigen::Index>(arch.param_count())) {
    throw DataError("results nominal parameters do not match the architecture");
  }
  return Params::unflatten(arch, v);
}

void run_certify_stage(const ExperimentConfig& cfg, const PreparedData& data,
                       ResultsDocument& doc) {
  staged("certify", [&] {
    const Architecture arch = experiment_arch(cfg, data.train.dim());
    const ParamIntervals pi = results_bounds(doc, arch);
    const Params nominal = results_nominal(doc, arch);
    const LossKind loss = cfg.train.loss;
    const BoundOptions& opts = cfg.bounds.bounds;
    json out = json::object();
    auto summarize = [&](const Dataset& d) {
      const Interval lb = loss_bounds(pi, d, loss, opts);
      json s{{"size", d.size()},
             {"nominal_accuracy", nominal_accuracy(nominal, d, loss)},
             {"certified_accuracy", certified_accuracy(pi, nominal, d, loss, opts)},
             {"loss_lower", lb.lo},
             {"loss_upper", lb.hi}};
      if (cfg.certify.backdoor_epsilon) {
        std::vector<int> ok(static_cast<std::size_t>(d.size()), 0);
        parallel_for(ok.size(), [&](std::size_t i) {
          const int idx = static_cast<int>(i);
          ok[i] = certify_backdoor(pi, nominal, d.x(idx), static_cast<int>(d.labels(idx)),
                                   *cfg.certify.backdoor_epsilon, loss, opts)
                      .holds;
        });
        int count = 0;
        for (int v : ok) count += v;
        s["backdoor_accuracy"] = static_cast<double>(count) / d.size();
      }
      return s;
    };
    if (cfg.certify.train_set) out["train"] = summarize(data.train);
    if (cfg.certify.test_set && data.test) out["test"] = summarize(*data.test);
    if (cfg.certify.grid > 0) {
      const GridResult g = certify_grid(data, pi, nominal, loss, cfg.certify.grid,
                                        cfg.certify.grid_inflation, opts);
      out["grid"] = {{"resolution", g.resolution},
                     {"lower", {g.lo(0), g.lo(1)}},
                     {"upper", {g.hi(0), g.hi(1)}},
                     {"stable", g.stable},
                     {"total", g.total},
                     {"stable_mask", g.stable_mask}};
    }
    doc["certificates"] = out;
  });
}

void run_oracle_stage(const ExperimentConfig& cfg, const PreparedData& data,
                      ResultsDocument& doc) {
  if (!cfg.oracle) return;
  staged("oracle", [&] {
    const Architecture arch = experiment_arch(cfg, data.train.dim());
    const BatchSchedule schedule = experiment_schedule(cfg, data.train.size());
    const ParamIntervals pi = results_bounds(doc, arch);
    const auto params =
        empirical_reachable_params(data.train, cfg.oracle->plan, arch, cfg.train, schedule);
    const ContainmentReport r = check_containment(params, pi, cfg.oracle->tol);
    doc["containment"] = {{"plan", plan_name(cfg.oracle->plan.kind)},
                          {"n", cfg.oracle->plan.n},
                          {"total", r.total},
                          {"contained", r.contained},
                          {"worst_excess", r.worst_excess},
                          {"tol", cfg.oracle->tol},
                          {"empirical_min", vec_json(r.empirical_min)},
                          {"empirical_max", vec_json(r.empirical_max)}};
  });
}

void run_encode_stage(const ExperimentConfig& cfg, const PreparedData& data,
                      ResultsDocument& doc) {
  if (!cfg.encode) return;
  staged("encode", [&] {
    const Architecture arch = experiment_arch(cfg, data.train.dim());
    const BatchSchedule schedule = experiment_schedule(cfg, data.train.size());
    const Window w = cfg.encode->window;
    const AbstractTrajectory tr =
        abstract_train(data.train, arch, cfg.train, cfg.perturbation, schedule, cfg.bounds);
    if (w.t_start < 0 || w.t_start >= static_cast<int>(tr.bounds.size())) {
      throw ConfigError("encode window starts outside the trajectory");
    }
    const ConstraintSystem cs =
        encode_training(data.train, arch, cfg.train, cfg.perturbation, schedule, w,
                        tr.bounds[w.t_start], cfg.encode->options);
    write_file_atomic(cfg.encode->path, emit_lp(cs));
    doc["encode"] = {{"path", cfg.encode->path},
                     {"relaxation", relaxation_tag(cs.relaxation)},
                     {"objective", objective_label(cfg.encode->options.objective)},
                     {"t_start", w.t_start},
                     {"t_end", w.t_end},
                     {"variables", cs.num_variables()},
                     {"binaries", cs.num_binaries()},
                     {"constraints", cs.num_constraints()},
                     {"quadratic_constraints", cs.num_quadratic()}};
  });
}

void run_privacy_stage(const ExperimentConfig& cfg, const PreparedData& data,
                       ResultsDocument& doc) {
  if (!cfg.privacy) return;
  staged("privacy", [&] {
    const PrivacySpec& ps = *cfg.privacy;
    const Architecture arch = experiment_arch(cfg, data.train.dim());
    const BatchSchedule schedule = experiment_schedule(cfg, data.train.size());
    const StabilityLadder ladder = build_stability_ladder(data.train, arch, cfg.train,
                                                          schedule, ps.budgets, cfg.bounds);
    const Params nominal = train_nominal(data.train, arch, cfg.train, schedule).back();
    const Dataset& d = data.test ? *data.test : data.train;
    const int count = std::min(d.size(), ps.max_points);
    json points = json::array();
    int correct = 0;
    double mean_n = 0.0;
    for (int i = 0; i < count; ++i) {
      const Eigen::VectorXd x = d.x(i);
      const int np = max_stable_n(ladder, nominal, x, cfg.train.loss, cfg.bounds.bounds);
      const double ss = smooth_sensitivity_bound(np, ps.beta);
      const double scale = noise_scale(ps.mechanism, ss, ps.epsilon, ps.beta);
      const int pred = predict_class(forward(nominal, x).logits(), cfg.train.loss);
      const int priv = private_predict(pred, scale, ps.mechanism,
                                       cfg.seed + static_cast<std::uint64_t>(i));
      correct += priv == static_cast<int>(d.labels(i));
      mean_n += np;
      points.push_back({{"index", i},
                        {"n_prime", np},
                        {"smooth_sensitivity", ss},
                        {"scale", scale},
                        {"prediction", pred},
                        {"private_prediction", priv}});
    }
    doc["privacy"] = {{"mechanism", mechanism_name(ps.mechanism)},
                      {"epsilon", ps.epsilon},
                      {"beta", ps.beta},
                      {"budgets", ps.budgets},
                      {"mean_n_prime", count ? mean_n / count : 0.0},
                      {"private_accuracy", count ? static_cast<double>(correct) / count : 0.0},
                      {"points", points}};
  });
}

ResultsDocument run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData data;
  staged("data", [&] { data = prepare_data(cfg); });
  ResultsDocument doc = new_results(cfg);
  run_train_stage(cfg, data, doc);
  run_certify_stage(cfg, data, doc);
  run_oracle_stage(cfg, data, doc);
  run_encode_stage(cfg, data, doc);
  run_privacy_stage(cfg, data, doc);
  if (!cfg.output.empty()) write_results(doc, cfg.output);
  return doc;
}

void verify_results(const ResultsDocument& doc) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw DataError("results: missing schema_version");
  }
  if (doc["schema_version"] != kResultsSchemaVersion) {
    throw DataError("results: unsupported schema version " + doc["schema_version"].dump());
  }
  if (!doc.contains("config") || !doc.contains("config_hash")) {
    throw DataError("results: missing config or config_hash");
  }
  if (doc["config_hash"] != config_hash(doc["config"])) {
    throw DataError("results: config hash does not match the stored config");
  }
}

void write_results(const ResultsDocument& doc, const std::string& path) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

ResultsDocument read_results(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open results " + path);
  ResultsDocument doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  verify_results(doc);
  return doc;
}

}  // namespace certgrad

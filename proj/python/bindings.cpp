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

#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "certgrad/certify.hpp"
#include "certgrad/data.hpp"
#include "certgrad/error.hpp"
#include "certgrad/experiment.hpp"
#include "certgrad/model.hpp"
#include "certgrad/training.hpp"

namespace py = pybind11;

namespace certgrad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int num_classes) {
  if (X.rows() != y.size()) throw DataError("X and y have different lengths");
  Dataset d;
  d.features = X;
  d.labels = y;
  d.num_classes = num_classes;
  return d;
}

TrainConfig make_config(const std::string& loss, double lr, int batch_size, int epochs,
                        std::uint64_t seed, std::optional<double> clip_kappa,
                        double lr_decay) {
  TrainConfig cfg;
  cfg.loss = parse_loss(loss);
  cfg.learning_rate = lr;
  cfg.batch_size = batch_size;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.clip_kappa = clip_kappa;
  cfg.lr_decay = lr_decay;
  cfg.validate();
  return cfg;
}

PerturbationModel make_perturbation(const std::string& model, int n, double epsilon,
                                    const std::string& p, const std::string& q, double nu) {
  if (model == "bounded") {
    BoundedPerturbation b;
    b.n = n;
    b.epsilon = epsilon;
    b.p = parse_norm(p);
    b.q = parse_norm(q);
    b.nu = nu;
    return b;
  }
  if (model == "removal") return RemovalPerturbation{n};
  if (model == "substitution") return SubstitutionPerturbation{n};
  throw ConfigError("unknown perturbation model '" + model +
                    "', expected bounded, removal or substitution");
}

RowMatrix stack(const std::vector<Eigen::VectorXd>& rows) {
  RowMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t t = 0; t < rows.size(); ++t) m.row(t) = rows[t].transpose();
  return m;
}

BoundOptions bound_options(const std::string& method) {
  BoundOptions o;
  o.method = parse_forward_method(method);
  return o;
}

}  // namespace
}  // namespace certgrad

PYBIND11_MODULE(_certgrad, m) {
  using namespace certgrad;
  m.doc() = "Certified parameter bounds for gradient-based training.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  m.attr("__version__") = kCertgradVersion;

  m.def(
      "halfmoons",
      [](int n, double noise_sd, std::uint64_t seed) {
        const Dataset d = gen_halfmoons(n, noise_sd, seed);
        return py::make_tuple(d.features, d.labels);
      },
      py::arg("n"), py::arg("noise_sd") = 0.1, py::arg("seed") = 0);

  m.def("poly_features", &poly_features, py::arg("X"), py::arg("degree"));

  m.def(
      "train",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& layers,
         const std::string& loss, double lr, int batch_size, int epochs, std::uint64_t seed,
         std::optional<double> clip_kappa, double lr_decay, int num_classes) {
        const Dataset d = make_dataset(X, y, num_classes);
        const Architecture arch{layers};
        const TrainConfig cfg =
            make_config(loss, lr, batch_size, epochs, seed, clip_kappa, lr_decay);
        const BatchSchedule sch = make_schedule(d.size(), batch_size, epochs, seed);
        std::vector<Eigen::VectorXd> rows;
        for (const Params& p : train_nominal(d, arch, cfg, sch)) rows.push_back(p.flatten());
        return stack(rows);
      },
      py::arg("X"), py::arg("y"), py::arg("layers"), py::arg("loss") = "hinge",
      py::arg("learning_rate") = 0.1, py::arg("batch_size") = 1, py::arg("epochs") = 1,
      py::arg("seed") = 0, py::arg("clip_kappa") = py::none(), py::arg("lr_decay") = 0.0,
      py::arg("num_classes") = 2);

  m.def(
      "abstract_train",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& layers,
         const std::string& model, int n, double epsilon, const std::string& p,
         const std::string& q, double nu, const std::string& method, const std::string& loss,
         double lr, int batch_size, int epochs, std::uint64_t seed,
         std::optional<double> clip_kappa, double lr_decay, int num_classes) {
        const Dataset d = make_dataset(X, y, num_classes);
        const Architecture arch{layers};
        const TrainConfig cfg =
            make_config(loss, lr, batch_size, epochs, seed, clip_kappa, lr_decay);
        const BatchSchedule sch = make_schedule(d.size(), batch_size, epochs, seed);
        AbstractTrainOptions opts;
        opts.bounds = bound_options(method);
        AbstractTrajectory traj;
        {
          py::gil_scoped_release release;
          traj = abstract_train(d, arch, cfg, make_perturbation(model, n, epsilon, p, q, nu),
                                sch, opts);
        }
        std::vector<Eigen::VectorXd> lo, hi, nom;
        for (std::size_t t = 0; t < traj.bounds.size(); ++t) {
          lo.push_back(traj.bounds[t].flat_lower());
          hi.push_back(traj.bounds[t].flat_upper());
          nom.push_back(traj.nominal[t].flatten());
        }
        py::dict out;
        out["lower"] = stack(lo);
        out["upper"] = stack(hi);
        out["nominal"] = stack(nom);
        out["warnings"] = traj.warnings;
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("layers"), py::arg("model") = "bounded",
      py::arg("n") = 0, py::arg("epsilon") = 0.0, py::arg("p") = "inf", py::arg("q") = "0",
      py::arg("nu") = 0.0, py::arg("method") = "ibp", py::arg("loss") = "hinge",
      py::arg("learning_rate") = 0.1, py::arg("batch_size") = 1, py::arg("epochs") = 1,
      py::arg("seed") = 0, py::arg("clip_kappa") = py::none(), py::arg("lr_decay") = 0.0,
      py::arg("num_classes") = 2);

  m.def(
      "certify_stable",
      [](const std::vector<int>& layers, const Eigen::VectorXd& lower,
         const Eigen::VectorXd& upper, const Eigen::VectorXd& nominal,
         const Eigen::VectorXd& x, const std::string& loss, const std::string& method) {
        const Architecture arch{layers};
        const Certificate c = certify_stable(ParamIntervals::from_flat(arch, lower, upper),
                                             Params::unflatten(arch, nominal), x,
                                             parse_loss(loss), bound_options(method));
        return py::make_tuple(c.holds, c.predicted);
      },
      py::arg("layers"), py::arg("lower"), py::arg("upper"), py::arg("nominal"), py::arg("x"),
      py::arg("loss") = "hinge", py::arg("method") = "ibp");

  m.def(
      "certified_accuracy",
      [](const std::vector<int>& layers, const Eigen::VectorXd& lower,
         const Eigen::VectorXd& upper, const Eigen::VectorXd& nominal,
         const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& loss,
         const std::string& method, int num_classes) {
        const Architecture arch{layers};
        return certified_accuracy(ParamIntervals::from_flat(arch, lower, upper),
                                  Params::unflatten(arch, nominal),
                                  make_dataset(X, y, num_classes), parse_loss(loss),
                                  bound_options(method));
      },
      py::arg("layers"), py::arg("lower"), py::arg("upper"), py::arg("nominal"), py::arg("X"),
      py::arg("y"), py::arg("loss") = "hinge", py::arg("method") = "ibp",
      py::arg("num_classes") = 2);

  m.def("smooth_sensitivity_bound", &smooth_sensitivity_bound, py::arg("n_prime"),
        py::arg("beta"));
  m.def(
      "noise_scale",
      [](const std::string& mechanism, double ss, double epsilon, double beta) {
        return noise_scale(parse_mechanism(mechanism), ss, epsilon, beta);
      },
      py::arg("mechanism"), py::arg("ss"), py::arg("epsilon"), py::arg("beta"));

  m.def(
      "_run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from_json(nlohmann::json::parse(config_json));
        ResultsDocument doc;
        {
          py::gil_scoped_release release;
          doc = run_experiment(cfg);
        }
        return doc.dump();
      },
      py::arg("config_json"));
}

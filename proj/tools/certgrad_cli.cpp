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

// certgrad command-line driver. Every subcommand accepts the experiment flags
// below; values in a --config file take precedence over flags.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "certgrad/data.hpp"
#include "certgrad/error.hpp"
#include "certgrad/experiment.hpp"

namespace {

using nlohmann::json;
using certgrad::ConfigError;

// Collects flag values into a config JSON, skipping flags not given.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <typename T>
  void add(const std::string& names, const std::string& pointer, const std::string& desc) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(names, *value, desc);
    if constexpr (std::is_same_v<T, std::vector<int>>) opt->delimiter(',');
    setters_.push_back([opt, value, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = *value;
    });
  }

  void add_switch(const std::string& names, const std::string& pointer, const std::string& desc) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag(names, *value, desc);
    setters_.push_back([opt, value, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = *value;
    });
  }

  json collect() const {
    json j = json::object();
    for (const auto& s : setters_) s(j);
    return j;
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(json&)>> setters_;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Flags> flags;
  std::string config_path;
};

void add_experiment_flags(Command& c) {
  c.app->add_option("--config", c.config_path, "JSON experiment config (overrides flags)");
  Flags& f = *c.flags;
  f.add<std::uint64_t>("--seed", "/seed", "global seed");
  f.add<std::string>("--dataset", "/dataset/source", "halfmoons, blobs or csv");
  f.add<int>("--n", "/dataset/n", "generated dataset size");
  f.add<double>("--noise", "/dataset/noise_sd", "halfmoons noise level");
  f.add<std::string>("--csv", "/dataset/path", "CSV training data");
  f.add<std::string>("--label-column", "/dataset/label_column", "CSV label column");
  f.add<int>("--num-classes", "/dataset/num_classes", "classes, 0 for regression");
  f.add<int>("--poly-degree", "/features/poly_degree", "polynomial feature degree");
  f.add_switch("--standardize", "/features/standardize", "standardize features");
  f.add<std::vector<int>>("--hidden", "/model/hidden", "hidden widths, comma separated");
  f.add<double>("--lr", "/train/learning_rate", "learning rate");
  f.add<double>("--lr-decay", "/train/lr_decay", "learning rate decay");
  f.add<int>("--batch-size", "/train/batch_size", "batch size");
  f.add<int>("--epochs", "/train/epochs", "epochs");
  f.add<double>("--clip", "/train/clip_kappa", "gradient clip bound");
  f.add<double>("--init-scale", "/train/init_scale", "initialisation scale");
  f.add<std::string>("--loss", "/train/loss", "squared_error, binary_cross_entropy, "
                                              "cross_entropy or hinge");
  f.add<std::string>("--perturbation", "/perturbation/model",
                     "bounded, removal or substitution");
  f.add<int>("--budget", "/perturbation/n", "perturbation budget n");
  f.add<std::string>("--p", "/perturbation/p", "feature norm");
  f.add<double>("--epsilon", "/perturbation/epsilon", "feature radius");
  f.add<std::string>("--q", "/perturbation/q", "label norm");
  f.add<double>("--nu", "/perturbation/nu", "label radius");
  f.add<std::string>("--method", "/bounds/method", "ibp or crown");
  f.add<std::string>("-o,--output", "/output", "results path (stdout if omitted)");
}

json read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

certgrad::ExperimentConfig resolve(const Command& c, const json& extra = json::object()) {
  json j = c.flags->collect();
  j.merge_patch(extra);
  if (!c.config_path.empty()) j.merge_patch(read_config_file(c.config_path));
  return certgrad::config_from_json(j);
}

void emit(const certgrad::ResultsDocument& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    certgrad::write_results(doc, path);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Certified bounds on gradient-based training under data perturbations"};
  app.require_subcommand(1);

  auto make = [&](const char* name, const char* desc) {
    Command c;
    c.app = app.add_subcommand(name, desc);
    c.flags = std::make_unique<Flags>(c.app);
    add_experiment_flags(c);
    return c;
  };

  Command gen = make("gen", "generate a dataset as CSV");
  std::string gen_out;
  gen.app->add_option("--csv-out", gen_out, "CSV output path")->required();

  Command train = make("train", "abstract training and final parameter bounds");

  Command certify = make("certify", "certificates from saved bounds");
  std::string results_in;
  certify.app->add_option("--results", results_in, "results from train")->required();
  certify.flags->add<int>("--grid", "/certify/grid", "grid cells per axis");
  certify.flags->add<double>("--grid-inflation", "/certify/grid_inflation",
                             "bounding box inflation");
  certify.flags->add<double>("--backdoor-eps", "/certify/backdoor_epsilon",
                             "inference-time radius");

  Command enumerate = make("enumerate", "check bounds against exhaustive retraining");
  enumerate.flags->add<std::string>("--plan", "/oracle/plan",
                                    "label_flips, removals or feature_grid");
  enumerate.flags->add<int>("--enum-n", "/oracle/n", "perturbed samples per dataset");
  enumerate.flags->add<double>("--enum-eps", "/oracle/epsilon", "feature grid radius");
  enumerate.flags->add<int>("--points-per-axis", "/oracle/points_per_axis", "grid points");
  enumerate.flags->add<std::size_t>("--cap", "/oracle/cap", "maximum retrainings");
  enumerate.flags->add<double>("--tol", "/oracle/tol", "containment tolerance");

  Command encode = make("encode", "write the training optimisation problem as an LP file");
  encode.flags->add<int>("--t-start", "/encode/t_start", "window start");
  encode.flags->add<int>("--t-end", "/encode/t_end", "window end");
  encode.flags->add<std::string>("--relaxation", "/encode/relaxation",
                                 "miqcp, milp, qcp or lp");
  encode.flags->add<std::string>("--objective", "/encode/objective",
                                 "min:J, max:J or face:a0,a1,...");
  encode.flags->add<double>("--bigm-margin", "/encode/bigm_margin", "big-M margin");
  encode.flags->add<std::string>("--lp", "/encode/path", "LP output path");

  Command privacy = make("privacy", "stability ladder and private prediction noise");
  privacy.flags->add<std::vector<int>>("--budgets", "/privacy/budgets",
                                       "substitution budgets, comma separated");
  privacy.flags->add<double>("--privacy-epsilon", "/privacy/epsilon", "privacy epsilon");
  privacy.flags->add<double>("--beta", "/privacy/beta", "smoothing parameter");
  privacy.flags->add<std::string>("--mechanism", "/privacy/mechanism", "laplace or cauchy");
  privacy.flags->add<int>("--max-points", "/privacy/max_points", "query points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (gen.app->parsed()) {
    const auto cfg = resolve(gen);
    const auto data = certgrad::prepare_data(cfg);
    certgrad::write_csv(gen_out, data.raw_train, cfg.dataset.schema.label_column);
    return 0;
  }
  if (train.app->parsed()) {
    const auto cfg = resolve(train);
    const auto data = certgrad::prepare_data(cfg);
    auto doc = certgrad::new_results(cfg);
    certgrad::run_train_stage(cfg, data, doc);
    emit(doc, cfg.output);
    return 0;
  }
  if (certify.app->parsed()) {
    auto doc = certgrad::read_results(results_in);
    // Settings of the producing run, with certification flags layered on.
    json j = doc["config"];
    j.erase("output");
    j.merge_patch(certify.flags->collect());
    if (!certify.config_path.empty()) j.merge_patch(read_config_file(certify.config_path));
    const auto cfg = certgrad::config_from_json(j);
    const auto data = certgrad::prepare_data(cfg);
    doc["config"] = certgrad::config_to_json(cfg);
    doc["config_hash"] = certgrad::config_hash(doc["config"]);
    certgrad::run_certify_stage(cfg, data, doc);
    emit(doc, cfg.output);
    return 0;
  }
  if (enumerate.app->parsed()) {
    const auto cfg = resolve(enumerate, {{"oracle", json::object()}});
    const auto data = certgrad::prepare_data(cfg);
    auto doc = certgrad::new_results(cfg);
    certgrad::run_train_stage(cfg, data, doc);
    certgrad::run_oracle_stage(cfg, data, doc);
    emit(doc, cfg.output);
    return 0;
  }
  if (encode.app->parsed()) {
    const auto cfg = resolve(encode);
    if (!cfg.encode) throw ConfigError("encode needs --lp or an encode section");
    const auto data = certgrad::prepare_data(cfg);
    auto doc = certgrad::new_results(cfg);
    certgrad::run_encode_stage(cfg, data, doc);
    emit(doc, cfg.output);
    return 0;
  }
  if (privacy.app->parsed()) {
    const auto cfg = resolve(privacy);
    if (!cfg.privacy) throw ConfigError("privacy needs --budgets or a privacy section");
    const auto data = certgrad::prepare_data(cfg);
    auto doc = certgrad::new_results(cfg);
    certgrad::run_privacy_stage(cfg, data, doc);
    emit(doc, cfg.output);
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const certgrad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const certgrad::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const certgrad::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}

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

#ifndef CERTGRAD_DATA_HPP_
#define CERTGRAD_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "certgrad/dataset.hpp"

namespace certgrad {

// Two interleaved half circles. Class 0 (the first ceil(N/2) points before
// shuffling) lies on the upper unit semicircle, class 1 on the lower one
// shifted to (1, 0.5). Gaussian noise of the given standard deviation.
Dataset gen_halfmoons(int N, double noise_sd, std::uint64_t seed);

// Isotropic Gaussian clusters, one row of `centers` per class, classes as
// balanced as N allows.
Dataset gen_blobs(int N, const Eigen::MatrixXd& centers, double sd, std::uint64_t seed);

// Number of monomials of total degree 1..degree in d variables.
std::size_t poly_feature_count(int d, int degree);

// All monomials of total degree 1..degree, graded lexicographic order:
// degree 1 first, and within a degree higher powers of earlier variables
// first. For (a, b) at degree 2 that is a, b, a^2, ab, b^2.
Eigen::MatrixXd poly_features(const Eigen::MatrixXd& X, int degree);

// Per-column mean and standard deviation; constant columns keep scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

// Header row required. The label column is named; every other column is a
// feature unless feature_columns lists them. num_classes 0 means regression,
// otherwise labels must be integers in [0, num_classes).
struct CsvSchema {
  std::string label_column = "label";
  std::vector<std::string> feature_columns;
  int num_classes = 2;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
Dataset parse_csv(const std::string& text, const CsvSchema& schema = {});

// Columns x0..x{d-1} then the label column.
std::string format_csv(const Dataset& data, const std::string& label_column = "label");
void write_csv(const std::string& path, const Dataset& data,
               const std::string& label_column = "label");

// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace certgrad

#endif  // CERTGRAD_DATA_HPP_

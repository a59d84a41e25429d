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

#ifndef CERTGRAD_DATASET_HPP_
#define CERTGRAD_DATASET_HPP_

#include <Eigen/Dense>

namespace certgrad {

// Row i of features is sample i. Labels are class indices for classification
// (num_classes >= 2) and real targets for regression (num_classes == 0).
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  int num_classes = 2;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  Eigen::VectorXd x(int i) const { return features.row(i).transpose(); }
};

}  // namespace certgrad

#endif  // CERTGRAD_DATASET_HPP_

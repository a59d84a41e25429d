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

#include "certgrad/schedule.hpp"

#include <algorithm>
#include <string>

#include "certgrad/error.hpp"
#include "certgrad/rng.hpp"

namespace certgrad {

BatchSchedule schedule_from_permutation(const std::vector<int>& permutation,
                                        int batch_size, int epochs) {
  const int n = static_cast<int>(permutation.size());
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size > n) {
    throw ConfigError("batch size " + std::to_string(batch_size) +
                      " exceeds dataset size " + std::to_string(n));
  }
  std::vector<char> seen(n, 0);
  for (int v : permutation) {
    if (v < 0 || v >= n || seen[v]) {
      throw ConfigError("schedule: not a permutation of [0, n)");
    }
    seen[v] = 1;
  }
  BatchSchedule s;
  s.dataset_size = n;
  const int per_epoch = n / batch_size;
  for (int e = 0; e < epochs; ++e) {
    for (int k = 0; k < per_epoch; ++k) {
      s.batches.emplace_back(permutation.begin() + k * batch_size,
                             permutation.begin() + (k + 1) * batch_size);
    }
  }
  return s;
}

BatchSchedule make_schedule(int n, int batch_size, int epochs,
                            std::uint64_t seed) {
  if (n < 1) throw ConfigError("dataset must be nonempty");
  Rng rng(seed);
  return schedule_from_permutation(rng.permutation(n), batch_size, epochs);
}

}  // namespace certgrad

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

#ifndef CERTGRAD_SCHEDULE_HPP_
#define CERTGRAD_SCHEDULE_HPP_

#include <cstdint>
#include <vector>

namespace certgrad {

// Iteration t (1-based) uses batches[t - 1].
struct BatchSchedule {
  std::vector<std::vector<int>> batches;
  int dataset_size = 0;

  int iterations() const { return static_cast<int>(batches.size()); }
};

// One seeded permutation of [0, n) drawn up front, reused every epoch and cut
// into contiguous slices. A short trailing slice is dropped.
BatchSchedule make_schedule(int n, int batch_size, int epochs,
                            std::uint64_t seed);
BatchSchedule schedule_from_permutation(const std::vector<int>& permutation,
                                        int batch_size, int epochs);

}  // namespace certgrad

#endif  // CERTGRAD_SCHEDULE_HPP_

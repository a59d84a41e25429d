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

#ifndef CERTGRAD_PARALLEL_HPP_
#define CERTGRAD_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace certgrad {

// Worker count from CERTGRAD_THREADS, default 1.
int thread_count();

// Runs fn(i) for i in [0, n). Each index is written by exactly one worker, so
// results stored per index do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace certgrad

#endif  // CERTGRAD_PARALLEL_HPP_

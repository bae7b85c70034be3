/* Copyright 2026 The FilTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FILTAG_PARALLEL_H_
#define FILTAG_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace filtag {

// Runs fn(i) for i in [0, n) on up to `threads` workers (<= 1 runs inline).
// The first exception thrown by any task is rethrown after all workers join.
void ParallelFor(size_t n, int threads, const std::function<void(size_t)>& fn);

}  // namespace filtag

#endif  // FILTAG_PARALLEL_H_

// Copyright (c) 2026 The BMFA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BMFA_PARALLEL_H_
#define BMFA_PARALLEL_H_

#include <functional>

namespace bmfa {

// Process-wide worker count for kernel-internal parallelism. Defaults to 1.
// Kernels only split work whose results are written to disjoint outputs, so
// results are bit-identical for any thread count.
void SetNumThreads(int n);
int NumThreads();

// Runs fn(i) for i in [0, count). Work is split into contiguous ranges.
void ParallelFor(int count, const std::function<void(int)>& fn);

}  // namespace bmfa

#endif  // BMFA_PARALLEL_H_

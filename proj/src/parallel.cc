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

#include "bmfa/parallel.h"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "bmfa/error.h"

namespace bmfa {
namespace {

std::atomic<int> g_num_threads{1};

}  // namespace

void SetNumThreads(int n) {
  BMFA_REQUIRE(n >= 1, "thread count must be >= 1");
  g_num_threads.store(n);
}

int NumThreads() { return g_num_threads.load(); }

void ParallelFor(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(NumThreads(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int per = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * per;
    const int end = std::min(count, begin + per);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bmfa

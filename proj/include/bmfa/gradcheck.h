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

#ifndef BMFA_GRADCHECK_H_
#define BMFA_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace bmfa {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Coordinates probed per checked tensor; tensors at or below this size
  // are probed exhaustively.
  int max_coords = 24;
  // A check fails if more than this fraction of probed coordinates is
  // unresolved (see GradCheck).
  double max_unresolved_fraction = 0.05;
  // Scales every analytic gradient by (1 + corrupt). Nonzero values exist
  // only to prove that the checker can fail.
  double corrupt = 0.0;
};

struct GradCheckReport {
  std::string op;
  double max_rel_error = 0;
  double tolerance = 0;
  bool pass = false;
  int coords = 0;        // probed coordinates
  int unresolved = 0;     // excluded: not smooth at step h
  int noise_limited = 0;  // excluded: difference below rounding resolution
  std::string worst;     // "tensor[index]" with the largest error
  double worst_analytic = 0;
  double worst_numeric = 0;
  double seconds = 0;
};

// Registered op ids in a fixed order.
std::vector<std::string> GradCheckOps();

// 64-bit central differences against the analytic tape gradients of a
// random scalar probe L. The relative error of one coordinate is
// |a - n| / max(|a|, |n|, 1e-8) with n the step-h central difference.
// A coordinate over tolerance is set aside, counted rather than scored,
// when it is one of:
//  - noise-limited: |a - n| is below the rounding resolution of the
//    difference quotient, 1000 * eps * max(1, |L|) / h. Structurally zero
//    gradients (a BN shift followed by another train-mode BN) land here.
//  - unresolved: the step-h and step-h/2 differences disagree by more than
//    the tolerance, so L is not smooth at that scale (a ReLU or
//    variance-floor kink inside the stencil).
// Throws InvalidInput for unknown ids.
GradCheckReport GradCheck(const std::string& op, uint64_t seed,
                          const GradCheckOptions& options = {});

// Runs every op whose id contains `filter` (all ops when empty).
std::vector<GradCheckReport> RunGradChecks(const std::string& filter,
                                           uint64_t seed,
                                           const GradCheckOptions& options);

}  // namespace bmfa

#endif  // BMFA_GRADCHECK_H_

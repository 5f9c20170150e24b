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

#ifndef BMFA_OPTIMIZER_H_
#define BMFA_OPTIMIZER_H_

#include <vector>

#include "bmfa/tensor.h"

namespace bmfa {

// Exponential decay from lr_start at step 0 to lr_end at step total - 1.
struct LrSchedule {
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  int total_steps = 1;
  double At(int step) const;
  void Validate() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of float parameters. Moments are
// created on the first step and keep the parameter shapes.
class Adam {
 public:
  Adam(std::vector<Tensor<float>*> params, AdamConfig config = {});

  // One update at learning rate lr. grads[i] pairs with params[i]; a null
  // entry means a zero gradient. Throws NumericError, leaving every
  // parameter untouched, if any gradient is non-finite.
  void Step(const std::vector<const Tensor<float>*>& grads, double lr);

  int step_count() const { return step_; }
  const std::vector<Tensor<float>>& first_moments() const { return m_; }
  const std::vector<Tensor<float>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor<float>*> params_;
  AdamConfig config_;
  std::vector<Tensor<float>> m_;
  std::vector<Tensor<float>> v_;
  int step_ = 0;
};

}  // namespace bmfa

#endif  // BMFA_OPTIMIZER_H_

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

#include "bmfa/optimizer.h"

#include <cmath>
#include <string>

namespace bmfa {

void LrSchedule::Validate() const {
  BMFA_REQUIRE(lr_start > 0 && lr_end > 0,
               "schedule: learning rates must be positive");
  BMFA_REQUIRE(total_steps >= 0, "schedule: total steps must be >= 0");
}

double LrSchedule::At(int step) const {
  if (total_steps <= 1) return lr_start;
  const double frac = static_cast<double>(step) / (total_steps - 1);
  return lr_start * std::pow(lr_end / lr_start, frac);
}

Adam::Adam(std::vector<Tensor<float>*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (auto* p : params_) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void Adam::Step(const std::vector<const Tensor<float>*>& grads, double lr) {
  BMFA_REQUIRE(grads.size() == params_.size(),
               "adam: expected " + std::to_string(params_.size()) +
                   " gradients, got " + std::to_string(grads.size()));
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i]) continue;
    BMFA_REQUIRE(grads[i]->shape() == params_[i]->shape(),
                 "adam: gradient shape mismatch for parameter " +
                     std::to_string(i));
    for (float g : grads[i]->values()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam: non-finite gradient for parameter " +
                           std::to_string(i) + "; step rejected");
      }
    }
  }
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, step_);
  const double c2 = 1.0 - std::pow(b2, step_);
  for (size_t i = 0; i < params_.size(); ++i) {
    float* p = params_[i]->data();
    float* m = m_[i].data();
    float* v = v_[i].data();
    const float* g = grads[i] ? grads[i]->data() : nullptr;
    for (size_t j = 0; j < params_[i]->size(); ++j) {
      const double gj = g ? g[j] : 0.0;
      m[j] = static_cast<float>(b1 * m[j] + (1 - b1) * gj);
      v[j] = static_cast<float>(b2 * v[j] + (1 - b2) * gj * gj);
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] = static_cast<float>(p[j] - lr * mhat / (std::sqrt(vhat) +
                                                    config_.eps));
    }
  }
}

}  // namespace bmfa

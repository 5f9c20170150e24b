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

#ifndef BMFA_PARAMS_H_
#define BMFA_PARAMS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bmfa/kernels.h"
#include "bmfa/tensor.h"

namespace bmfa {

using Rng = std::mt19937_64;

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor;
  bool trainable;
};

// Flat, ordered view of a model's tensors under dotted names such as
// "backbone.stage2.block1.conv1.weight". Holds pointers into the model, so
// it must be rebuilt if the model is moved.
template <typename T>
class ParamList {
 public:
  void Add(const std::string& name, Tensor<T>& t, bool trainable) {
    refs_.push_back({name, &t, trainable});
  }
  void AddConv(const std::string& prefix, ConvParams<T>& p) {
    Add(prefix + ".weight", p.weight, true);
    if (p.bias) Add(prefix + ".bias", *p.bias, true);
  }
  void AddLinear(const std::string& prefix, LinearParams<T>& p) {
    Add(prefix + ".weight", p.weight, true);
    if (p.bias) Add(prefix + ".bias", *p.bias, true);
  }
  void AddBatchNorm(const std::string& prefix, BatchNormState<T>& s) {
    Add(prefix + ".gamma", s.gamma, true);
    Add(prefix + ".beta", s.beta, true);
    Add(prefix + ".running_mean", s.running_mean, false);
    Add(prefix + ".running_var", s.running_var, false);
    batch_norms_.push_back(&s);
  }

  const std::vector<ParamRef<T>>& refs() const { return refs_; }
  const std::vector<BatchNormState<T>*>& batch_norms() const {
    return batch_norms_;
  }

  // Throws InvalidInput for an unknown name.
  Tensor<T>& Get(const std::string& name) const;
  size_t TrainableCount() const;
  void SetMode(BnMode mode) const {
    for (auto* bn : batch_norms_) bn->mode = mode;
  }

 private:
  std::vector<ParamRef<T>> refs_;
  std::vector<BatchNormState<T>*> batch_norms_;
};

// He-normal weights, std = sqrt(2 / fan_in). Samples are drawn in double so
// float and double models built from one seed agree up to rounding.
template <typename T>
ConvParams<T> HeConv(Rng& rng, int cout, int cin, int kt, int kf,
                     ConvGeometry geometry = {}, bool bias = false);

template <typename T>
LinearParams<T> HeLinear(Rng& rng, int dout, int din, bool bias);

// Fills with N(0, stddev^2) using the shared sampling path.
template <typename T>
void FillNormal(Rng& rng, Tensor<T>& t, double stddev);

}  // namespace bmfa

#endif  // BMFA_PARAMS_H_

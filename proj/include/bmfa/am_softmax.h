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

#ifndef BMFA_AM_SOFTMAX_H_
#define BMFA_AM_SOFTMAX_H_

#include <vector>

#include "bmfa/params.h"
#include "bmfa/tape.h"
#include "bmfa/tensor.h"

namespace bmfa {

struct AmSoftmaxConfig {
  double margin = 0.15;
  double scale = 30.0;
  void Validate() const;
};

template <typename T>
struct AmSoftmaxResult {
  T loss = 0;
  int correct = 0;           // argmax of the plain cosines equals the label
  Tensor<T> grad_embedding;  // empty unless gradients were requested
  Tensor<T> grad_weight;
};

// Additive-margin softmax. embeddings: (N, D, 1, 1); class weights:
// (K, D, 1, 1), one row per class, normalized at every call. Logits are
// s * cos for the other classes and s * (cos - m) for the label; the loss is
// the batch mean of the cross-entropy.
template <typename T>
AmSoftmaxResult<T> AmSoftmaxLoss(const Tensor<T>& embeddings,
                                 const Tensor<T>& weight,
                                 const std::vector<int>& labels,
                                 const AmSoftmaxConfig& config,
                                 bool with_grads = true);

// Class weights as stored in a checkpoint ("classifier.weight").
template <typename T>
Tensor<T> InitClassifier(Rng& rng, int n_classes, int dim);

namespace nn {

// Records the loss as a (1,1,1,1) node; *correct receives the batch count
// of correct predictions when non-null.
template <typename T>
Var AmSoftmax(Tape<T>& tape, Var embeddings, Var weight,
              const std::vector<int>& labels, const AmSoftmaxConfig& config,
              int* correct = nullptr);

}  // namespace nn
}  // namespace bmfa

#endif  // BMFA_AM_SOFTMAX_H_

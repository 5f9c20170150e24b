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

#include "bmfa/am_softmax.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace bmfa {
namespace {

// Rows of a (R, D, 1, 1) tensor scaled to unit norm; norms returned.
template <typename T>
std::vector<double> Normalize(const Tensor<T>& x, std::vector<double>& unit,
                              const char* what) {
  const int rows = x.n();
  const int dim = x.c() * x.t() * x.f();
  std::vector<double> norms(rows);
  unit.assign(static_cast<size_t>(rows) * dim, 0.0);
  for (int r = 0; r < rows; ++r) {
    const T* src = x.data() + static_cast<size_t>(r) * dim;
    double ss = 0;
    for (int d = 0; d < dim; ++d) ss += double(src[d]) * src[d];
    const double norm = std::sqrt(ss);
    if (!(norm > 0) || !std::isfinite(norm)) {
      throw NumericError(std::string("am-softmax: ") + what + " row " +
                         std::to_string(r) + " has zero or non-finite norm");
    }
    norms[r] = norm;
    for (int d = 0; d < dim; ++d) unit[size_t(r) * dim + d] = src[d] / norm;
  }
  return norms;
}

// Gradient through u = x / |x| for one row.
void UnitBackward(const double* u, double norm, const double* g, int dim,
                  double* out) {
  double dot = 0;
  for (int d = 0; d < dim; ++d) dot += u[d] * g[d];
  for (int d = 0; d < dim; ++d) out[d] = (g[d] - u[d] * dot) / norm;
}

}  // namespace

void AmSoftmaxConfig::Validate() const {
  BMFA_REQUIRE(margin >= 0, "am-softmax: margin must be >= 0");
  BMFA_REQUIRE(scale > 0, "am-softmax: scale must be > 0");
}

template <typename T>
AmSoftmaxResult<T> AmSoftmaxLoss(const Tensor<T>& embeddings,
                                 const Tensor<T>& weight,
                                 const std::vector<int>& labels,
                                 const AmSoftmaxConfig& config,
                                 bool with_grads) {
  config.Validate();
  const int n = embeddings.n();
  const int k = weight.n();
  const int dim = embeddings.c() * embeddings.t() * embeddings.f();
  BMFA_REQUIRE(weight.c() * weight.t() * weight.f() == dim,
               "am-softmax: embedding dim " + std::to_string(dim) +
                   " does not match class weights " +
                   weight.shape().ToString());
  BMFA_REQUIRE(static_cast<int>(labels.size()) == n,
               "am-softmax: expected " + std::to_string(n) + " labels");
  for (int y : labels) {
    BMFA_REQUIRE(y >= 0 && y < k, "am-softmax: label " + std::to_string(y) +
                                      " outside [0, " + std::to_string(k) +
                                      ")");
  }
  std::vector<double> u, v;
  const std::vector<double> enorm = Normalize(embeddings, u, "embedding");
  const std::vector<double> wnorm = Normalize(weight, v, "class weight");
  const double s = config.scale;
  const double m = config.margin;

  AmSoftmaxResult<T> result;
  std::vector<double> dcos(static_cast<size_t>(n) * k);  // dL/dcos
  double total = 0;
  std::vector<double> z(k);
  for (int i = 0; i < n; ++i) {
    const double* ui = &u[size_t(i) * dim];
    int best = 0;
    double best_cos = -2;
    for (int j = 0; j < k; ++j) {
      const double* vj = &v[size_t(j) * dim];
      double c = 0;
      for (int d = 0; d < dim; ++d) c += ui[d] * vj[d];
      if (c > best_cos) {
        best_cos = c;
        best = j;
      }
      z[j] = s * (c - (j == labels[i] ? m : 0.0));
    }
    if (best == labels[i]) ++result.correct;
    int top = 0;
    for (int j = 1; j < k; ++j) {
      if (z[j] > z[top]) top = j;
    }
    double rest = 0;
    for (int j = 0; j < k; ++j) {
      if (j != top) rest += std::exp(z[j] - z[top]);
    }
    // log-sum-exp minus the label logit, with log1p keeping tiny losses
    // accurate.
    total += (z[top] - z[labels[i]]) + std::log1p(rest);
    const double denom = 1.0 + rest;
    for (int j = 0; j < k; ++j) {
      const double p = (j == top ? 1.0 : std::exp(z[j] - z[top])) / denom;
      dcos[size_t(i) * k + j] =
          s * (p - (j == labels[i] ? 1.0 : 0.0)) / n;
    }
  }
  result.loss = static_cast<T>(total / n);
  if (!std::isfinite(total)) throw NumericError("am-softmax: loss is not finite");
  if (!with_grads) return result;

  result.grad_embedding = Tensor<T>(embeddings.shape());
  result.grad_weight = Tensor<T>(weight.shape());
  std::vector<double> g(dim), out(dim);
  for (int i = 0; i < n; ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    for (int j = 0; j < k; ++j) {
      const double c = dcos[size_t(i) * k + j];
      const double* vj = &v[size_t(j) * dim];
      for (int d = 0; d < dim; ++d) g[d] += c * vj[d];
    }
    UnitBackward(&u[size_t(i) * dim], enorm[i], g.data(), dim, out.data());
    T* dst = result.grad_embedding.data() + size_t(i) * dim;
    for (int d = 0; d < dim; ++d) dst[d] = static_cast<T>(out[d]);
  }
  for (int j = 0; j < k; ++j) {
    std::fill(g.begin(), g.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double c = dcos[size_t(i) * k + j];
      const double* ui = &u[size_t(i) * dim];
      for (int d = 0; d < dim; ++d) g[d] += c * ui[d];
    }
    UnitBackward(&v[size_t(j) * dim], wnorm[j], g.data(), dim, out.data());
    T* dst = result.grad_weight.data() + size_t(j) * dim;
    for (int d = 0; d < dim; ++d) dst[d] = static_cast<T>(out[d]);
  }
  return result;
}

template <typename T>
Tensor<T> InitClassifier(Rng& rng, int n_classes, int dim) {
  BMFA_REQUIRE(n_classes >= 2, "am-softmax: need at least two classes");
  Tensor<T> w({n_classes, dim, 1, 1});
  FillNormal(rng, w, 1.0 / std::sqrt(static_cast<double>(dim)));
  return w;
}

namespace nn {

template <typename T>
Var AmSoftmax(Tape<T>& tape, Var embeddings, Var weight,
              const std::vector<int>& labels, const AmSoftmaxConfig& config,
              int* correct) {
  auto r = AmSoftmaxLoss(tape.value(embeddings), tape.value(weight), labels,
                         config, true);
  if (correct) *correct = r.correct;
  auto ge = std::make_shared<Tensor<T>>(std::move(r.grad_embedding));
  auto gw = std::make_shared<Tensor<T>>(std::move(r.grad_weight));
  return tape.Record(
      Tensor<T>({1, 1, 1, 1}, r.loss), {embeddings, weight},
      [embeddings, weight, ge, gw](Tape<T>& t, const Tensor<T>& g) {
        t.Accumulate(embeddings, Scale(g[0], *ge));
        t.Accumulate(weight, Scale(g[0], *gw));
      });
}

}  // namespace nn

#define BMFA_INSTANTIATE_AM(T)                                               \
  template AmSoftmaxResult<T> AmSoftmaxLoss(                                 \
      const Tensor<T>&, const Tensor<T>&, const std::vector<int>&,           \
      const AmSoftmaxConfig&, bool);                                         \
  template Tensor<T> InitClassifier<T>(Rng&, int, int);                      \
  template Var nn::AmSoftmax(Tape<T>&, Var, Var, const std::vector<int>&,    \
                             const AmSoftmaxConfig&, int*);

BMFA_INSTANTIATE_AM(float)
BMFA_INSTANTIATE_AM(double)

#undef BMFA_INSTANTIATE_AM

}  // namespace bmfa

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

#include "bmfa/gradcheck.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include "bmfa/afm.h"
#include "bmfa/aggregation.h"
#include "bmfa/am_softmax.h"
#include "bmfa/backbone.h"
#include "bmfa/graph.h"
#include "bmfa/params.h"

namespace bmfa {
namespace {

using D = double;
using BuildFn = std::function<Var(Tape<D>&, const std::vector<Var>&)>;

// A scalar-valued computation with named leaves. The probe turns a tensor
// output into a scalar through a fixed random weighting.
struct Problem {
  std::vector<std::pair<std::string, Tensor<D>>> inputs;
  ParamList<D> params;
  BuildFn build;
  std::shared_ptr<void> owner;  // keeps parameter storage alive
  int max_coords = 0;           // 0: use the option value
  Tensor<D> probe;
};

Tensor<D> Random(Rng& rng, Shape s, double scale = 1.0) {
  Tensor<D> t(s);
  FillNormal(rng, t, scale);
  return t;
}

// Values bounded away from zero so ReLU kinks stay outside the stencil.
Tensor<D> AwayFromZero(Rng& rng, Shape s) {
  Tensor<D> t = Random(rng, s);
  for (auto& v : t.values()) v = (v >= 0 ? 0.2 : -0.2) + v;
  return t;
}

void RandomizeBatchNorm(Rng& rng, BatchNormState<D>& bn, BnMode mode) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (auto& v : bn.gamma.values()) v = u(rng);
  for (auto& v : bn.beta.values()) v = u(rng) - 1.0;
  for (auto& v : bn.running_mean.values()) v = u(rng) - 1.0;
  for (auto& v : bn.running_var.values()) v = u(rng);
  bn.mode = mode;
}

Var Loss(Problem& p, Tape<D>& tape, Rng* probe_rng) {
  std::vector<Var> leaves;
  for (auto& [name, value] : p.inputs) leaves.push_back(tape.Input(value, true));
  Var out = p.build(tape, leaves);
  if (p.probe.empty()) p.probe = Random(*probe_rng, tape.value(out).shape());
  return nn::WeightedSum(tape, out, p.probe);
}

double Evaluate(Problem& p) {
  Tape<D> tape;
  return tape.value(Loss(p, tape, nullptr))[0];
}

using Factory = std::function<Problem(Rng&)>;

template <typename Fn>
Problem Unary(Tensor<D> x, Fn fn) {
  Problem p;
  p.inputs = {{"x", std::move(x)}};
  p.build = [fn](Tape<D>& t, const std::vector<Var>& v) { return fn(t, v[0]); };
  return p;
}

template <typename Fn>
Problem Binary(Tensor<D> x, Tensor<D> y, Fn fn) {
  Problem p;
  p.inputs = {{"x", std::move(x)}, {"y", std::move(y)}};
  p.build = [fn](Tape<D>& t, const std::vector<Var>& v) {
    return fn(t, v[0], v[1]);
  };
  return p;
}

template <typename Owned>
Problem WithOwner(std::shared_ptr<Owned> owned, Tensor<D> x,
                  std::function<Var(Tape<D>&, Owned&, Var)> fn) {
  Problem p;
  p.inputs = {{"x", std::move(x)}};
  p.owner = owned;
  Owned* raw = owned.get();
  p.build = [raw, fn](Tape<D>& t, const std::vector<Var>& v) {
    return fn(t, *raw, v[0]);
  };
  return p;
}

Problem ConvProblem(Rng& rng, Shape x, int cout, int k, ConvGeometry g,
                    bool bias) {
  auto conv = std::make_shared<ConvParams<D>>(
      HeConv<D>(rng, cout, x.c, k, k, g, bias));
  if (conv->bias) FillNormal(rng, *conv->bias, 0.5);
  Problem p = WithOwner<ConvParams<D>>(
      conv, Random(rng, x),
      [](Tape<D>& t, ConvParams<D>& c, Var v) { return nn::Conv(t, v, c); });
  p.params.AddConv("conv", *conv);
  return p;
}

Problem BatchNormProblem(Rng& rng, BnMode mode) {
  auto bn = std::make_shared<BatchNormState<D>>(
      BatchNormState<D>::Identity(3));
  RandomizeBatchNorm(rng, *bn, mode);
  Problem p = WithOwner<BatchNormState<D>>(
      bn, Random(rng, {3, 3, 4, 5}, 2.0),
      [](Tape<D>& t, BatchNormState<D>& s, Var v) {
        return nn::BatchNorm(t, v, s);
      });
  p.params.AddBatchNorm("bn", *bn);
  return p;
}

Problem NetworkProblem(Rng& rng, Strategy strategy,
                       std::optional<Fusion> fusion) {
  ModelConfig config;
  config.id.strategy = strategy;
  config.id.fusion = fusion;
  config.backbone.width = 4;
  config.backbone.blocks = {1, 1, 1, 1};
  config.embedding_dim = 16;
  auto net = std::make_shared<SpeakerNet<D>>(
      SpeakerNet<D>::Build(config, rng()));
  Problem p = WithOwner<SpeakerNet<D>>(
      net, Random(rng, {3, 1, 8, 64}),
      [](Tape<D>& t, SpeakerNet<D>& n, Var v) { return n.Forward(t, v); });
  p.params = net->Params();
  p.max_coords = 3;
  return p;
}

const std::vector<std::pair<std::string, Factory>>& Registry() {
  static const auto* registry =
      new std::vector<std::pair<std::string, Factory>>{
          {"conv2d",
           [](Rng& r) { return ConvProblem(r, {2, 3, 6, 5}, 4, 3,
                                           {1, 1, 1, 1}, true); }},
          {"conv2d_stride",
           [](Rng& r) { return ConvProblem(r, {2, 2, 7, 8}, 3, 3,
                                           {2, 2, 1, 1}, false); }},
          {"conv2d_7x7",
           [](Rng& r) { return ConvProblem(r, {1, 1, 9, 8}, 2, 7,
                                           {1, 1, 3, 3}, false); }},
          {"batchnorm_train",
           [](Rng& r) { return BatchNormProblem(r, BnMode::kTrain); }},
          {"batchnorm_infer",
           [](Rng& r) { return BatchNormProblem(r, BnMode::kInfer); }},
          {"relu",
           [](Rng& r) {
             return Unary(AwayFromZero(r, {2, 3, 4, 5}),
                          [](Tape<D>& t, Var x) { return nn::Relu(t, x); });
           }},
          {"tanh",
           [](Rng& r) {
             return Unary(Random(r, {2, 3, 4, 5}),
                          [](Tape<D>& t, Var x) { return nn::Tanh(t, x); });
           }},
          {"upsample_freq",
           [](Rng& r) {
             return Unary(Random(r, {2, 2, 3, 4}), [](Tape<D>& t, Var x) {
               return nn::UpsampleFreq2x(t, x);
             });
           }},
          {"concat",
           [](Rng& r) {
             return Binary(Random(r, {2, 2, 3, 4}), Random(r, {2, 3, 3, 4}),
                           [](Tape<D>& t, Var x, Var y) {
                             return nn::Concat(t, x, y);
                           });
           }},
          {"stats_pool",
           [](Rng& r) {
             return Unary(Random(r, {2, 3, 5, 4}), [](Tape<D>& t, Var x) {
               return nn::StatsPool(t, x);
             });
           }},
          {"linear",
           [](Rng& r) {
             auto lin = std::make_shared<LinearParams<D>>(
                 HeLinear<D>(r, 4, 6, true));
             FillNormal(r, *lin->bias, 0.5);
             Problem p = WithOwner<LinearParams<D>>(
                 lin, Random(r, {3, 6, 1, 1}),
                 [](Tape<D>& t, LinearParams<D>& l, Var x) {
                   return nn::Linear(t, x, l);
                 });
             p.params.AddLinear("linear", *lin);
             return p;
           }},
          {"ew_add",
           [](Rng& r) {
             return Binary(Random(r, {2, 3, 4, 5}), Random(r, {2, 3, 4, 5}),
                           [](Tape<D>& t, Var x, Var y) {
                             return nn::Add(t, x, y);
                           });
           }},
          {"ew_mul",
           [](Rng& r) {
             return Binary(Random(r, {2, 3, 4, 5}), Random(r, {2, 3, 4, 5}),
                           [](Tape<D>& t, Var x, Var y) {
                             return nn::Mul(t, x, y);
                           });
           }},
          {"ew_scalar",
           [](Rng& r) {
             return Binary(Random(r, {2, 3, 4, 5}), Random(r, {2, 3, 4, 5}),
                           [](Tape<D>& t, Var x, Var y) {
                             return nn::Mul(t, nn::OnePlus(t, x),
                                            nn::OneMinus(t, y));
                           });
           }},
          {"am_softmax",
           [](Rng& r) {
             return Binary(
                 Random(r, {4, 6, 1, 1}), Random(r, {3, 6, 1, 1}),
                 [](Tape<D>& t, Var e, Var w) {
                   return nn::AmSoftmax(t, e, w, {0, 2, 1, 2},
                                        AmSoftmaxConfig{});
                 });
           }},
          {"basic_block",
           [](Rng& r) {
             auto blk = std::make_shared<BasicBlockParams<D>>(
                 BuildBasicBlock<D>(r, 2, 4, {2, 2, 0, 0}));
             Problem p = WithOwner<BasicBlockParams<D>>(
                 blk, Random(r, {2, 2, 6, 6}),
                 [](Tape<D>& t, BasicBlockParams<D>& b, Var x) {
                   return BasicBlockForward(t, b, x);
                 });
             p.params.AddConv("conv1", blk->conv1);
             p.params.AddBatchNorm("bn1", blk->bn1);
             p.params.AddConv("conv2", blk->conv2);
             p.params.AddBatchNorm("bn2", blk->bn2);
             p.params.AddConv("proj", *blk->proj);
             p.params.AddBatchNorm("proj_bn", *blk->proj_bn);
             return p;
           }},
          {"basic_block_identity",
           [](Rng& r) {
             auto blk = std::make_shared<BasicBlockParams<D>>(
                 BuildBasicBlock<D>(r, 3, 3, {}));
             Problem p = WithOwner<BasicBlockParams<D>>(
                 blk, Random(r, {2, 3, 5, 4}),
                 [](Tape<D>& t, BasicBlockParams<D>& b, Var x) {
                   return BasicBlockForward(t, b, x);
                 });
             p.params.AddConv("conv1", blk->conv1);
             p.params.AddBatchNorm("bn1", blk->bn1);
             p.params.AddConv("conv2", blk->conv2);
             p.params.AddBatchNorm("bn2", blk->bn2);
             return p;
           }},
          {"afm",
           [](Rng& r) {
             auto afm = std::make_shared<AfmParams<D>>(BuildAfm<D>(8, 4, r));
             RandomizeBatchNorm(r, afm->bn1, BnMode::kTrain);
             RandomizeBatchNorm(r, afm->bn2, BnMode::kTrain);
             Problem p;
             p.inputs = {{"x", Random(r, {2, 8, 3, 4})},
                         {"y", Random(r, {2, 8, 3, 4})}};
             p.owner = afm;
             AfmParams<D>* raw = afm.get();
             p.build = [raw](Tape<D>& t, const std::vector<Var>& v) {
               return AfmFuse(t, *raw, v[0], v[1]);
             };
             afm->Collect("afm", p.params);
             return p;
           }},
          {"tiny_network",
           [](Rng& r) {
             return NetworkProblem(r, Strategy::kBmfa, Fusion::kAfm);
           }},
          {"tiny_network_bmfa_concat",
           [](Rng& r) {
             return NetworkProblem(r, Strategy::kBmfa, Fusion::kConcat);
           }},
          {"tiny_network_mfa_s34_concat",
           [](Rng& r) {
             return NetworkProblem(r, Strategy::kMfaS34, Fusion::kConcat);
           }},
          {"tiny_network_mea_fpm_add",
           [](Rng& r) {
             return NetworkProblem(r, Strategy::kMeaFpm, Fusion::kAdd);
           }},
          {"tiny_network_baseline",
           [](Rng& r) {
             return NetworkProblem(r, Strategy::kBaseline, std::nullopt);
           }},
      };
  return *registry;
}

double RelError(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

std::vector<size_t> SampleCoords(Rng& rng, size_t size, int max_coords) {
  std::vector<size_t> idx(size);
  std::iota(idx.begin(), idx.end(), size_t{0});
  if (size <= static_cast<size_t>(max_coords)) return idx;
  for (int i = 0; i < max_coords; ++i) {
    std::uniform_int_distribution<size_t> pick(i, size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_coords);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<std::string> GradCheckOps() {
  std::vector<std::string> ids;
  for (const auto& [id, factory] : Registry()) ids.push_back(id);
  return ids;
}

GradCheckReport GradCheck(const std::string& op, uint64_t seed,
                          const GradCheckOptions& options) {
  const auto& registry = Registry();
  auto it = std::find_if(registry.begin(), registry.end(),
                         [&](const auto& e) { return e.first == op; });
  BMFA_REQUIRE(it != registry.end(), "gradcheck: unknown op '" + op + "'");
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  Problem p = it->second(rng);
  const int max_coords = p.max_coords > 0 ? p.max_coords : options.max_coords;

  // Analytic gradients, copied out before any perturbation.
  std::vector<std::pair<std::string, Tensor<D>*>> targets;
  std::vector<Tensor<D>> analytic;
  double loss_value = 0;
  {
    Tape<D> tape;
    Var loss = Loss(p, tape, &rng);
    loss_value = tape.value(loss)[0];
    tape.Backward(loss);
    for (size_t i = 0; i < p.inputs.size(); ++i) {
      targets.emplace_back(p.inputs[i].first, &p.inputs[i].second);
      const Tensor<D>* g = tape.GradOf(Var{static_cast<int>(i)});
      analytic.push_back(g ? *g : Tensor<D>(p.inputs[i].second.shape()));
    }
    for (const auto& ref : p.params.refs()) {
      if (!ref.trainable) continue;
      targets.emplace_back(ref.name, ref.tensor);
      const Tensor<D>* g = tape.GradFor(ref.tensor);
      analytic.push_back(g ? *g : Tensor<D>(ref.tensor->shape()));
    }
  }

  GradCheckReport report;
  report.op = op;
  report.tolerance = options.tolerance;
  const double h = options.step;
  const double resolution = 1000.0 * std::numeric_limits<double>::epsilon() *
                            std::max(1.0, std::abs(loss_value)) / h;
  for (size_t k = 0; k < targets.size(); ++k) {
    Tensor<D>& t = *targets[k].second;
    for (size_t i : SampleCoords(rng, t.size(), max_coords)) {
      const double saved = t[i];
      auto central = [&](double step) {
        t[i] = saved + step;
        const double up = Evaluate(p);
        t[i] = saved - step;
        const double down = Evaluate(p);
        t[i] = saved;
        return (up - down) / (2 * step);
      };
      const double numeric = central(h);
      const double half = central(h / 2);
      const double a = analytic[k][i] * (1.0 + options.corrupt);
      ++report.coords;
      const double err = RelError(a, numeric);
      if (err >= options.tolerance) {
        if (std::abs(a - numeric) < resolution) {
          ++report.noise_limited;
          continue;
        }
        if (RelError(numeric, half) >= options.tolerance &&
            std::abs(numeric - half) >= resolution) {
          ++report.unresolved;
          continue;
        }
      }
      if (report.worst.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = targets[k].first + "[" + std::to_string(i) + "]";
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.pass = report.max_rel_error < report.tolerance &&
                report.unresolved <=
                    options.max_unresolved_fraction * report.coords;
  report.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return report;
}

std::vector<GradCheckReport> RunGradChecks(const std::string& filter,
                                           uint64_t seed,
                                           const GradCheckOptions& options) {
  std::vector<GradCheckReport> reports;
  for (const auto& id : GradCheckOps()) {
    if (!filter.empty() && id.find(filter) == std::string::npos) continue;
    reports.push_back(GradCheck(id, seed, options));
  }
  return reports;
}

}  // namespace bmfa

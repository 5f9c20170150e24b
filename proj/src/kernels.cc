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

#include "bmfa/kernels.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "bmfa/parallel.h"

namespace bmfa {
namespace {

template <typename T>
using RowMatrix =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMatrix<T>>;

struct ConvDims {
  int n, cin, t, f;
  int cout, kt, kf;
  int ot, of;
  int rows() const { return cin * kt * kf; }
  int cols() const { return ot * of; }
};

bool IsPointwise(const ConvDims& d, const ConvGeometry& g) {
  return d.kt == 1 && d.kf == 1 && g.stride_t == 1 && g.stride_f == 1 &&
         g.pad_t == 0 && g.pad_f == 0;
}

template <typename T>
ConvDims CheckConv(const Tensor<T>& x, const ConvParams<T>& p) {
  const Shape& ws = p.weight.shape();
  BMFA_REQUIRE(!p.weight.empty(), "conv2d: empty weight");
  BMFA_REQUIRE(ws.c == x.c(), "conv2d: weight expects " +
                                  std::to_string(ws.c) +
                                  " input channels, input has " +
                                  std::to_string(x.c()));
  const ConvGeometry& g = p.geometry;
  BMFA_REQUIRE(g.stride_t >= 1 && g.stride_f >= 1, "conv2d: bad stride");
  BMFA_REQUIRE(x.t() + 2 * g.pad_t >= ws.t && x.f() + 2 * g.pad_f >= ws.f,
               "conv2d: padded input " + x.shape().ToString() +
                   " smaller than kernel " + ws.ToString());
  if (p.bias) {
    BMFA_REQUIRE(p.bias->size() == static_cast<size_t>(ws.n),
                 "conv2d: bias length mismatch");
  }
  const Shape out = ConvOutputShape(x.shape(), ws, g);
  return {x.n(), x.c(), x.t(), x.f(), ws.n, ws.t, ws.f, out.t, out.f};
}

template <typename T>
void Im2Col(const T* x, const ConvDims& d, const ConvGeometry& g, T* cols) {
  for (int c = 0; c < d.cin; ++c) {
    for (int kt = 0; kt < d.kt; ++kt) {
      for (int kf = 0; kf < d.kf; ++kf) {
        T* row = cols + static_cast<size_t>((c * d.kt + kt) * d.kf + kf) *
                            d.cols();
        for (int ot = 0; ot < d.ot; ++ot) {
          const int it = ot * g.stride_t - g.pad_t + kt;
          T* dst = row + static_cast<size_t>(ot) * d.of;
          if (it < 0 || it >= d.t) {
            std::fill(dst, dst + d.of, T(0));
            continue;
          }
          const T* src = x + (static_cast<size_t>(c) * d.t + it) * d.f;
          for (int of = 0; of < d.of; ++of) {
            const int jf = of * g.stride_f - g.pad_f + kf;
            dst[of] = (jf < 0 || jf >= d.f) ? T(0) : src[jf];
          }
        }
      }
    }
  }
}

template <typename T>
void Col2Im(const T* cols, const ConvDims& d, const ConvGeometry& g, T* x) {
  for (int c = 0; c < d.cin; ++c) {
    for (int kt = 0; kt < d.kt; ++kt) {
      for (int kf = 0; kf < d.kf; ++kf) {
        const T* row = cols + static_cast<size_t>((c * d.kt + kt) * d.kf +
                                                  kf) * d.cols();
        for (int ot = 0; ot < d.ot; ++ot) {
          const int it = ot * g.stride_t - g.pad_t + kt;
          if (it < 0 || it >= d.t) continue;
          const T* src = row + static_cast<size_t>(ot) * d.of;
          T* dst = x + (static_cast<size_t>(c) * d.t + it) * d.f;
          for (int of = 0; of < d.of; ++of) {
            const int jf = of * g.stride_f - g.pad_f + kf;
            if (jf >= 0 && jf < d.f) dst[jf] += src[of];
          }
        }
      }
    }
  }
}

template <typename T>
void CheckSameShape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  BMFA_REQUIRE(a.shape() == b.shape(),
               std::string(op) + ": shape mismatch " + a.shape().ToString() +
                   " vs " + b.shape().ToString());
}

template <typename T, typename Fn>
Tensor<T> Map1(const Tensor<T>& x, Fn fn) {
  Tensor<T> out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i]);
  return out;
}

template <typename T, typename Fn>
Tensor<T> Map2(const Tensor<T>& x, const Tensor<T>& y, const char* op,
               Fn fn) {
  CheckSameShape(x, y, op);
  Tensor<T> out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i], y[i]);
  return out;
}

}  // namespace

Shape ConvOutputShape(const Shape& x, const Shape& w, const ConvGeometry& g) {
  return {x.n, w.n, (x.t + 2 * g.pad_t - w.t) / g.stride_t + 1,
          (x.f + 2 * g.pad_f - w.f) / g.stride_f + 1};
}

template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const ConvParams<T>& p) {
  const ConvDims d = CheckConv(x, p);
  Tensor<T> y({d.n, d.cout, d.ot, d.of});
  const bool pointwise = IsPointwise(d, p.geometry);
  ConstMap<T> w(p.weight.data(), d.cout, d.rows());
  const size_t in_stride = static_cast<size_t>(d.cin) * d.t * d.f;
  const size_t out_stride = static_cast<size_t>(d.cout) * d.cols();
  ParallelFor(d.n, [&](int n) {
    const T* xn = x.data() + n * in_stride;
    std::vector<T> cols;
    const T* src = xn;
    if (!pointwise) {
      cols.resize(static_cast<size_t>(d.rows()) * d.cols());
      Im2Col(xn, d, p.geometry, cols.data());
      src = cols.data();
    }
    MutMap<T> yn(y.data() + n * out_stride, d.cout, d.cols());
    yn.noalias() = w * ConstMap<T>(src, d.rows(), d.cols());
    if (p.bias) {
      for (int o = 0; o < d.cout; ++o) yn.row(o).array() += (*p.bias)[o];
    }
  });
  return y;
}

template <typename T>
ConvGrads<T> Conv2dBackward(const Tensor<T>& x, const ConvParams<T>& p,
                            const Tensor<T>& upstream, bool input_grad) {
  const ConvDims d = CheckConv(x, p);
  BMFA_REQUIRE(upstream.shape() == Shape({d.n, d.cout, d.ot, d.of}),
               "conv2d_backward: upstream gradient shape " +
                   upstream.shape().ToString() + " does not match output");
  const bool pointwise = IsPointwise(d, p.geometry);
  ConstMap<T> w(p.weight.data(), d.cout, d.rows());
  const size_t in_stride = static_cast<size_t>(d.cin) * d.t * d.f;
  const size_t out_stride = static_cast<size_t>(d.cout) * d.cols();
  const size_t wsize = p.weight.size();

  ConvGrads<T> grads;
  if (input_grad) grads.x = Tensor<T>(x.shape());
  // Per-sample weight gradients, reduced in sample order afterwards so the
  // result does not depend on the thread count.
  std::vector<T> partial(static_cast<size_t>(d.n) * wsize);
  ParallelFor(d.n, [&](int n) {
    const T* xn = x.data() + n * in_stride;
    std::vector<T> cols;
    const T* src = xn;
    if (!pointwise) {
      cols.resize(static_cast<size_t>(d.rows()) * d.cols());
      Im2Col(xn, d, p.geometry, cols.data());
      src = cols.data();
    }
    ConstMap<T> gy(upstream.data() + n * out_stride, d.cout, d.cols());
    MutMap<T> gw(partial.data() + n * wsize, d.cout, d.rows());
    gw.noalias() = gy * ConstMap<T>(src, d.rows(), d.cols()).transpose();
    if (!input_grad) return;
    if (pointwise) {
      MutMap<T> gx(grads.x.data() + n * in_stride, d.cin, d.cols());
      gx.noalias() = w.transpose() * gy;
    } else {
      RowMatrix<T> gcols = w.transpose() * gy;
      Col2Im(gcols.data(), d, p.geometry, grads.x.data() + n * in_stride);
    }
  });
  grads.weight = Tensor<T>(p.weight.shape());
  for (int n = 0; n < d.n; ++n) {
    const T* src = partial.data() + n * wsize;
    T* dst = grads.weight.data();
    for (size_t i = 0; i < wsize; ++i) dst[i] += src[i];
  }
  if (p.bias) {
    grads.bias = Tensor<T>(p.bias->shape());
    for (int n = 0; n < d.n; ++n) {
      for (int o = 0; o < d.cout; ++o) {
        const T* g = upstream.data() + n * out_stride +
                     static_cast<size_t>(o) * d.cols();
        T acc = 0;
        for (int i = 0; i < d.cols(); ++i) acc += g[i];
        grads.bias[o] += acc;
      }
    }
  }
  return grads;
}

template <typename T>
BatchNormState<T> BatchNormState<T>::Identity(int channels) {
  BatchNormState s;
  const Shape shape{1, channels, 1, 1};
  s.gamma = Tensor<T>(shape, T(1));
  s.beta = Tensor<T>(shape, T(0));
  s.running_mean = Tensor<T>(shape, T(0));
  s.running_var = Tensor<T>(shape, T(1));
  return s;
}

template <typename T>
Tensor<T> BatchNorm(const Tensor<T>& x, BatchNormState<T>& s,
                    BatchNormCache<T>* cache) {
  const int channels = x.c();
  BMFA_REQUIRE(s.gamma.size() == static_cast<size_t>(channels) &&
                   s.beta.size() == s.gamma.size() &&
                   s.running_mean.size() == s.gamma.size() &&
                   s.running_var.size() == s.gamma.size(),
               "batchnorm: state has " + std::to_string(s.gamma.size()) +
                   " channels, input has " + std::to_string(channels));
  BMFA_REQUIRE(s.eps >= 0.0, "batchnorm: eps must be non-negative");
  const size_t plane = static_cast<size_t>(x.t()) * x.f();
  const size_t count = plane * x.n();
  if (s.mode == BnMode::kTrain) {
    BMFA_REQUIRE(count > 1,
                 "batchnorm: train mode needs more than one value per "
                 "channel, got input " + x.shape().ToString());
  }

  Tensor<T> y(x.shape());
  Tensor<T> normalized(x.shape());
  std::vector<T> inv_std(channels);
  for (int c = 0; c < channels; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (s.mode == BnMode::kTrain) {
      for (int n = 0; n < x.n(); ++n) {
        const T* p = x.data() + x.Offset(n, c, 0, 0);
        for (size_t i = 0; i < plane; ++i) mean += p[i];
      }
      mean /= static_cast<double>(count);
      for (int n = 0; n < x.n(); ++n) {
        const T* p = x.data() + x.Offset(n, c, 0, 0);
        for (size_t i = 0; i < plane; ++i) {
          const double dv = p[i] - mean;
          var += dv * dv;
        }
      }
      const double unbiased = var / static_cast<double>(count - 1);
      var /= static_cast<double>(count);
      s.running_mean[c] = static_cast<T>((1.0 - s.momentum) *
                                             s.running_mean[c] +
                                         s.momentum * mean);
      s.running_var[c] = static_cast<T>(
          (1.0 - s.momentum) * s.running_var[c] + s.momentum * unbiased);
    } else {
      mean = s.running_mean[c];
      var = s.running_var[c];
    }
    const T istd = static_cast<T>(1.0 / std::sqrt(var + s.eps));
    const T m = static_cast<T>(mean);
    inv_std[c] = istd;
    const T g = s.gamma[c];
    const T b = s.beta[c];
    for (int n = 0; n < x.n(); ++n) {
      const size_t off = x.Offset(n, c, 0, 0);
      for (size_t i = 0; i < plane; ++i) {
        const T xh = (x[off + i] - m) * istd;
        normalized[off + i] = xh;
        y[off + i] = g * xh + b;
      }
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->mode = s.mode;
  }
  return y;
}

template <typename T>
BatchNormGrads<T> BatchNormBackward(const BatchNormCache<T>& cache,
                                    const Tensor<T>& gamma,
                                    const Tensor<T>& upstream) {
  const Tensor<T>& xh = cache.normalized;
  CheckSameShape(xh, upstream, "batchnorm_backward");
  const int channels = xh.c();
  const size_t plane = static_cast<size_t>(xh.t()) * xh.f();
  const double count = static_cast<double>(plane * xh.n());
  BatchNormGrads<T> g;
  g.x = Tensor<T>(xh.shape());
  g.gamma = Tensor<T>({1, channels, 1, 1});
  g.beta = Tensor<T>({1, channels, 1, 1});
  for (int c = 0; c < channels; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < xh.n(); ++n) {
      const size_t off = xh.Offset(n, c, 0, 0);
      for (size_t i = 0; i < plane; ++i) {
        sum_g += upstream[off + i];
        sum_gx += static_cast<double>(upstream[off + i]) * xh[off + i];
      }
    }
    g.gamma[c] = static_cast<T>(sum_gx);
    g.beta[c] = static_cast<T>(sum_g);
    const T scale = gamma[c] * cache.inv_std[c];
    if (cache.mode == BnMode::kTrain) {
      const T mean_g = static_cast<T>(sum_g / count);
      const T mean_gx = static_cast<T>(sum_gx / count);
      for (int n = 0; n < xh.n(); ++n) {
        const size_t off = xh.Offset(n, c, 0, 0);
        for (size_t i = 0; i < plane; ++i) {
          g.x[off + i] =
              scale * (upstream[off + i] - mean_g - xh[off + i] * mean_gx);
        }
      }
    } else {
      for (int n = 0; n < xh.n(); ++n) {
        const size_t off = xh.Offset(n, c, 0, 0);
        for (size_t i = 0; i < plane; ++i) {
          g.x[off + i] = scale * upstream[off + i];
        }
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> Relu(const Tensor<T>& x) {
  return Map1(x, [](T v) { return v > T(0) ? v : T(0); });
}

template <typename T>
Tensor<T> ReluBackward(const Tensor<T>& x, const Tensor<T>& upstream) {
  return Map2(x, upstream, "relu_backward",
              [](T v, T g) { return v > T(0) ? g : T(0); });
}

template <typename T>
Tensor<T> Tanh(const Tensor<T>& x) {
  // Rounding saturates tanh to +-1 for moderate inputs; keep |y| < 1.
  const T limit = std::nextafter(T(1), T(0));
  return Map1(x, [limit](T v) {
    return std::clamp(std::tanh(v), -limit, limit);
  });
}

template <typename T>
Tensor<T> TanhBackward(const Tensor<T>& y, const Tensor<T>& upstream) {
  return Map2(y, upstream, "tanh_backward",
              [](T v, T g) { return g * (T(1) - v * v); });
}

namespace {

struct UpsampleTap {
  int i0;
  int i1;
  double lambda;
};

UpsampleTap UpsampleSource(int dst, int in_f) {
  double src = (dst + 0.5) / 2.0 - 0.5;
  if (src < 0.0) src = 0.0;
  int i0 = static_cast<int>(std::floor(src));
  if (i0 > in_f - 1) i0 = in_f - 1;
  const int i1 = std::min(i0 + 1, in_f - 1);
  return {i0, i1, src - i0};
}

}  // namespace

template <typename T>
Tensor<T> UpsampleFreq2x(const Tensor<T>& x) {
  const int in_f = x.f();
  Tensor<T> y({x.n(), x.c(), x.t(), 2 * in_f});
  std::vector<UpsampleTap> taps(2 * in_f);
  for (int j = 0; j < 2 * in_f; ++j) taps[j] = UpsampleSource(j, in_f);
  const size_t rows = static_cast<size_t>(x.n()) * x.c() * x.t();
  for (size_t r = 0; r < rows; ++r) {
    const T* src = x.data() + r * in_f;
    T* dst = y.data() + r * 2 * in_f;
    for (int j = 0; j < 2 * in_f; ++j) {
      const auto& tp = taps[j];
      const T l = static_cast<T>(tp.lambda);
      dst[j] = (T(1) - l) * src[tp.i0] + l * src[tp.i1];
    }
  }
  return y;
}

template <typename T>
Tensor<T> UpsampleFreq2xBackward(const Tensor<T>& upstream) {
  BMFA_REQUIRE(upstream.f() % 2 == 0,
               "upsample_backward: frequency size must be even");
  const int in_f = upstream.f() / 2;
  Tensor<T> gx({upstream.n(), upstream.c(), upstream.t(), in_f});
  std::vector<UpsampleTap> taps(2 * in_f);
  for (int j = 0; j < 2 * in_f; ++j) taps[j] = UpsampleSource(j, in_f);
  const size_t rows = static_cast<size_t>(gx.n()) * gx.c() * gx.t();
  for (size_t r = 0; r < rows; ++r) {
    const T* g = upstream.data() + r * 2 * in_f;
    T* dst = gx.data() + r * in_f;
    for (int j = 0; j < 2 * in_f; ++j) {
      const auto& tp = taps[j];
      const T l = static_cast<T>(tp.lambda);
      dst[tp.i0] += (T(1) - l) * g[j];
      dst[tp.i1] += l * g[j];
    }
  }
  return gx;
}

template <typename T>
Tensor<T> ConcatChannels(const Tensor<T>& x, const Tensor<T>& y) {
  BMFA_REQUIRE(x.n() == y.n() && x.t() == y.t() && x.f() == y.f(),
               "concat_channels: spatial mismatch " + x.shape().ToString() +
                   " vs " + y.shape().ToString());
  Tensor<T> out({x.n(), x.c() + y.c(), x.t(), x.f()});
  const size_t xs = static_cast<size_t>(x.c()) * x.t() * x.f();
  const size_t ys = static_cast<size_t>(y.c()) * y.t() * y.f();
  for (int n = 0; n < x.n(); ++n) {
    T* dst = out.data() + n * (xs + ys);
    std::copy_n(x.data() + n * xs, xs, dst);
    std::copy_n(y.data() + n * ys, ys, dst + xs);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> SplitChannels(const Tensor<T>& t,
                                              int leading) {
  BMFA_REQUIRE(leading >= 1 && leading < t.c(),
               "split_channels: bad split point");
  Tensor<T> a({t.n(), leading, t.t(), t.f()});
  Tensor<T> b({t.n(), t.c() - leading, t.t(), t.f()});
  const size_t as = a.size() / t.n();
  const size_t bs = b.size() / t.n();
  for (int n = 0; n < t.n(); ++n) {
    const T* src = t.data() + n * (as + bs);
    std::copy_n(src, as, a.data() + n * as);
    std::copy_n(src + as, bs, b.data() + n * bs);
  }
  return {std::move(a), std::move(b)};
}

template <typename T>
Tensor<T> StatsPool(const Tensor<T>& x) {
  const int dims = x.c() * x.f();
  const int frames = x.t();
  Tensor<T> out({x.n(), 2 * dims, 1, 1});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int f = 0; f < x.f(); ++f) {
        double mean = 0.0;
        for (int t = 0; t < frames; ++t) mean += x.at(n, c, t, f);
        mean /= frames;
        double var = 0.0;
        for (int t = 0; t < frames; ++t) {
          const double dv = x.at(n, c, t, f) - mean;
          var += dv * dv;
        }
        var /= frames;
        const int d = c * x.f() + f;
        out.at(n, d, 0, 0) = static_cast<T>(mean);
        out.at(n, dims + d, 0, 0) =
            static_cast<T>(std::sqrt(std::max(var, kStatsPoolVarianceFloor)));
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> StatsPoolBackward(const Tensor<T>& x, const Tensor<T>& pooled,
                            const Tensor<T>& upstream) {
  const int dims = x.c() * x.f();
  const int frames = x.t();
  BMFA_REQUIRE(upstream.shape() == pooled.shape() &&
                   pooled.shape() == Shape({x.n(), 2 * dims, 1, 1}),
               "stats_pool_backward: shape mismatch");
  Tensor<T> gx(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int f = 0; f < x.f(); ++f) {
        const int d = c * x.f() + f;
        const T mean = pooled.at(n, d, 0, 0);
        const T sd = pooled.at(n, dims + d, 0, 0);
        const T g_mean = upstream.at(n, d, 0, 0) / static_cast<T>(frames);
        // Recompute the variance exactly as the forward did: squaring the
        // stored std can land just above the floor and mislabel the branch.
        double dmean = 0.0;
        for (int t = 0; t < frames; ++t) dmean += x.at(n, c, t, f);
        dmean /= frames;
        double var = 0.0;
        for (int t = 0; t < frames; ++t) {
          const double dv = x.at(n, c, t, f) - dmean;
          var += dv * dv;
        }
        var /= frames;
        // The floor branch is constant in x, so it contributes nothing.
        const T g_sd = var <= kStatsPoolVarianceFloor
                           ? T(0)
                           : upstream.at(n, dims + d, 0, 0) /
                                 (static_cast<T>(frames) * sd);
        for (int t = 0; t < frames; ++t) {
          gx.at(n, c, t, f) = g_mean + g_sd * (x.at(n, c, t, f) - mean);
        }
      }
    }
  }
  return gx;
}

template <typename T>
Tensor<T> Linear(const Tensor<T>& x, const LinearParams<T>& p) {
  const int din = p.weight.c();
  const int dout = p.weight.n();
  BMFA_REQUIRE(x.t() == 1 && x.f() == 1 && x.c() == din,
               "linear: input " + x.shape().ToString() +
                   " incompatible with weight " +
                   p.weight.shape().ToString());
  Tensor<T> y({x.n(), dout, 1, 1});
  MutMap<T> ym(y.data(), x.n(), dout);
  ym.noalias() = ConstMap<T>(x.data(), x.n(), din) *
                 ConstMap<T>(p.weight.data(), dout, din).transpose();
  if (p.bias) {
    BMFA_REQUIRE(p.bias->size() == static_cast<size_t>(dout),
                 "linear: bias length mismatch");
    for (int n = 0; n < x.n(); ++n) {
      for (int o = 0; o < dout; ++o) ym(n, o) += (*p.bias)[o];
    }
  }
  return y;
}

template <typename T>
LinearGrads<T> LinearBackward(const Tensor<T>& x, const LinearParams<T>& p,
                              const Tensor<T>& upstream) {
  const int din = p.weight.c();
  const int dout = p.weight.n();
  BMFA_REQUIRE(upstream.shape() == Shape({x.n(), dout, 1, 1}),
               "linear_backward: upstream shape mismatch");
  LinearGrads<T> g;
  ConstMap<T> gy(upstream.data(), x.n(), dout);
  g.x = Tensor<T>(x.shape());
  MutMap<T>(g.x.data(), x.n(), din).noalias() =
      gy * ConstMap<T>(p.weight.data(), dout, din);
  g.weight = Tensor<T>(p.weight.shape());
  MutMap<T>(g.weight.data(), dout, din).noalias() =
      gy.transpose() * ConstMap<T>(x.data(), x.n(), din);
  if (p.bias) {
    g.bias = Tensor<T>(p.bias->shape());
    for (int o = 0; o < dout; ++o) {
      T acc = 0;
      for (int n = 0; n < x.n(); ++n) acc += gy(n, o);
      g.bias[o] = acc;
    }
  }
  return g;
}

template <typename T>
Tensor<T> Add(const Tensor<T>& x, const Tensor<T>& y) {
  return Map2(x, y, "add", [](T a, T b) { return a + b; });
}

template <typename T>
Tensor<T> Sub(const Tensor<T>& x, const Tensor<T>& y) {
  return Map2(x, y, "sub", [](T a, T b) { return a - b; });
}

template <typename T>
Tensor<T> Mul(const Tensor<T>& x, const Tensor<T>& y) {
  return Map2(x, y, "mul", [](T a, T b) { return a * b; });
}

template <typename T>
Tensor<T> AddScalar(T s, const Tensor<T>& x) {
  return Map1(x, [s](T v) { return s + v; });
}

template <typename T>
Tensor<T> ScalarSub(T s, const Tensor<T>& x) {
  return Map1(x, [s](T v) { return s - v; });
}

template <typename T>
Tensor<T> Scale(T s, const Tensor<T>& x) {
  return Map1(x, [s](T v) { return s * v; });
}

#define BMFA_INSTANTIATE_KERNELS(T)                                          \
  template Tensor<T> Conv2d(const Tensor<T>&, const ConvParams<T>&);         \
  template ConvGrads<T> Conv2dBackward(const Tensor<T>&,                     \
                                       const ConvParams<T>&,                 \
                                       const Tensor<T>&, bool);              \
  template struct BatchNormState<T>;                                         \
  template Tensor<T> BatchNorm(const Tensor<T>&, BatchNormState<T>&,         \
                               BatchNormCache<T>*);                          \
  template BatchNormGrads<T> BatchNormBackward(                              \
      const BatchNormCache<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> Relu(const Tensor<T>&);                                 \
  template Tensor<T> ReluBackward(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> Tanh(const Tensor<T>&);                                 \
  template Tensor<T> TanhBackward(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> UpsampleFreq2x(const Tensor<T>&);                       \
  template Tensor<T> UpsampleFreq2xBackward(const Tensor<T>&);               \
  template Tensor<T> ConcatChannels(const Tensor<T>&, const Tensor<T>&);     \
  template std::pair<Tensor<T>, Tensor<T>> SplitChannels(const Tensor<T>&,   \
                                                         int);               \
  template Tensor<T> StatsPool(const Tensor<T>&);                            \
  template Tensor<T> StatsPoolBackward(const Tensor<T>&, const Tensor<T>&,   \
                                       const Tensor<T>&);                    \
  template Tensor<T> Linear(const Tensor<T>&, const LinearParams<T>&);       \
  template LinearGrads<T> LinearBackward(                                    \
      const Tensor<T>&, const LinearParams<T>&, const Tensor<T>&);           \
  template Tensor<T> Add(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> Sub(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> Mul(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> AddScalar(T, const Tensor<T>&);                         \
  template Tensor<T> ScalarSub(T, const Tensor<T>&);                         \
  template Tensor<T> Scale(T, const Tensor<T>&);

BMFA_INSTANTIATE_KERNELS(float)
BMFA_INSTANTIATE_KERNELS(double)

#undef BMFA_INSTANTIATE_KERNELS

}  // namespace bmfa

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vibcnn/tensor.hpp"

// Differentiable layer kernels: 1-D convolution, batch norm, ReLU, max pool,
// global average pool, linear, softmax + cross-entropy. Forward and analytic
// backward for each, templated on the scalar type (float for training,
// double for finite-difference checks).
//
// Convolution is cross-correlation (no kernel flip) with zero padding and no
// bias. Parallel loops only ever partition output elements, and every
// reduction runs in a fixed serial order, so results do not depend on the
// number of worker threads.

namespace vibcnn {

inline int floor_div(int a, int b) {
  const int q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline int ceil_div(int a, int b) { return -floor_div(-a, b); }

inline int conv1d_out_len(int in_len, int kernel, int stride, int padding) {
  if (stride < 1) throw ConfigError("conv stride must be >= 1");
  if (padding < 0) throw ConfigError("conv padding must be >= 0");
  if (kernel < 1) throw ConfigError("conv kernel must be >= 1");
  const int lout = floor_div(in_len + 2 * padding - kernel, stride) + 1;
  if (lout < 1)
    throw ConfigError("conv output length " + std::to_string(lout) +
                      " < 1 (in_len=" + std::to_string(in_len) +
                      ", kernel=" + std::to_string(kernel) +
                      ", stride=" + std::to_string(stride) +
                      ", padding=" + std::to_string(padding) + ")");
  return lout;
}

namespace detail {

// Unrolled input patches for one sample: row r = (ci, k), column = output
// position. Padded positions are zero. row_major selects [R x Lout] (for the
// forward pass) vs [Lout x R] (for weight gradients).
template <typename T, bool row_major>
void im2col(const Tensor3T<T>& x, int b, int kernel, int stride, int padding,
            int lout, T* out) {
  const int r_count = x.channels * kernel;
  std::fill(out, out + static_cast<std::size_t>(r_count) * lout, T(0));
  for (int ci = 0; ci < x.channels; ++ci) {
    const T* xr = x.row(b, ci);
    for (int k = 0; k < kernel; ++k) {
      const int r = ci * kernel + k;
      const int lo_min = std::max(0, ceil_div(padding - k, stride));
      const int lo_max =
          std::min(lout - 1, floor_div(x.length - 1 + padding - k, stride));
      for (int lo = lo_min; lo <= lo_max; ++lo) {
        const T v = xr[lo * stride + k - padding];
        if constexpr (row_major)
          out[static_cast<std::size_t>(r) * lout + lo] = v;
        else
          out[static_cast<std::size_t>(lo) * r_count + r] = v;
      }
    }
  }
}

}  // namespace detail

// weight is [out_channels, in_channels, kernel].
template <typename T>
Tensor3T<T> conv1d_forward(const Tensor3T<T>& x, const Tensor3T<T>& w,
                           int stride, int padding) {
  if (w.channels != x.channels)
    throw ShapeError("conv weight expects " + std::to_string(w.channels) +
                     " input channels, input has " + std::to_string(x.channels));
  const int lout = conv1d_out_len(x.length, w.length, stride, padding);
  const int r_count = x.channels * w.length;
  Tensor3T<T> y(x.batch, w.batch, lout);

#pragma omp parallel for schedule(static)
  for (int b = 0; b < x.batch; ++b) {
    std::vector<T> cols(static_cast<std::size_t>(r_count) * lout);
    detail::im2col<T, true>(x, b, w.length, stride, padding, lout, cols.data());
    for (int co = 0; co < w.batch; ++co) {
      T* yr = y.row(b, co);
      const T* wr = w.row(co, 0);  // contiguous [r_count] block
      for (int r = 0; r < r_count; ++r) {
        const T wv = wr[r];
        const T* cr = cols.data() + static_cast<std::size_t>(r) * lout;
        for (int lo = 0; lo < lout; ++lo) yr[lo] += wv * cr[lo];
      }
    }
  }
  VIBCNN_DEBUG_FINITE(y.data, "conv1d_forward");
  return y;
}

template <typename T>
struct ConvGradsT {
  Tensor3T<T> input;   // empty when skipped
  Tensor3T<T> weight;
};

template <typename T>
ConvGradsT<T> conv1d_backward(const Tensor3T<T>& x, const Tensor3T<T>& w,
                              int stride, int padding, const Tensor3T<T>& gout,
                              bool need_input_grad = true) {
  const int lout = conv1d_out_len(x.length, w.length, stride, padding);
  if (gout.batch != x.batch || gout.channels != w.batch || gout.length != lout)
    throw ShapeError("conv upstream gradient shape " + gout.shape_str() +
                     " does not match output [" + std::to_string(x.batch) + "," +
                     std::to_string(w.batch) + "," + std::to_string(lout) + "]");
  const int r_count = x.channels * w.length;

  // Patches for all samples, transposed so the weight-gradient inner loop is
  // contiguous over r.
  std::vector<T> cols_t(static_cast<std::size_t>(x.batch) * lout * r_count);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < x.batch; ++b)
    detail::im2col<T, false>(x, b, w.length, stride, padding, lout,
                             cols_t.data() + static_cast<std::size_t>(b) * lout * r_count);

  ConvGradsT<T> g;
  g.weight = Tensor3T<T>(w.batch, w.channels, w.length);

#pragma omp parallel for schedule(static)
  for (int co = 0; co < w.batch; ++co) {
    T* gwr = g.weight.row(co, 0);
    for (int b = 0; b < x.batch; ++b) {
      const T* go = gout.row(b, co);
      const T* ct = cols_t.data() + static_cast<std::size_t>(b) * lout * r_count;
      for (int lo = 0; lo < lout; ++lo) {
        const T gv = go[lo];
        const T* row = ct + static_cast<std::size_t>(lo) * r_count;
        for (int r = 0; r < r_count; ++r) gwr[r] += gv * row[r];
      }
    }
  }
  VIBCNN_DEBUG_FINITE(g.weight.data, "conv1d_backward weight");

  if (need_input_grad) {
    g.input = Tensor3T<T>(x.batch, x.channels, x.length);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < x.batch; ++b) {
      // tmp[r, lo] = sum_co w[co, r] * gout[b, co, lo], then fold the
      // patch rows back onto input positions.
      std::vector<T> tmp(static_cast<std::size_t>(r_count) * lout, T(0));
      for (int co = 0; co < w.batch; ++co) {
        const T* go = gout.row(b, co);
        const T* wr = w.row(co, 0);
        for (int r = 0; r < r_count; ++r) {
          const T wv = wr[r];
          T* tr = tmp.data() + static_cast<std::size_t>(r) * lout;
          for (int lo = 0; lo < lout; ++lo) tr[lo] += wv * go[lo];
        }
      }
      for (int ci = 0; ci < x.channels; ++ci) {
        T* gxr = g.input.row(b, ci);
        for (int k = 0; k < w.length; ++k) {
          const int r = ci * w.length + k;
          const T* tr = tmp.data() + static_cast<std::size_t>(r) * lout;
          const int lo_min = std::max(0, ceil_div(padding - k, stride));
          const int lo_max =
              std::min(lout - 1, floor_div(x.length - 1 + padding - k, stride));
          for (int lo = lo_min; lo <= lo_max; ++lo)
            gxr[lo * stride + k - padding] += tr[lo];
        }
      }
    }
    VIBCNN_DEBUG_FINITE(g.input.data, "conv1d_backward input");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization over (batch, length) per channel.

template <typename T>
struct BatchNormStateT {
  std::vector<T> gamma, beta, running_mean, running_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  static BatchNormStateT init(int channels) {
    BatchNormStateT s;
    s.gamma.assign(channels, T(1));
    s.beta.assign(channels, T(0));
    s.running_mean.assign(channels, T(0));
    s.running_var.assign(channels, T(1));
    return s;
  }
  int channels() const { return static_cast<int>(gamma.size()); }
};

template <typename T>
struct BnCacheT {
  Tensor3T<T> x_hat;
  std::vector<T> inv_std;  // 1 / sqrt(var_B + eps) per channel
};

template <typename T>
Tensor3T<T> batchnorm_forward_train(const Tensor3T<T>& x,
                                    BatchNormStateT<T>& bn,
                                    BnCacheT<T>& cache) {
  if (bn.channels() != x.channels)
    throw ShapeError("batchnorm has " + std::to_string(bn.channels()) +
                     " channels, input " + std::to_string(x.channels));
  const std::int64_t n = static_cast<std::int64_t>(x.batch) * x.length;
  if (n < 2)
    throw ConfigError("batchnorm train phase needs batch*length >= 2 per channel, got " +
                      std::to_string(n));

  Tensor3T<T> y(x.batch, x.channels, x.length);
  cache.x_hat = Tensor3T<T>(x.batch, x.channels, x.length);
  cache.inv_std.assign(x.channels, T(0));

#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.channels; ++c) {
    double sum = 0.0;
    for (int b = 0; b < x.batch; ++b) {
      const T* xr = x.row(b, c);
      for (int l = 0; l < x.length; ++l) sum += xr[l];
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (int b = 0; b < x.batch; ++b) {
      const T* xr = x.row(b, c);
      for (int l = 0; l < x.length; ++l) {
        const double d = xr[l] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + static_cast<double>(bn.eps));
    cache.inv_std[c] = static_cast<T>(inv_std);

    const T gamma = bn.gamma[c], beta = bn.beta[c];
    for (int b = 0; b < x.batch; ++b) {
      const T* xr = x.row(b, c);
      T* xh = cache.x_hat.row(b, c);
      T* yr = y.row(b, c);
      for (int l = 0; l < x.length; ++l) {
        const T v = static_cast<T>((xr[l] - mean) * inv_std);
        xh[l] = v;
        yr[l] = gamma * v + beta;
      }
    }
    const T m = bn.momentum;
    bn.running_mean[c] = (T(1) - m) * bn.running_mean[c] + m * static_cast<T>(mean);
    bn.running_var[c] = (T(1) - m) * bn.running_var[c] + m * static_cast<T>(var);
  }
  VIBCNN_DEBUG_FINITE(y.data, "batchnorm_forward_train");
  return y;
}

// Deterministic per-channel affine map (running statistics).
template <typename T>
Tensor3T<T> batchnorm_forward_eval(const Tensor3T<T>& x,
                                   const BatchNormStateT<T>& bn) {
  if (bn.channels() != x.channels)
    throw ShapeError("batchnorm has " + std::to_string(bn.channels()) +
                     " channels, input " + std::to_string(x.channels));
  Tensor3T<T> y(x.batch, x.channels, x.length);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.channels; ++c) {
    const T scale = static_cast<T>(
        bn.gamma[c] / std::sqrt(static_cast<double>(bn.running_var[c]) +
                                static_cast<double>(bn.eps)));
    const T shift = bn.beta[c] - scale * bn.running_mean[c];
    for (int b = 0; b < x.batch; ++b) {
      const T* xr = x.row(b, c);
      T* yr = y.row(b, c);
      for (int l = 0; l < x.length; ++l) yr[l] = scale * xr[l] + shift;
    }
  }
  return y;
}

template <typename T>
struct BnGradsT {
  Tensor3T<T> input;
  std::vector<T> gamma, beta;
};

// Gradient through the batch statistics (train-phase formula).
template <typename T>
BnGradsT<T> batchnorm_backward(const Tensor3T<T>& gout, const BnCacheT<T>& cache,
                               const BatchNormStateT<T>& bn) {
  const Tensor3T<T>& xh = cache.x_hat;
  if (!gout.same_shape(xh))
    throw ShapeError("batchnorm upstream gradient shape " + gout.shape_str() +
                     " does not match forward activation " + xh.shape_str());
  const std::int64_t n = static_cast<std::int64_t>(gout.batch) * gout.length;

  BnGradsT<T> g;
  g.input = Tensor3T<T>(gout.batch, gout.channels, gout.length);
  g.gamma.assign(gout.channels, T(0));
  g.beta.assign(gout.channels, T(0));

#pragma omp parallel for schedule(static)
  for (int c = 0; c < gout.channels; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < gout.batch; ++b) {
      const T* go = gout.row(b, c);
      const T* xr = xh.row(b, c);
      for (int l = 0; l < gout.length; ++l) {
        sum_g += go[l];
        sum_gx += static_cast<double>(go[l]) * xr[l];
      }
    }
    g.gamma[c] = static_cast<T>(sum_gx);
    g.beta[c] = static_cast<T>(sum_g);

    const double coef = static_cast<double>(bn.gamma[c]) * cache.inv_std[c];
    const double mean_g = sum_g / static_cast<double>(n);
    const double mean_gx = sum_gx / static_cast<double>(n);
    for (int b = 0; b < gout.batch; ++b) {
      const T* go = gout.row(b, c);
      const T* xr = xh.row(b, c);
      T* gi = g.input.row(b, c);
      for (int l = 0; l < gout.length; ++l)
        gi[l] = static_cast<T>(coef * (go[l] - mean_g - xr[l] * mean_gx));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor3T<T> relu_forward(const Tensor3T<T>& x) {
  Tensor3T<T> y(x.batch, x.channels, x.length);
  const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  return y;
}

// Upstream masked by (x > 0); the gradient at exactly 0 is 0.
template <typename T>
Tensor3T<T> relu_backward(const Tensor3T<T>& x, const Tensor3T<T>& gout) {
  if (!gout.same_shape(x))
    throw ShapeError("relu upstream gradient shape " + gout.shape_str() +
                     " does not match input " + x.shape_str());
  Tensor3T<T> g(x.batch, x.channels, x.length);
  const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    g.data[i] = x.data[i] > T(0) ? gout.data[i] : T(0);
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
struct MaxPoolOutT {
  Tensor3T<T> output;
  std::vector<std::int32_t> argmax;  // winning input position per output element
};

template <typename T>
MaxPoolOutT<T> maxpool1d_forward(const Tensor3T<T>& x, int k, int stride) {
  if (k < 1 || stride < 1) throw ConfigError("maxpool kernel and stride must be >= 1");
  if (x.length < k)
    throw ConfigError("maxpool window " + std::to_string(k) +
                      " exceeds input length " + std::to_string(x.length));
  const int lout = (x.length - k) / stride + 1;
  MaxPoolOutT<T> out;
  out.output = Tensor3T<T>(x.batch, x.channels, lout);
  out.argmax.assign(out.output.size(), 0);

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < x.batch; ++b)
    for (int c = 0; c < x.channels; ++c) {
      const T* xr = x.row(b, c);
      T* yr = out.output.row(b, c);
      std::int32_t* ar =
          out.argmax.data() +
          (static_cast<std::size_t>(b) * x.channels + c) * lout;
      for (int lo = 0; lo < lout; ++lo) {
        const int start = lo * stride;
        T best = xr[start];
        int best_i = start;
        for (int j = 1; j < k; ++j)
          if (xr[start + j] > best) {  // ties keep the earliest index
            best = xr[start + j];
            best_i = start + j;
          }
        yr[lo] = best;
        ar[lo] = best_i;
      }
    }
  return out;
}

template <typename T>
Tensor3T<T> maxpool1d_backward(int in_len, const Tensor3T<T>& gout,
                               std::span<const std::int32_t> argmax) {
  if (argmax.size() != gout.size())
    throw ShapeError("maxpool argmax size does not match upstream gradient");
  Tensor3T<T> g(gout.batch, gout.channels, in_len);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < gout.batch; ++b)
    for (int c = 0; c < gout.channels; ++c) {
      const T* go = gout.row(b, c);
      const std::int32_t* ar =
          argmax.data() +
          (static_cast<std::size_t>(b) * gout.channels + c) * gout.length;
      T* gi = g.row(b, c);
      for (int lo = 0; lo < gout.length; ++lo) gi[ar[lo]] += go[lo];
    }
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Mat2T<T> global_avg_pool_forward(const Tensor3T<T>& x) {
  Mat2T<T> y(x.batch, x.channels);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < x.batch; ++b)
    for (int c = 0; c < x.channels; ++c) {
      const T* xr = x.row(b, c);
      double s = 0.0;
      for (int l = 0; l < x.length; ++l) s += xr[l];
      y.at(b, c) = static_cast<T>(s / x.length);
    }
  return y;
}

template <typename T>
Tensor3T<T> global_avg_pool_backward(int in_len, const Mat2T<T>& gout) {
  Tensor3T<T> g(gout.rows, gout.cols, in_len);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < gout.rows; ++b)
    for (int c = 0; c < gout.cols; ++c) {
      const T v = gout.at(b, c) / static_cast<T>(in_len);
      T* gr = g.row(b, c);
      for (int l = 0; l < in_len; ++l) gr[l] = v;
    }
  return g;
}

// ---------------------------------------------------------------------------
// y = W x + b per row; W is [out, in].

template <typename T>
Mat2T<T> linear_forward(const Mat2T<T>& x, const Mat2T<T>& w,
                        std::span<const T> bias) {
  if (w.cols != x.cols || static_cast<int>(bias.size()) != w.rows)
    throw ShapeError("linear shapes disagree: x cols " + std::to_string(x.cols) +
                     ", w [" + std::to_string(w.rows) + "," +
                     std::to_string(w.cols) + "], bias " +
                     std::to_string(bias.size()));
  Mat2T<T> y(x.rows, w.rows);
  for (int b = 0; b < x.rows; ++b) {
    const T* xr = x.row(b);
    T* yr = y.row(b);
    for (int o = 0; o < w.rows; ++o) {
      const T* wr = w.row(o);
      double s = bias[o];
      for (int i = 0; i < w.cols; ++i) s += static_cast<double>(wr[i]) * xr[i];
      yr[o] = static_cast<T>(s);
    }
  }
  return y;
}

template <typename T>
struct LinearGradsT {
  Mat2T<T> input, weight;
  std::vector<T> bias;
};

template <typename T>
LinearGradsT<T> linear_backward(const Mat2T<T>& x, const Mat2T<T>& w,
                                const Mat2T<T>& gout) {
  if (gout.rows != x.rows || gout.cols != w.rows)
    throw ShapeError("linear upstream gradient has wrong shape");
  LinearGradsT<T> g;
  g.input = Mat2T<T>(x.rows, x.cols);
  g.weight = Mat2T<T>(w.rows, w.cols);
  g.bias.assign(w.rows, T(0));
  for (int b = 0; b < x.rows; ++b) {
    const T* go = gout.row(b);
    const T* xr = x.row(b);
    T* gi = g.input.row(b);
    for (int o = 0; o < w.rows; ++o) {
      const T gv = go[o];
      const T* wr = w.row(o);
      T* gw = g.weight.row(o);
      for (int i = 0; i < w.cols; ++i) {
        gi[i] += gv * wr[i];
        gw[i] += gv * xr[i];
      }
      g.bias[o] += gv;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

// Row-wise stable softmax (no loss attached); rows sum to 1.
template <typename T>
Mat2T<T> softmax_rows(const Mat2T<T>& logits) {
  Mat2T<T> probs(logits.rows, logits.cols);
  for (int b = 0; b < logits.rows; ++b) {
    const T* zr = logits.row(b);
    T* pr = probs.row(b);
    double zmax = zr[0];
    for (int c = 1; c < logits.cols; ++c)
      zmax = std::max(zmax, static_cast<double>(zr[c]));
    double denom = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      const double e = std::exp(zr[c] - zmax);
      pr[c] = static_cast<T>(e);
      denom += e;
    }
    for (int c = 0; c < logits.cols; ++c) pr[c] = static_cast<T>(pr[c] / denom);
  }
  return probs;
}

template <typename T>
struct SoftmaxXentT {
  T loss = T(0);          // mean over the batch
  Mat2T<T> probs;         // rows sum to 1
  Mat2T<T> dlogits;       // (probs - onehot) / batch
};

template <typename T>
SoftmaxXentT<T> softmax_xent(const Mat2T<T>& logits,
                             std::span<const std::uint8_t> labels) {
  if (static_cast<int>(labels.size()) != logits.rows)
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(logits.rows) + " rows");
  SoftmaxXentT<T> out;
  out.probs = Mat2T<T>(logits.rows, logits.cols);
  out.dlogits = Mat2T<T>(logits.rows, logits.cols);

  double loss_sum = 0.0;
  for (int b = 0; b < logits.rows; ++b) {
    if (labels[b] >= logits.cols)
      throw ConfigError("label " + std::to_string(labels[b]) +
                        " out of range for " + std::to_string(logits.cols) +
                        " classes");
    const T* zr = logits.row(b);
    T* pr = out.probs.row(b);
    double zmax = zr[0];
    for (int c = 1; c < logits.cols; ++c) zmax = std::max(zmax, static_cast<double>(zr[c]));
    double denom = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      const double e = std::exp(zr[c] - zmax);
      pr[c] = static_cast<T>(e);
      denom += e;
    }
    for (int c = 0; c < logits.cols; ++c) pr[c] = static_cast<T>(pr[c] / denom);
    loss_sum += -(static_cast<double>(zr[labels[b]]) - zmax - std::log(denom));

    T* dr = out.dlogits.row(b);
    const T inv_batch = T(1) / static_cast<T>(logits.rows);
    for (int c = 0; c < logits.cols; ++c) {
      const T onehot = (c == labels[b]) ? T(1) : T(0);
      dr[c] = (pr[c] - onehot) * inv_batch;
    }
  }
  out.loss = static_cast<T>(loss_sum / logits.rows);
  return out;
}

}  // namespace vibcnn

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vibcnn/kernels.hpp"
#include "vibcnn/rng.hpp"
#include "vibcnn/tensor.hpp"

// The fixed residual network:
//
//   [B,3,200] -> conv1(128,K24,s2) -> bn1 -> relu -> maxpool(3,3)
//     -> { conv2(32,K3,p1) -> bn2 -> relu -> conv3(32,K3,p1) -> bn3 -> relu
//        | conv_sc(32,K1) -> bn_sc }
//     -> add -> relu -> global avg pool -> fc(32->5) -> logits
//
// All convolutions are bias-free (each feeds a batch norm). Trainable
// parameters: 29,285. A reduced "tiny" geometry exists solely for
// finite-difference verification of the assembled backward pass.

namespace vibcnn {

struct ModelDims {
  int in_channels = 3;
  int in_len = 200;
  int conv1_filters = 128;
  int conv1_kernel = 24;
  int conv1_stride = 2;
  int pool_k = 3;
  int pool_stride = 3;
  int res_filters = 32;
  int res_kernel = 3;
  int classes = 5;

  static ModelDims standard() { return ModelDims{}; }
  static ModelDims tiny() { return ModelDims{2, 20, 8, 5, 2, 2, 2, 4, 3, 3}; }

  int res_padding() const { return (res_kernel - 1) / 2; }
  int conv1_out_len() const {
    return conv1d_out_len(in_len, conv1_kernel, conv1_stride, 0);
  }
  int pool_out_len() const { return (conv1_out_len() - pool_k) / pool_stride + 1; }

  void validate() const {
    if (in_channels < 1 || in_len < 1 || conv1_filters < 1 || res_filters < 1 ||
        classes < 2)
      throw ConfigError("model dims out of range");
    if (res_kernel < 1 || res_kernel % 2 == 0)
      throw ConfigError("residual kernel must be odd so length is preserved");
    const int l1 = conv1_out_len();  // throws if the front conv collapses
    if (l1 < pool_k)
      throw ConfigError("pool window " + std::to_string(pool_k) +
                        " exceeds conv1 output length " + std::to_string(l1));
    if (pool_k < 1 || pool_stride < 1)
      throw ConfigError("pool geometry out of range");
  }

  bool operator==(const ModelDims&) const = default;
};

template <typename T>
struct ModelParamsT {
  ModelDims dims;
  Tensor3T<T> conv1_w, conv2_w, conv3_w, conv_sc_w;
  BatchNormStateT<T> bn1, bn2, bn3, bn_sc;
  Mat2T<T> fc_w;
  std::vector<T> fc_b;

  // Zero-filled parameter set with the right shapes (checkpoint loading,
  // gradient accumulation).
  static ModelParamsT allocate(const ModelDims& d) {
    d.validate();
    ModelParamsT p;
    p.dims = d;
    p.conv1_w = Tensor3T<T>(d.conv1_filters, d.in_channels, d.conv1_kernel);
    p.conv2_w = Tensor3T<T>(d.res_filters, d.conv1_filters, d.res_kernel);
    p.conv3_w = Tensor3T<T>(d.res_filters, d.res_filters, d.res_kernel);
    p.conv_sc_w = Tensor3T<T>(d.res_filters, d.conv1_filters, 1);
    p.bn1 = BatchNormStateT<T>::init(d.conv1_filters);
    p.bn2 = BatchNormStateT<T>::init(d.res_filters);
    p.bn3 = BatchNormStateT<T>::init(d.res_filters);
    p.bn_sc = BatchNormStateT<T>::init(d.res_filters);
    p.fc_w = Mat2T<T>(d.classes, d.res_filters);
    p.fc_b.assign(d.classes, T(0));
    return p;
  }
};

template <typename T>
struct GradientsT {
  Tensor3T<T> conv1_w, conv2_w, conv3_w, conv_sc_w;
  std::vector<T> bn1_gamma, bn1_beta, bn2_gamma, bn2_beta, bn3_gamma, bn3_beta,
      bn_sc_gamma, bn_sc_beta;
  Mat2T<T> fc_w;
  std::vector<T> fc_b;
};

// One named view per trainable array, in a fixed canonical order shared by
// the optimizer, weight decay, checkpoints, and diagnostics. `decay` marks
// the slots L2 weight decay applies to (conv/fc weights only — never batch
// norm affine parameters or the fc bias).
template <typename T>
struct ParamSlot {
  const char* name;
  std::span<T> values;
  bool decay;
};

template <typename T>
std::vector<ParamSlot<T>> trainable_slots(ModelParamsT<T>& p) {
  return {
      {"conv1_w", std::span<T>(p.conv1_w.data), true},
      {"bn1.gamma", std::span<T>(p.bn1.gamma), false},
      {"bn1.beta", std::span<T>(p.bn1.beta), false},
      {"conv2_w", std::span<T>(p.conv2_w.data), true},
      {"bn2.gamma", std::span<T>(p.bn2.gamma), false},
      {"bn2.beta", std::span<T>(p.bn2.beta), false},
      {"conv3_w", std::span<T>(p.conv3_w.data), true},
      {"bn3.gamma", std::span<T>(p.bn3.gamma), false},
      {"bn3.beta", std::span<T>(p.bn3.beta), false},
      {"conv_sc_w", std::span<T>(p.conv_sc_w.data), true},
      {"bn_sc.gamma", std::span<T>(p.bn_sc.gamma), false},
      {"bn_sc.beta", std::span<T>(p.bn_sc.beta), false},
      {"fc_w", std::span<T>(p.fc_w.data), true},
      {"fc_b", std::span<T>(p.fc_b), false},
  };
}

template <typename T>
std::vector<ParamSlot<T>> grad_slots(GradientsT<T>& g) {
  return {
      {"conv1_w", std::span<T>(g.conv1_w.data), true},
      {"bn1.gamma", std::span<T>(g.bn1_gamma), false},
      {"bn1.beta", std::span<T>(g.bn1_beta), false},
      {"conv2_w", std::span<T>(g.conv2_w.data), true},
      {"bn2.gamma", std::span<T>(g.bn2_gamma), false},
      {"bn2.beta", std::span<T>(g.bn2_beta), false},
      {"conv3_w", std::span<T>(g.conv3_w.data), true},
      {"bn3.gamma", std::span<T>(g.bn3_gamma), false},
      {"bn3.beta", std::span<T>(g.bn3_beta), false},
      {"conv_sc_w", std::span<T>(g.conv_sc_w.data), true},
      {"bn_sc.gamma", std::span<T>(g.bn_sc_gamma), false},
      {"bn_sc.beta", std::span<T>(g.bn_sc_beta), false},
      {"fc_w", std::span<T>(g.fc_w.data), true},
      {"fc_b", std::span<T>(g.fc_b), false},
  };
}

// Trainable count only: conv/fc weights, fc bias, bn gamma/beta. Running
// statistics are state, not parameters.
template <typename T>
std::size_t parameter_count(const ModelParamsT<T>& p) {
  return p.conv1_w.size() + p.conv2_w.size() + p.conv3_w.size() +
         p.conv_sc_w.size() + p.fc_w.size() + p.fc_b.size() +
         2 * (p.bn1.gamma.size() + p.bn2.gamma.size() + p.bn3.gamma.size() +
              p.bn_sc.gamma.size());
}

// He-normal weights (std = sqrt(2/fan_in)), identity batch norms, zero bias.
// Each weight block draws from its own derived stream, so the layout of one
// block never shifts another's values.
template <typename T = float>
ModelParamsT<T> init_params(const ModelDims& dims, std::uint64_t seed) {
  auto p = ModelParamsT<T>::allocate(dims);
  const auto fill = [&](std::vector<T>& w, std::uint64_t slot, int fan_in) {
    Rng rng(derive_key(seed, RngTag::params_init, slot));
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (auto& v : w) v = static_cast<T>(rng.normal() * std_dev);
  };
  fill(p.conv1_w.data, 0, dims.in_channels * dims.conv1_kernel);
  fill(p.conv2_w.data, 1, dims.conv1_filters * dims.res_kernel);
  fill(p.conv3_w.data, 2, dims.res_filters * dims.res_kernel);
  fill(p.conv_sc_w.data, 3, dims.conv1_filters * 1);
  fill(p.fc_w.data, 4, dims.res_filters);
  return p;
}

template <typename T>
struct ForwardCacheT {
  Tensor3T<T> input;
  BnCacheT<T> bn1, bn2, bn3, bn_sc;
  Tensor3T<T> bn1_out;    // relu1 mask
  MaxPoolOutT<T> pool;    // pooled activation doubles as both branch inputs
  Tensor3T<T> bn2_out;    // relu2 mask
  Tensor3T<T> relu2_out;  // conv3 input
  Tensor3T<T> bn3_out;    // left-branch relu mask
  Tensor3T<T> sum;        // post-addition relu mask
  Mat2T<T> gap_out;       // fc input
};

namespace detail {
template <typename T>
void check_frame_shape(const ModelDims& d, const Tensor3T<T>& x) {
  if (x.channels != d.in_channels || x.length != d.in_len)
    throw ShapeError("model expects frames [B," + std::to_string(d.in_channels) +
                     "," + std::to_string(d.in_len) + "], got " + x.shape_str());
}

template <typename T>
Tensor3T<T> add_same_shape(const Tensor3T<T>& a, const Tensor3T<T>& b) {
  Tensor3T<T> y(a.batch, a.channels, a.length);
  for (std::size_t i = 0; i < a.size(); ++i) y.data[i] = a.data[i] + b.data[i];
  return y;
}
}  // namespace detail

// Train-phase forward: updates running batch-norm statistics in `p` and
// fills `cache` for the matching loss_and_grads call.
template <typename T>
Mat2T<T> model_forward_train(ModelParamsT<T>& p, const Tensor3T<T>& x,
                             ForwardCacheT<T>& cache) {
  const ModelDims& d = p.dims;
  detail::check_frame_shape(d, x);
  cache.input = x;

  auto c1 = conv1d_forward(x, p.conv1_w, d.conv1_stride, 0);
  cache.bn1_out = batchnorm_forward_train(c1, p.bn1, cache.bn1);
  auto r1 = relu_forward(cache.bn1_out);
  cache.pool = maxpool1d_forward(r1, d.pool_k, d.pool_stride);
  const Tensor3T<T>& pooled = cache.pool.output;

  auto c2 = conv1d_forward(pooled, p.conv2_w, 1, d.res_padding());
  cache.bn2_out = batchnorm_forward_train(c2, p.bn2, cache.bn2);
  cache.relu2_out = relu_forward(cache.bn2_out);
  auto c3 = conv1d_forward(cache.relu2_out, p.conv3_w, 1, d.res_padding());
  cache.bn3_out = batchnorm_forward_train(c3, p.bn3, cache.bn3);
  auto left = relu_forward(cache.bn3_out);

  auto sc = conv1d_forward(pooled, p.conv_sc_w, 1, 0);
  auto right = batchnorm_forward_train(sc, p.bn_sc, cache.bn_sc);

  cache.sum = detail::add_same_shape(left, right);
  auto out = relu_forward(cache.sum);
  cache.gap_out = global_avg_pool_forward(out);
  return linear_forward(cache.gap_out, p.fc_w, std::span<const T>(p.fc_b));
}

// Eval-phase forward: pure function of (params, input); per-sample
// computation, so results are independent of batch partitioning.
template <typename T>
Mat2T<T> model_forward_eval(const ModelParamsT<T>& p, const Tensor3T<T>& x) {
  const ModelDims& d = p.dims;
  detail::check_frame_shape(d, x);

  auto c1 = conv1d_forward(x, p.conv1_w, d.conv1_stride, 0);
  auto b1 = relu_forward(batchnorm_forward_eval(c1, p.bn1));
  auto pooled = maxpool1d_forward(b1, d.pool_k, d.pool_stride).output;

  auto c2 = conv1d_forward(pooled, p.conv2_w, 1, d.res_padding());
  auto r2 = relu_forward(batchnorm_forward_eval(c2, p.bn2));
  auto c3 = conv1d_forward(r2, p.conv3_w, 1, d.res_padding());
  auto left = relu_forward(batchnorm_forward_eval(c3, p.bn3));

  auto right =
      batchnorm_forward_eval(conv1d_forward(pooled, p.conv_sc_w, 1, 0), p.bn_sc);

  auto out = relu_forward(detail::add_same_shape(left, right));
  return linear_forward(global_avg_pool_forward(out), p.fc_w,
                        std::span<const T>(p.fc_b));
}

template <typename T>
struct LossGradsT {
  T loss = T(0);
  GradientsT<T> grads;
};

template <typename T>
LossGradsT<T> model_loss_and_grads(const ModelParamsT<T>& p,
                                   const ForwardCacheT<T>& cache,
                                   const Mat2T<T>& logits,
                                   std::span<const std::uint8_t> labels) {
  const ModelDims& d = p.dims;
  if (cache.input.batch != logits.rows ||
      static_cast<int>(labels.size()) != logits.rows)
    throw ConfigError("cache, logits, and labels describe different batches");

  auto sm = softmax_xent(logits, labels);
  LossGradsT<T> out;
  out.loss = sm.loss;

  auto g_fc = linear_backward(cache.gap_out, p.fc_w, sm.dlogits);
  auto g_out = global_avg_pool_backward(cache.sum.length, g_fc.input);
  auto g_sum = relu_backward(cache.sum, g_out);

  // Left branch.
  auto g_left = relu_backward(cache.bn3_out, g_sum);
  auto g_bn3 = batchnorm_backward(g_left, cache.bn3, p.bn3);
  auto g_c3 = conv1d_backward(cache.relu2_out, p.conv3_w, 1, d.res_padding(),
                              g_bn3.input);
  auto g_r2 = relu_backward(cache.bn2_out, g_c3.input);
  auto g_bn2 = batchnorm_backward(g_r2, cache.bn2, p.bn2);
  auto g_c2 = conv1d_backward(cache.pool.output, p.conv2_w, 1, d.res_padding(),
                              g_bn2.input);

  // Shortcut branch: the addition passes g_sum through unchanged.
  auto g_bnsc = batchnorm_backward(g_sum, cache.bn_sc, p.bn_sc);
  auto g_sc = conv1d_backward(cache.pool.output, p.conv_sc_w, 1, 0, g_bnsc.input);

  auto g_pooled = detail::add_same_shape(g_c2.input, g_sc.input);
  auto g_r1 = maxpool1d_backward(cache.bn1_out.length, g_pooled,
                                 std::span<const std::int32_t>(cache.pool.argmax));
  auto g_bn1_out = relu_backward(cache.bn1_out, g_r1);
  auto g_bn1 = batchnorm_backward(g_bn1_out, cache.bn1, p.bn1);
  auto g_c1 = conv1d_backward(cache.input, p.conv1_w, d.conv1_stride, 0,
                              g_bn1.input, /*need_input_grad=*/false);

  auto& g = out.grads;
  g.conv1_w = std::move(g_c1.weight);
  g.conv2_w = std::move(g_c2.weight);
  g.conv3_w = std::move(g_c3.weight);
  g.conv_sc_w = std::move(g_sc.weight);
  g.bn1_gamma = std::move(g_bn1.gamma);
  g.bn1_beta = std::move(g_bn1.beta);
  g.bn2_gamma = std::move(g_bn2.gamma);
  g.bn2_beta = std::move(g_bn2.beta);
  g.bn3_gamma = std::move(g_bn3.gamma);
  g.bn3_beta = std::move(g_bn3.beta);
  g.bn_sc_gamma = std::move(g_bnsc.gamma);
  g.bn_sc_beta = std::move(g_bnsc.beta);
  g.fc_w = std::move(g_fc.weight);
  g.fc_b = std::move(g_fc.bias);
  return out;
}

// Argmax with ties broken toward the lowest index.
template <typename T>
int argmax_lowest(const T* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

template <typename T>
struct PredictOutT {
  std::vector<std::uint8_t> labels;
  Mat2T<T> probs;
};

template <typename T>
PredictOutT<T> predict(const ModelParamsT<T>& p, const Tensor3T<T>& frames,
                       int batch_cap = 256) {
  detail::check_frame_shape(p.dims, frames);
  if (batch_cap < 1) throw ConfigError("predict batch cap must be >= 1");
  PredictOutT<T> out;
  out.labels.resize(frames.batch);
  out.probs = Mat2T<T>(frames.batch, p.dims.classes);

  for (int start = 0; start < frames.batch; start += batch_cap) {
    const int n = std::min(batch_cap, frames.batch - start);
    Tensor3T<T> chunk(n, frames.channels, frames.length);
    std::copy_n(frames.row(start, 0), chunk.size(), chunk.data.data());
    auto probs = softmax_rows(model_forward_eval(p, chunk));
    std::copy_n(probs.data.begin(), probs.size(), out.probs.row(start));
    for (int i = 0; i < n; ++i)
      out.labels[start + i] = static_cast<std::uint8_t>(
          argmax_lowest(probs.row(i), p.dims.classes));
  }
  return out;
}

}  // namespace vibcnn

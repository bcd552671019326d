#include "vibcnn/gradcheck.hpp"

#include <numeric>

#include "vibcnn/kernels.hpp"
#include "vibcnn/model.hpp"
#include "vibcnn/rng.hpp"

namespace vibcnn {

namespace {

constexpr double kKernelTol = 1e-4;
constexpr double kModelTol = 1e-3;
// Curved maps (batch norm through its statistics, softmax, the full model)
// get a finer probe step so O(h^2) truncation stays under tolerance;
// piecewise-linear kernels keep the default.
constexpr double kCurvedStep = 1e-4;

Tensor3T<double> rand_t(int b, int c, int l, Rng& rng, double scale = 1.0) {
  Tensor3T<double> t(b, c, l);
  for (auto& v : t.data) v = rng.normal() * scale;
  return t;
}

// Finite differences are only valid away from the ReLU kink: magnitudes
// >= 0.1 dwarf the probe step (<= 2.1e-3).
Tensor3T<double> kink_free(int b, int c, int l, Rng& rng) {
  Tensor3T<double> t(b, c, l);
  for (auto& v : t.data) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    v = sign * (0.1 + 2.0 * rng.uniform());
  }
  return t;
}

// Stable argmax for pooling: values on a shuffled grid with pairwise gaps of
// 0.5, far beyond any probe step.
Tensor3T<double> distinct(int b, int c, int l, Rng& rng) {
  Tensor3T<double> t(b, c, l);
  std::vector<int> grid(t.size());
  std::iota(grid.begin(), grid.end(), 0);
  deterministic_shuffle(grid, rng);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data[i] = 0.5 * grid[i] - 0.25 * static_cast<double>(t.size());
  return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

GradCheckResult result(std::string name, double err, double tol) {
  return {std::move(name), err, tol, err < tol};
}

}  // namespace

std::vector<GradCheckResult> kernel_gradchecks(std::uint64_t seed) {
  std::vector<GradCheckResult> out;
  const auto push = [&](std::string name, double err, double tol = kKernelTol) {
    out.push_back(result(std::move(name), err, tol));
  };

  {  // conv1d, residual-branch geometry (K3, padded)
    Rng rng(derive_key(seed, RngTag::gradcheck, 1));
    auto x = rand_t(2, 3, 10, rng);
    auto w = rand_t(4, 3, 3, rng);
    auto u = rand_t(2, 4, conv1d_out_len(10, 3, 1, 1), rng);
    auto objective = [&]() { return dot(u.data, conv1d_forward(x, w, 1, 1).data); };
    auto g = conv1d_backward(x, w, 1, 1, u);
    push("conv1d.input",
         fd_max_rel_error(std::span(x.data), std::span(g.input.data), objective));
    push("conv1d.weight",
         fd_max_rel_error(std::span(w.data), std::span(g.weight.data), objective));
  }
  {  // conv1d, front-layer geometry (K24, stride 2)
    Rng rng(derive_key(seed, RngTag::gradcheck, 2));
    auto x = rand_t(1, 3, 40, rng);
    auto w = rand_t(2, 3, 24, rng);
    auto u = rand_t(1, 2, conv1d_out_len(40, 24, 2, 0), rng);
    auto objective = [&]() { return dot(u.data, conv1d_forward(x, w, 2, 0).data); };
    auto g = conv1d_backward(x, w, 2, 0, u);
    push("conv1d_k24.input",
         fd_max_rel_error(std::span(x.data), std::span(g.input.data), objective));
    push("conv1d_k24.weight",
         fd_max_rel_error(std::span(w.data), std::span(g.weight.data), objective));
  }
  {  // batch norm (train-phase statistics)
    Rng rng(derive_key(seed, RngTag::gradcheck, 3));
    auto x = rand_t(4, 2, 6, rng, 1.3);
    auto bn = BatchNormStateT<double>::init(2);
    bn.gamma = {1.5, 0.7};
    bn.beta = {0.2, -0.4};
    auto u = rand_t(4, 2, 6, rng);
    auto objective = [&]() {
      auto bn_copy = bn;
      BnCacheT<double> cache;
      return dot(u.data, batchnorm_forward_train(x, bn_copy, cache).data);
    };
    auto bn_fwd = bn;
    BnCacheT<double> cache;
    batchnorm_forward_train(x, bn_fwd, cache);
    auto g = batchnorm_backward(u, cache, bn);
    push("batchnorm.input",
         fd_max_rel_error(std::span(x.data), std::span(g.input.data), objective,
                          kCurvedStep));
    push("batchnorm.gamma",
         fd_max_rel_error(std::span(bn.gamma), std::span(g.gamma), objective,
                          kCurvedStep));
    push("batchnorm.beta",
         fd_max_rel_error(std::span(bn.beta), std::span(g.beta), objective,
                          kCurvedStep));
  }
  {  // relu
    Rng rng(derive_key(seed, RngTag::gradcheck, 4));
    auto x = kink_free(2, 3, 5, rng);
    auto u = rand_t(2, 3, 5, rng);
    auto objective = [&]() { return dot(u.data, relu_forward(x).data); };
    auto g = relu_backward(x, u);
    push("relu.input",
         fd_max_rel_error(std::span(x.data), std::span(g.data), objective));
  }
  {  // maxpool (overlapping windows)
    Rng rng(derive_key(seed, RngTag::gradcheck, 5));
    auto x = distinct(2, 2, 12, rng);
    auto fwd = maxpool1d_forward(x, 3, 2);
    auto u = rand_t(2, 2, fwd.output.length, rng);
    auto objective = [&]() {
      return dot(u.data, maxpool1d_forward(x, 3, 2).output.data);
    };
    auto g = maxpool1d_backward(x.length, u,
                                std::span<const std::int32_t>(fwd.argmax));
    push("maxpool.input",
         fd_max_rel_error(std::span(x.data), std::span(g.data), objective));
  }
  {  // global average pool
    Rng rng(derive_key(seed, RngTag::gradcheck, 6));
    auto x = rand_t(2, 4, 7, rng);
    Mat2T<double> u(2, 4);
    for (auto& v : u.data) v = rng.normal();
    auto objective = [&]() { return dot(u.data, global_avg_pool_forward(x).data); };
    auto g = global_avg_pool_backward(7, u);
    push("global_avg_pool.input",
         fd_max_rel_error(std::span(x.data), std::span(g.data), objective));
  }
  {  // linear
    Rng rng(derive_key(seed, RngTag::gradcheck, 7));
    Mat2T<double> x(3, 6), w(4, 6), u(3, 4);
    std::vector<double> b(4);
    for (auto& v : x.data) v = rng.normal();
    for (auto& v : w.data) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    for (auto& v : u.data) v = rng.normal();
    auto objective = [&]() {
      return dot(u.data, linear_forward(x, w, std::span<const double>(b)).data);
    };
    auto g = linear_backward(x, w, u);
    push("linear.input",
         fd_max_rel_error(std::span(x.data), std::span(g.input.data), objective));
    push("linear.weight",
         fd_max_rel_error(std::span(w.data), std::span(g.weight.data), objective));
    push("linear.bias",
         fd_max_rel_error(std::span(b), std::span(g.bias), objective));
  }
  {  // softmax + cross-entropy
    Rng rng(derive_key(seed, RngTag::gradcheck, 8));
    Mat2T<double> z(3, 5);
    for (auto& v : z.data) v = rng.normal() * 2.0;
    std::vector<std::uint8_t> labels(3);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(5));
    auto objective = [&]() {
      return softmax_xent(z, std::span<const std::uint8_t>(labels)).loss;
    };
    auto sm = softmax_xent(z, std::span<const std::uint8_t>(labels));
    push("softmax_xent.logits",
         fd_max_rel_error(std::span(z.data), std::span(sm.dlogits.data),
                          objective, kCurvedStep));
  }
  return out;
}

GradCheckResult tiny_model_gradcheck(std::uint64_t seed) {
  const ModelDims dims = ModelDims::tiny();
  auto params = init_params<double>(dims, seed);

  Rng rng(derive_key(seed, RngTag::gradcheck, 9));
  auto x = rand_t(2, dims.in_channels, dims.in_len, rng);
  std::vector<std::uint8_t> labels(2);
  for (auto& l : labels)
    l = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(dims.classes)));

  auto objective = [&]() {
    auto p_copy = params;  // running-stat updates must not leak between probes
    ForwardCacheT<double> cache;
    auto logits = model_forward_train(p_copy, x, cache);
    return softmax_xent(logits, std::span<const std::uint8_t>(labels)).loss;
  };

  auto p_fwd = params;
  ForwardCacheT<double> cache;
  auto logits = model_forward_train(p_fwd, x, cache);
  auto lg = model_loss_and_grads(params, cache, logits,
                                 std::span<const std::uint8_t>(labels));

  double worst = 0.0;
  auto pslots = trainable_slots(params);
  auto gslots = grad_slots(lg.grads);
  for (std::size_t i = 0; i < pslots.size(); ++i)
    worst = std::max(worst, fd_max_rel_error(pslots[i].values, gslots[i].values,
                                             objective, kCurvedStep));
  return {"tiny_model.all_params", worst, kModelTol, worst < kModelTol};
}

}  // namespace vibcnn

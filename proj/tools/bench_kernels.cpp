// Times the layer kernels at training scale (batch 32) and extrapolates the
// cost of one optimizer step and a full run. Manual tool, not part of ctest.

#include <chrono>
#include <cstdio>
#include <functional>

#include "vibcnn/kernels.hpp"
#include "vibcnn/rng.hpp"

using namespace vibcnn;

namespace {

Tensor3 rand_t(int b, int c, int l, Rng& rng) {
  Tensor3 t(b, c, l);
  for (auto& v : t.data) v = static_cast<float>(rng.normal());
  return t;
}

double time_ms(const std::function<void()>& fn, int iters) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

volatile float sink;

}  // namespace

int main() {
  Rng rng(derive_key(7, RngTag::gradcheck));
  const int B = 32;

  struct Layer {
    const char* name;
    Tensor3 x, w;
    int stride, pad;
  };
  Layer layers[] = {
      {"conv1  3->128 K24 s2", rand_t(B, 3, 200, rng), rand_t(128, 3, 24, rng), 2, 0},
      {"conv2 128->32 K3 p1 ", rand_t(B, 128, 29, rng), rand_t(32, 128, 3, rng), 1, 1},
      {"conv3  32->32 K3 p1 ", rand_t(B, 32, 29, rng), rand_t(32, 32, 3, rng), 1, 1},
      {"convsc 128->32 K1   ", rand_t(B, 128, 29, rng), rand_t(32, 128, 1, rng), 1, 0},
  };

  double total_fwd = 0.0, total_bwd = 0.0;
  for (auto& L : layers) {
    const int lout = conv1d_out_len(L.x.length, L.w.length, L.stride, L.pad);
    Tensor3 u = rand_t(B, L.w.batch, lout, rng);
    const double fwd = time_ms(
        [&]() {
          auto y = conv1d_forward(L.x, L.w, L.stride, L.pad);
          sink = y.data[0];
        },
        20);
    const double bwd = time_ms(
        [&]() {
          auto g = conv1d_backward(L.x, L.w, L.stride, L.pad, u);
          sink = g.weight.data[0];
        },
        20);
    const double mflop = 2.0 * B * L.w.batch * lout * L.x.channels * L.w.length / 1e6;
    std::printf("%s  fwd %7.3f ms (%6.1f GF/s)   bwd %7.3f ms\n", L.name, fwd,
                mflop / fwd, bwd);
    total_fwd += fwd;
    total_bwd += bwd;
  }

  // Batch norm at the widest activation.
  Tensor3 a1 = rand_t(B, 128, 89, rng);
  auto bn = BatchNormStateT<float>::init(128);
  BnCacheT<float> cache;
  const double bn_fwd = time_ms(
      [&]() {
        auto y = batchnorm_forward_train(a1, bn, cache);
        sink = y.data[0];
      },
      20);
  Tensor3 u1 = rand_t(B, 128, 89, rng);
  batchnorm_forward_train(a1, bn, cache);
  const double bn_bwd = time_ms(
      [&]() {
        auto g = batchnorm_backward(u1, cache, bn);
        sink = g.input.data[0];
      },
      20);
  std::printf("bn1 [32,128,89]       fwd %7.3f ms              bwd %7.3f ms\n",
              bn_fwd, bn_bwd);

  // conv2 appears once but the residual branch has two K3 convs; both are
  // already in the table. Elementwise/pool/linear layers cost noise.
  const double step = total_fwd + total_bwd + 2.0 * (bn_fwd + bn_bwd) * 1.2;
  std::printf("\n~step (B=32): %.2f ms\n", step);
  std::printf("~epoch at 8000 train frames (250 steps): %.2f s\n",
              step * 250 / 1000.0);
  std::printf("~cross-val budget, 15 fold-scenarios x 30 epochs: %.1f min\n",
              step * 250 * 15 * 30 / 1000.0 / 60.0);
  return 0;
}

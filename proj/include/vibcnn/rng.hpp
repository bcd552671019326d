#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace vibcnn {

inline std::uint64_t splitmix_fin(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Purpose tags for deriving independent streams from one seed. Every consumer
// of randomness owns a tag, so streams never alias across modules.
enum class RngTag : std::uint64_t {
  params_init = 1,
  epoch_shuffle = 2,
  augment_sample = 3,
  kfold = 4,
  train_val_split = 5,
  synth_frame = 6,
  fold_seed = 7,
  gradcheck = 8,
};

inline std::uint64_t derive_key(std::uint64_t seed, RngTag tag,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t k = splitmix_fin(seed + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t w : {static_cast<std::uint64_t>(tag), a, b}) {
    k += 0x9e3779b97f4a7c15ULL;
    k = splitmix_fin(k ^ w);
  }
  return k;
}

// Counter-based generator: the sequence is a pure function of the key, so
// streams with distinct keys can be consumed from any thread in any order
// while staying reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix_fin(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift map; bias is O(n / 2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller (cosine branch only, two draws per value).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with the deterministic generator above; unlike std::shuffle
// the permutation is identical across standard libraries.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace vibcnn

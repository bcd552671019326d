#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vibcnn/data.hpp"
#include "vibcnn/rng.hpp"

// Training-time augmentation: circular time shift, random scaling with sign
// flip, and additive white Gaussian noise at a target SNR — applied in that
// order. Each sample owns an RNG stream derived from (seed, epoch, dataset
// index), so results do not depend on batch composition or iteration order.

namespace vibcnn {

struct AugmentConfig {
  double p_awgn = 0.25;
  std::vector<double> snr_db = {25.0, 30.0};  // chosen uniformly when firing
  double p_scale = 0.2;
  double scale_lo = 0.7;
  double scale_hi = 1.3;
  double p_sign = 0.5;  // probability of negating a drawn scale factor
  double p_shift = 0.2;
  double shift_lo = 0.0;  // shift drawn uniformly from [lo, hi) samples
  double shift_hi = 200.0;

  void validate() const;
};

// What an augment_sample call did, for tests and diagnostics.
struct AugmentTrace {
  bool shifted = false;
  int kappa = 0;  // applied right-rotation, in samples
  bool scaled = false;
  double beta = 1.0;  // applied factor, sign included
  bool noised = false;
  double snr_db = 0.0;  // selected target SNR
};

// Right-rotate one channel by kappa samples: out[(i + kappa) % n] = in[i].
void circular_shift(std::span<float> channel, int kappa);

// Rotate every channel of a channel-major frame by the same kappa.
void apply_shift(std::span<float> frame, int kappa);

void apply_scale(std::span<float> frame, double beta);

// Add white Gaussian noise sized so that signal power / noise power matches
// snr_db, measuring signal power jointly over the whole frame. A zero-power
// frame is returned unchanged and consumes no draws.
void apply_awgn(std::span<float> frame, double snr_db, Rng& rng);

// Applies the full pipeline to one channel-major frame in place. Draw order
// is fixed: shift gate (then shift amount), scale gate (then factor, then
// sign), noise gate (then SNR choice, then one normal per sample).
AugmentTrace augment_sample(std::span<float> frame, const AugmentConfig& cfg,
                            Rng& rng);

// Augmented copy of a batch; sample i uses the stream keyed by
// (seed, epoch, global_index[i]).
FrameBatch augment_batch(const FrameBatch& batch, const AugmentConfig& cfg,
                         int epoch, std::uint64_t seed);

}  // namespace vibcnn

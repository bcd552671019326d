#include "vibcnn/augment.hpp"

#include <algorithm>
#include <cmath>

#include "vibcnn/errors.hpp"

namespace vibcnn {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

void AugmentConfig::validate() const {
  check_probability(p_awgn, "p_awgn");
  check_probability(p_scale, "p_scale");
  check_probability(p_sign, "p_sign");
  check_probability(p_shift, "p_shift");
  if (snr_db.empty()) throw ConfigError("snr_db must list at least one value");
  for (double s : snr_db)
    if (!std::isfinite(s)) throw ConfigError("snr_db values must be finite");
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi))
    throw ConfigError("scale range must satisfy 0 < lo <= hi");
  if (!(shift_lo >= 0.0 && shift_lo <= shift_hi && shift_hi <= kFrameLen))
    throw ConfigError("shift range must satisfy 0 <= lo <= hi <= " +
                      std::to_string(kFrameLen));
}

void circular_shift(std::span<float> channel, int kappa) {
  const int n = static_cast<int>(channel.size());
  if (n == 0) return;
  kappa %= n;
  if (kappa < 0) kappa += n;
  if (kappa == 0) return;
  // Right rotation by kappa == left rotation by n - kappa.
  std::rotate(channel.begin(), channel.end() - kappa, channel.end());
}

void apply_shift(std::span<float> frame, int kappa) {
  if (frame.size() % kFrameLen != 0)
    throw ConfigError("frame span is not a whole number of channels");
  for (std::size_t ch = 0; ch * kFrameLen < frame.size(); ++ch)
    circular_shift(frame.subspan(ch * kFrameLen, kFrameLen), kappa);
}

void apply_scale(std::span<float> frame, double beta) {
  for (float& v : frame) v = static_cast<float>(v * beta);
}

void apply_awgn(std::span<float> frame, double snr_db, Rng& rng) {
  double power = 0.0;
  for (float v : frame) power += static_cast<double>(v) * v;
  power /= static_cast<double>(frame.size());
  if (power == 0.0) return;
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  for (float& v : frame) v = static_cast<float>(v + sigma * rng.normal());
}

AugmentTrace augment_sample(std::span<float> frame, const AugmentConfig& cfg,
                            Rng& rng) {
  AugmentTrace trace;

  if (rng.uniform() < cfg.p_shift) {
    const double raw = rng.uniform(cfg.shift_lo, cfg.shift_hi);
    trace.shifted = true;
    trace.kappa = static_cast<int>(std::floor(raw)) % kFrameLen;
    apply_shift(frame, trace.kappa);
  }

  if (rng.uniform() < cfg.p_scale) {
    double beta = rng.uniform(cfg.scale_lo, cfg.scale_hi);
    if (rng.uniform() < cfg.p_sign) beta = -beta;
    trace.scaled = true;
    trace.beta = beta;
    apply_scale(frame, beta);
  }

  if (rng.uniform() < cfg.p_awgn) {
    const std::size_t pick = static_cast<std::size_t>(
        rng.below(static_cast<std::uint64_t>(cfg.snr_db.size())));
    trace.noised = true;
    trace.snr_db = cfg.snr_db[pick];
    apply_awgn(frame, trace.snr_db, rng);
  }

  return trace;
}

FrameBatch augment_batch(const FrameBatch& batch, const AugmentConfig& cfg,
                         int epoch, std::uint64_t seed) {
  cfg.validate();
  if (epoch < 0) throw ConfigError("epoch must be nonnegative");
  if (batch.labels.size() != static_cast<std::size_t>(batch.size()) ||
      batch.global_index.size() != static_cast<std::size_t>(batch.size()))
    throw ShapeError("batch metadata does not match its tensor batch size");

  FrameBatch out{batch.x, batch.labels, batch.global_index};
  std::span<float> all(out.x.data);
  for (int i = 0; i < out.size(); ++i) {
    Rng rng(derive_key(seed, RngTag::augment_sample,
                       static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(out.global_index[
                           static_cast<std::size_t>(i)])));
    augment_sample(all.subspan(static_cast<std::size_t>(i) * kFrameSamples,
                               kFrameSamples),
                   cfg, rng);
  }
  return out;
}

}  // namespace vibcnn

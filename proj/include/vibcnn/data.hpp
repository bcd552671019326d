#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vibcnn/tensor.hpp"

// Dataset model and ingestion: 20 ms vibration frames (3 channels x 200
// samples at 10 kHz), 5 fault classes, 2 operating conditions. VBF1 is the
// canonical on-disk format; a CSV adapter imports external exports; the
// synthetic generator produces labeled, CNN-separable surrogate data.

namespace vibcnn {

inline constexpr int kChannels = 3;
inline constexpr int kFrameLen = 200;
inline constexpr int kFrameSamples = kChannels * kFrameLen;
inline constexpr int kClasses = 5;
inline constexpr int kSampleRateHz = 10000;

struct Frame {
  std::array<float, kFrameSamples> samples;  // channel-major: x, y, z
  std::uint8_t label = 0;                    // 0..4
  std::uint8_t oc = 1;                       // operating condition 1 or 2
};

struct Dataset {
  std::vector<Frame> frames;
  std::string provenance;

  std::size_t size() const { return frames.size(); }
  std::array<int, kClasses> class_counts() const {
    std::array<int, kClasses> c{};
    for (const Frame& f : frames) ++c[f.label];
    return c;
  }
};

// A training/eval batch gathered from a dataset. `global_index` keeps each
// sample's dataset position so augmentation can derive its per-sample RNG
// stream independent of batch composition.
struct FrameBatch {
  Tensor3 x;
  std::vector<std::uint8_t> labels;
  std::vector<std::int32_t> global_index;

  int size() const { return x.batch; }
};

FrameBatch gather_batch(const Dataset& ds, std::span<const std::int32_t> indices);

// VBF1 binary: magic "VBF1", u32 frame count, u16 channels (=3), u16 frame
// length (=200), u32 sample rate (=10000), then per frame 600 f32 LE
// channel-major + u8 label + u8 oc (2402-byte records).
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// CSV: one frame per row, 600 float columns channel-major, then the integer
// label, then optionally the operating condition. Header auto-detected by a
// non-numeric first cell. Frames keep row order.
enum class CsvLayout {
  auto_detect,  // 601 columns -> label, 602 -> label_oc
  label,        // 600 samples + label; oc defaults to 1
  label_oc,     // 600 samples + label + oc
};
Dataset import_csv(const std::string& path, CsvLayout layout = CsvLayout::auto_detect);

// Per class: seeded shuffle, then round-robin dealing into k folds. Folds
// are disjoint, cover the dataset, and per-class counts differ by at most 1.
std::vector<std::vector<std::int32_t>> stratified_kfold(const Dataset& ds, int k,
                                                        std::uint64_t seed);

// Stratified two-way split of `indices` (typically the k-1 training folds):
// per class floor(ratio * count) samples to train, the rest to validation.
struct TrainValSplit {
  std::vector<std::int32_t> train, val;
};
TrainValSplit train_val_split(const Dataset& ds,
                              std::span<const std::int32_t> indices, double ratio,
                              std::uint64_t seed);

struct SynthConfig {
  int frames_per_class = 500;
  int oc = 1;
  double rotational_speed_hz = 25.0;  // 25 Hz for OC1, 45 Hz for OC2
  double load_scale = 1.0;
  double noise_floor = 0.1;
  std::uint64_t seed = 0;

  static SynthConfig for_oc(int oc, int frames_per_class, std::uint64_t seed);
  void validate() const;
};

// Signature-based surrogate signal, not a physical gearbox model: gear-mesh
// carrier (3 harmonics) with class-dependent periodic impulse trains and
// amplitude modulation, plus Gaussian noise. Deterministic given the config.
Dataset generate_synthetic(const SynthConfig& cfg);

// The generator's own class-0 peak bound: carrier harmonic sum (channel gain
// <= 1) plus a 4-sigma noise allowance. Used by the generator's statistical
// contract (>= 99% of class-0 frames stay below it).
double class0_peak_bound(const SynthConfig& cfg);

}  // namespace vibcnn

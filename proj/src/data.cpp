#include "vibcnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <string_view>

#include "binio.hpp"
#include "vibcnn/errors.hpp"
#include "vibcnn/rng.hpp"

namespace vibcnn {

namespace {

void check_frame_valid(const Frame& f, const std::string& what) {
  if (f.label >= kClasses)
    throw ConfigError(what + ": label " + std::to_string(int(f.label)) +
                      " out of range");
  if (f.oc != 1 && f.oc != 2)
    throw ConfigError(what + ": operating condition " +
                      std::to_string(int(f.oc)) + " out of range");
  for (float v : f.samples)
    if (!std::isfinite(v)) throw ConfigError(what + ": non-finite sample");
}

}  // namespace

FrameBatch gather_batch(const Dataset& ds, std::span<const std::int32_t> indices) {
  FrameBatch b;
  const int n = static_cast<int>(indices.size());
  b.x = Tensor3(n, kChannels, kFrameLen);
  b.labels.resize(indices.size());
  b.global_index.assign(indices.begin(), indices.end());
  for (int i = 0; i < n; ++i) {
    const std::int32_t idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= ds.size())
      throw ConfigError("batch index " + std::to_string(idx) +
                        " outside dataset of size " + std::to_string(ds.size()));
    const Frame& f = ds.frames[static_cast<std::size_t>(idx)];
    std::memcpy(b.x.data.data() + static_cast<std::size_t>(i) * kFrameSamples,
                f.samples.data(), sizeof(float) * kFrameSamples);
    b.labels[static_cast<std::size_t>(i)] = f.label;
  }
  return b;
}

// ---------------------------------------------------------------------------
// VBF1 binary format

void write_dataset(const Dataset& ds, const std::string& path) {
  if (ds.size() > 0xffffffffull)
    throw ConfigError("dataset too large for the VBF1 frame counter");
  for (std::size_t i = 0; i < ds.size(); ++i)
    check_frame_valid(ds.frames[i], "frame " + std::to_string(i));

  binio::Writer w(path);
  w.bytes("VBF1", 4);
  w.u32(static_cast<std::uint32_t>(ds.size()));
  w.u16(static_cast<std::uint16_t>(kChannels));
  w.u16(static_cast<std::uint16_t>(kFrameLen));
  w.u32(static_cast<std::uint32_t>(kSampleRateHz));
  for (const Frame& f : ds.frames) {
    for (float v : f.samples) w.f32(v);
    w.u8(f.label);
    w.u8(f.oc);
  }
  w.close();
}

Dataset read_dataset(const std::string& path) {
  binio::Reader r(path);
  if (r.str(4) != "VBF1") throw FormatError("bad magic (expected VBF1)", 0);
  const std::uint32_t n = r.u32();
  const std::uint16_t channels = r.u16();
  if (channels != kChannels)
    throw FormatError("unsupported channel count " + std::to_string(channels), 8);
  const std::uint16_t frame_len = r.u16();
  if (frame_len != kFrameLen)
    throw FormatError("unsupported frame length " + std::to_string(frame_len), 10);
  const std::uint32_t rate = r.u32();
  if (rate != kSampleRateHz)
    throw FormatError("unsupported sample rate " + std::to_string(rate), 12);

  Dataset ds;
  ds.provenance = path;
  ds.frames.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Frame& f = ds.frames[i];
    for (int s = 0; s < kFrameSamples; ++s) {
      const std::uint64_t at = r.offset();
      const float v = r.f32();
      if (!std::isfinite(v))
        throw FormatError("non-finite sample in frame " + std::to_string(i), at);
      f.samples[static_cast<std::size_t>(s)] = v;
    }
    const std::uint64_t label_at = r.offset();
    f.label = r.u8();
    if (f.label >= kClasses)
      throw FormatError("invalid label " + std::to_string(int(f.label)),
                        label_at);
    const std::uint64_t oc_at = r.offset();
    f.oc = r.u8();
    if (f.oc != 1 && f.oc != 2)
      throw FormatError("invalid operating condition " + std::to_string(int(f.oc)),
                        oc_at);
  }
  if (!r.at_end())
    throw FormatError("trailing bytes after declared frames", r.offset());
  return ds;
}

// ---------------------------------------------------------------------------
// CSV import

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> try_parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

double parse_number(std::string_view cell, int row, int col) {
  const auto v = try_parse_number(cell);
  if (!v)
    throw ParseError("column " + std::to_string(col) + ": cannot parse '" +
                         std::string(trim(cell)) + "' as a number",
                     row);
  return *v;
}

int parse_small_int(std::string_view cell, int row, int col, const char* what) {
  const double v = parse_number(cell, row, col);
  if (!std::isfinite(v) || v != std::floor(v) || v < 0.0 || v > 255.0)
    throw ParseError("column " + std::to_string(col) + ": " + what +
                         " must be a small nonnegative integer",
                     row);
  return static_cast<int>(v);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

Dataset import_csv(const std::string& path, CsvLayout layout) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  int expected_cols = layout == CsvLayout::label      ? kFrameSamples + 1
                      : layout == CsvLayout::label_oc ? kFrameSamples + 2
                                                      : -1;
  Dataset ds;
  ds.provenance = path;

  std::string line;
  int row = 0;  // 1-based physical line number, used in diagnostics
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    const auto cells = split_cells(line);
    if (!header_checked) {
      header_checked = true;
      if (!try_parse_number(cells.front())) continue;  // header row
    }

    if (expected_cols < 0) {
      if (cells.size() != kFrameSamples + 1 && cells.size() != kFrameSamples + 2)
        throw ParseError("expected " + std::to_string(kFrameSamples + 1) +
                             " or " + std::to_string(kFrameSamples + 2) +
                             " columns, got " + std::to_string(cells.size()),
                         row);
      expected_cols = static_cast<int>(cells.size());
    }
    if (cells.size() != static_cast<std::size_t>(expected_cols))
      throw ParseError("expected " + std::to_string(expected_cols) +
                           " columns, got " + std::to_string(cells.size()),
                       row);

    Frame f;
    for (int s = 0; s < kFrameSamples; ++s) {
      const double v = parse_number(cells[static_cast<std::size_t>(s)], row, s + 1);
      if (!std::isfinite(v))
        throw ParseError("column " + std::to_string(s + 1) +
                             ": sample must be finite",
                         row);
      f.samples[static_cast<std::size_t>(s)] = static_cast<float>(v);
    }
    const int label = parse_small_int(cells[kFrameSamples], row,
                                      kFrameSamples + 1, "label");
    if (label >= kClasses)
      throw ParseError("column " + std::to_string(kFrameSamples + 1) +
                           ": label " + std::to_string(label) + " out of range",
                       row);
    f.label = static_cast<std::uint8_t>(label);
    if (expected_cols == kFrameSamples + 2) {
      const int oc = parse_small_int(cells[kFrameSamples + 1], row,
                                     kFrameSamples + 2, "operating condition");
      if (oc != 1 && oc != 2)
        throw ParseError("column " + std::to_string(kFrameSamples + 2) +
                             ": operating condition " + std::to_string(oc) +
                             " out of range",
                         row);
      f.oc = static_cast<std::uint8_t>(oc);
    } else {
      f.oc = 1;
    }
    ds.frames.push_back(f);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Splits

namespace {

std::array<std::vector<std::int32_t>, kClasses> indices_by_class(
    const Dataset& ds, std::span<const std::int32_t> indices) {
  std::array<std::vector<std::int32_t>, kClasses> by_class;
  for (const std::int32_t idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= ds.size())
      throw ConfigError("index " + std::to_string(idx) +
                        " outside dataset of size " + std::to_string(ds.size()));
    by_class[ds.frames[static_cast<std::size_t>(idx)].label].push_back(idx);
  }
  return by_class;
}

}  // namespace

std::vector<std::vector<std::int32_t>> stratified_kfold(const Dataset& ds, int k,
                                                        std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count must be at least 2");
  if (ds.size() == 0) throw ConfigError("cannot fold an empty dataset");

  std::vector<std::int32_t> all(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    all[i] = static_cast<std::int32_t>(i);
  auto by_class = indices_by_class(ds, all);

  for (int c = 0; c < kClasses; ++c) {
    const std::size_t n = by_class[static_cast<std::size_t>(c)].size();
    if (n > 0 && n < static_cast<std::size_t>(k))
      throw ConfigError("class " + std::to_string(c) + " has only " +
                        std::to_string(n) + " frames, fewer than " +
                        std::to_string(k) + " folds");
  }

  std::vector<std::vector<std::int32_t>> folds(static_cast<std::size_t>(k));
  for (int c = 0; c < kClasses; ++c) {
    auto& cls = by_class[static_cast<std::size_t>(c)];
    Rng rng(derive_key(seed, RngTag::kfold, static_cast<std::uint64_t>(c)));
    deterministic_shuffle(cls, rng);
    for (std::size_t i = 0; i < cls.size(); ++i)
      folds[i % static_cast<std::size_t>(k)].push_back(cls[i]);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

TrainValSplit train_val_split(const Dataset& ds,
                              std::span<const std::int32_t> indices, double ratio,
                              std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("train ratio must lie strictly between 0 and 1");
  if (indices.empty()) throw ConfigError("cannot split an empty index set");

  auto by_class = indices_by_class(ds, indices);
  TrainValSplit split;
  for (int c = 0; c < kClasses; ++c) {
    auto& cls = by_class[static_cast<std::size_t>(c)];
    if (cls.empty()) continue;
    Rng rng(derive_key(seed, RngTag::train_val_split,
                       static_cast<std::uint64_t>(c)));
    deterministic_shuffle(cls, rng);
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(cls.size()) + 1e-9));
    if (n_train == 0 || n_train == cls.size())
      throw ConfigError("class " + std::to_string(c) +
                        " would be empty on one side of the split");
    split.train.insert(split.train.end(), cls.begin(),
                       cls.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.insert(split.val.end(),
                     cls.begin() + static_cast<std::ptrdiff_t>(n_train),
                     cls.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

// Per-class fault signature: impulse amplitude (relative to load_scale),
// impulse decay constant in samples, and amplitude-modulation depth. Class 0
// is the healthy baseline: carrier plus noise only. Severity grows with the
// class index along all three axes, which is what makes the classes
// separable yet non-trivial under augmentation.
struct ClassSignature {
  double alpha;  // impulse peak, in units of load_scale
  double tau;    // impulse decay constant, samples
  double am;     // amplitude-modulation depth of the carrier
};

constexpr ClassSignature kSignature[kClasses] = {
    {0.0, 1.0, 0.00},  // healthy
    {0.8, 6.0, 0.15},  // incipient: weak, slow impulses
    {1.6, 3.0, 0.30},
    {2.4, 2.0, 0.50},
    {3.2, 4.0, 0.80},  // severe: strong impulses, deep modulation
};

constexpr double kHarmonicFrac[3] = {1.0, 0.5, 0.25};
constexpr double kMeshOrder = 12.0;     // gear-mesh order of shaft speed
constexpr double kFaultOrder = 4.5;     // fault-impulse order of shaft speed
constexpr double kResonanceHz = 2200.0; // structural ring-down frequency

// Triaxial sensor model: y and z see attenuated, phase-lagged copies of the
// x-axis response, with independent noise.
constexpr double kChannelGain[kChannels] = {1.0, 0.85, 0.7};
constexpr double kChannelPhase[kChannels] = {0.0, 0.3, 0.6};
constexpr double kChannelLag[kChannels] = {0.0, 1.5, 3.0};  // samples

}  // namespace

SynthConfig SynthConfig::for_oc(int oc, int frames_per_class,
                                std::uint64_t seed) {
  SynthConfig cfg;
  cfg.oc = oc;
  cfg.frames_per_class = frames_per_class;
  cfg.seed = seed;
  cfg.rotational_speed_hz = (oc == 2) ? 45.0 : 25.0;
  cfg.validate();
  return cfg;
}

void SynthConfig::validate() const {
  if (frames_per_class < 1)
    throw ConfigError("frames_per_class must be positive");
  if (oc != 1 && oc != 2)
    throw ConfigError("operating condition must be 1 or 2");
  if (!(rotational_speed_hz > 0.0))
    throw ConfigError("rotational speed must be positive");
  if (3.0 * kMeshOrder * rotational_speed_hz >= kSampleRateHz / 2.0)
    throw ConfigError("third mesh harmonic would exceed the Nyquist rate");
  if (!(load_scale > 0.0)) throw ConfigError("load_scale must be positive");
  if (noise_floor < 0.0) throw ConfigError("noise_floor must be nonnegative");
}

double class0_peak_bound(const SynthConfig& cfg) {
  const double harmonic_sum =
      kHarmonicFrac[0] + kHarmonicFrac[1] + kHarmonicFrac[2];
  return cfg.load_scale * harmonic_sum + 4.0 * cfg.noise_floor;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();

  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double fs = static_cast<double>(kSampleRateHz);
  const double f_mesh = kMeshOrder * cfg.rotational_speed_hz;
  const double f_fault = kFaultOrder * cfg.rotational_speed_hz;
  const double period = fs / f_fault;  // impulse spacing, samples

  Dataset ds;
  ds.provenance = "synthetic(oc=" + std::to_string(cfg.oc) +
                  ", frames_per_class=" + std::to_string(cfg.frames_per_class) +
                  ", seed=" + std::to_string(cfg.seed) + ")";
  ds.frames.resize(static_cast<std::size_t>(kClasses) *
                   static_cast<std::size_t>(cfg.frames_per_class));

  for (int c = 0; c < kClasses; ++c) {
    const ClassSignature sig = kSignature[c];
    const double alpha = sig.alpha * cfg.load_scale;
    for (int j = 0; j < cfg.frames_per_class; ++j) {
      const std::size_t global =
          static_cast<std::size_t>(c) *
              static_cast<std::size_t>(cfg.frames_per_class) +
          static_cast<std::size_t>(j);
      Frame& f = ds.frames[global];
      f.label = static_cast<std::uint8_t>(c);
      f.oc = static_cast<std::uint8_t>(cfg.oc);

      Rng rng(derive_key(cfg.seed, RngTag::synth_frame,
                         static_cast<std::uint64_t>(global),
                         static_cast<std::uint64_t>(cfg.oc)));
      // Fixed draw order: harmonic phases, AM phase, impulse offset, then
      // channel-major noise. Every frame consumes the same draws regardless
      // of class so streams stay aligned across signatures.
      double phase[3];
      for (double& p : phase) p = rng.uniform(0.0, two_pi);
      const double am_phase = rng.uniform(0.0, two_pi);
      const double impulse_offset = rng.uniform() * period;

      for (int ch = 0; ch < kChannels; ++ch) {
        float* out = f.samples.data() + static_cast<std::size_t>(ch) * kFrameLen;

        // Carrier with class-dependent amplitude modulation.
        for (int i = 0; i < kFrameLen; ++i) {
          const double t = static_cast<double>(i) / fs;
          double carrier = 0.0;
          for (int h = 0; h < 3; ++h)
            carrier += kHarmonicFrac[h] *
                       std::sin(two_pi * (h + 1) * f_mesh * t + phase[h] +
                                kChannelPhase[ch]);
          const double am =
              1.0 + sig.am * std::sin(two_pi * f_fault * t + am_phase);
          out[i] = static_cast<float>(cfg.load_scale * carrier * am *
                                      kChannelGain[ch]);
        }

        // Periodic resonance bursts. Events start before the frame so decay
        // tails from the previous period are present at sample 0.
        if (alpha > 0.0) {
          const double cutoff = 12.0 * sig.tau;  // exp(-12) is negligible
          const int k_min =
              static_cast<int>(std::floor((-cutoff - impulse_offset) / period));
          const int k_max = static_cast<int>(
              std::ceil((kFrameLen - impulse_offset) / period));
          for (int k = k_min; k <= k_max; ++k) {
            const double t_event =
                impulse_offset + k * period + kChannelLag[ch];
            const int i_lo = std::max(0, static_cast<int>(std::ceil(t_event)));
            const int i_hi = std::min(
                kFrameLen - 1, static_cast<int>(std::floor(t_event + cutoff)));
            for (int i = i_lo; i <= i_hi; ++i) {
              const double dt = (static_cast<double>(i) - t_event) / fs;
              out[i] += static_cast<float>(
                  kChannelGain[ch] * alpha *
                  std::exp(-(static_cast<double>(i) - t_event) / sig.tau) *
                  std::sin(two_pi * kResonanceHz * dt));
            }
          }
        }

        for (int i = 0; i < kFrameLen; ++i)
          out[i] += static_cast<float>(cfg.noise_floor * rng.normal());
      }
    }
  }
  return ds;
}

}  // namespace vibcnn

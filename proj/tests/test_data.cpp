// Dataset model, VBF1 codec, CSV import, splits, and the synthetic generator.
// Byte-level layout oracles come first; everything else is checked against
// those frozen expectations or against independently computed statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "vibcnn/data.hpp"
#include "vibcnn/errors.hpp"

namespace {

using namespace vibcnn;

std::string temp_path(const std::string& stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

// A frame whose samples encode (tag, position) so misplaced bytes are visible.
Frame patterned_frame(int tag, std::uint8_t label, std::uint8_t oc) {
  Frame f;
  f.label = label;
  f.oc = oc;
  for (int s = 0; s < kFrameSamples; ++s)
    f.samples[static_cast<std::size_t>(s)] =
        static_cast<float>(tag) * 10.0f + static_cast<float>(s) * 0.125f;
  return f;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t le32(const std::vector<char>& b, std::size_t at) {
  return static_cast<std::uint8_t>(b[at]) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[at + 3])) << 24);
}

std::uint16_t le16(const std::vector<char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(
      static_cast<std::uint8_t>(b[at]) |
      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[at + 1])) << 8));
}

// Direct DFT power at an integer bin, normalized so a pure sinusoid of
// amplitude A at that bin reads (A/2)^2.
double bin_power(const float* x, int n, int bin) {
  double re = 0.0, im = 0.0;
  const double w = 2.0 * std::numbers::pi * bin / n;
  for (int i = 0; i < n; ++i) {
    re += x[i] * std::cos(w * i);
    im -= x[i] * std::sin(w * i);
  }
  return (re * re + im * im) / (static_cast<double>(n) * n);
}

constexpr std::size_t kRecordBytes = kFrameSamples * 4 + 2;  // 2402
constexpr std::size_t kHeaderBytes = 16;

}  // namespace

// ---------------------------------------------------------------------------
// VBF1 byte layout (frozen oracle)

TEST_CASE("vbf1 on-disk layout matches the frozen record format") {
  Dataset ds;
  ds.frames.push_back(patterned_frame(1, 2, 1));
  ds.frames.push_back(patterned_frame(2, 4, 2));
  ds.frames[0].samples[0] = 1.5f;  // 0x3FC00000 little-endian: 00 00 C0 3F

  const std::string path = temp_path("vibcnn_layout.vbf");
  write_dataset(ds, path);
  const auto bytes = slurp(path);

  REQUIRE(bytes.size() == kHeaderBytes + 2 * kRecordBytes);
  CHECK(bytes[0] == 'V');
  CHECK(bytes[1] == 'B');
  CHECK(bytes[2] == 'F');
  CHECK(bytes[3] == '1');
  CHECK(le32(bytes, 4) == 2);        // frame count
  CHECK(le16(bytes, 8) == 3);        // channels
  CHECK(le16(bytes, 10) == 200);     // frame length
  CHECK(le32(bytes, 12) == 10000);   // sample rate

  // First sample of frame 0: f32 little-endian 1.5.
  CHECK(static_cast<std::uint8_t>(bytes[16]) == 0x00);
  CHECK(static_cast<std::uint8_t>(bytes[17]) == 0x00);
  CHECK(static_cast<std::uint8_t>(bytes[18]) == 0xC0);
  CHECK(static_cast<std::uint8_t>(bytes[19]) == 0x3F);

  // Trailing label/oc bytes of both records.
  CHECK(static_cast<std::uint8_t>(bytes[kHeaderBytes + kFrameSamples * 4]) == 2);
  CHECK(static_cast<std::uint8_t>(bytes[kHeaderBytes + kFrameSamples * 4 + 1]) == 1);
  const std::size_t rec1 = kHeaderBytes + kRecordBytes;
  CHECK(static_cast<std::uint8_t>(bytes[rec1 + kFrameSamples * 4]) == 4);
  CHECK(static_cast<std::uint8_t>(bytes[rec1 + kFrameSamples * 4 + 1]) == 2);

  std::remove(path.c_str());
}

TEST_CASE("vbf1 round trip preserves every byte of every frame") {
  Dataset ds;
  for (int i = 0; i < 7; ++i)
    ds.frames.push_back(patterned_frame(i, static_cast<std::uint8_t>(i % 5),
                                        static_cast<std::uint8_t>(1 + i % 2)));
  ds.frames[3].samples[17] = -0.0f;
  ds.frames[3].samples[18] = 1e-30f;
  ds.frames[3].samples[19] = -3.4e38f;

  const std::string path = temp_path("vibcnn_roundtrip.vbf");
  write_dataset(ds, path);
  const Dataset back = read_dataset(path);

  REQUIRE(back.size() == ds.size());
  CHECK(back.provenance == path);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.frames[i].label == ds.frames[i].label);
    CHECK(back.frames[i].oc == ds.frames[i].oc);
    CHECK(std::equal(ds.frames[i].samples.begin(), ds.frames[i].samples.end(),
                     back.frames[i].samples.begin()));
  }
  std::remove(path.c_str());
}

TEST_CASE("vbf1 empty dataset is a bare 16-byte header") {
  const std::string path = temp_path("vibcnn_empty.vbf");
  write_dataset(Dataset{}, path);
  CHECK(slurp(path).size() == kHeaderBytes);
  const Dataset back = read_dataset(path);
  CHECK(back.size() == 0);
  std::remove(path.c_str());
}

TEST_CASE("vbf1 reader reports corruption with exact byte offsets") {
  Dataset ds;
  ds.frames.push_back(patterned_frame(3, 1, 1));
  ds.frames.push_back(patterned_frame(4, 3, 2));
  const std::string path = temp_path("vibcnn_corrupt.vbf");
  write_dataset(ds, path);
  const auto pristine = slurp(path);

  const auto expect_format_error_at = [&](std::vector<char> bytes,
                                          std::uint64_t offset) {
    spit(path, bytes);
    try {
      read_dataset(path);
      FAIL_CHECK("expected a format error at offset " << offset);
    } catch (const FormatError& e) {
      CHECK(e.offset == offset);
    }
  };

  SUBCASE("bad magic") {
    auto b = pristine;
    b[0] = 'X';
    expect_format_error_at(b, 0);
  }
  SUBCASE("wrong channel count") {
    auto b = pristine;
    b[8] = 4;
    expect_format_error_at(b, 8);
  }
  SUBCASE("wrong frame length") {
    auto b = pristine;
    b[10] = static_cast<char>(100);
    b[11] = 0;
    expect_format_error_at(b, 10);
  }
  SUBCASE("wrong sample rate") {
    auto b = pristine;
    b[12] = 0x20;
    expect_format_error_at(b, 12);
  }
  SUBCASE("out-of-range label in the second record") {
    auto b = pristine;
    const std::size_t at = kHeaderBytes + kRecordBytes + kFrameSamples * 4;
    b[at] = 7;
    expect_format_error_at(b, at);
  }
  SUBCASE("out-of-range operating condition") {
    auto b = pristine;
    const std::size_t at = kHeaderBytes + kFrameSamples * 4 + 1;
    b[at] = 0;
    expect_format_error_at(b, at);
  }
  SUBCASE("non-finite sample") {
    auto b = pristine;
    const std::size_t at = kHeaderBytes + 42 * 4;  // sample 42 of frame 0
    b[at + 0] = 0x00;
    b[at + 1] = 0x00;
    b[at + 2] = static_cast<char>(0xC0);
    b[at + 3] = 0x7F;  // quiet NaN
    expect_format_error_at(b, at);
  }
  SUBCASE("truncated final record") {
    auto b = pristine;
    b.pop_back();
    spit(path, b);
    CHECK_THROWS_AS(read_dataset(path), FormatError);
  }
  SUBCASE("trailing junk after the declared frames") {
    auto b = pristine;
    b.push_back(0);
    expect_format_error_at(b, pristine.size());
  }
  SUBCASE("missing file is an I/O error, not a format error") {
    CHECK_THROWS_AS(read_dataset(temp_path("vibcnn_does_not_exist.vbf")),
                    IoError);
  }
  std::remove(path.c_str());
}

TEST_CASE("write_dataset refuses invalid frames") {
  Dataset ds;
  ds.frames.push_back(patterned_frame(0, 1, 1));
  const std::string path = temp_path("vibcnn_invalid.vbf");

  SUBCASE("label out of range") {
    ds.frames[0].label = 5;
    CHECK_THROWS_AS(write_dataset(ds, path), ConfigError);
  }
  SUBCASE("operating condition out of range") {
    ds.frames[0].oc = 0;
    CHECK_THROWS_AS(write_dataset(ds, path), ConfigError);
  }
  SUBCASE("non-finite sample") {
    ds.frames[0].samples[5] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(write_dataset(ds, path), ConfigError);
  }
}

// ---------------------------------------------------------------------------
// CSV import

namespace {

// Shortest round-trip decimal for each float keeps re-imported values exact.
std::string csv_row(const Frame& f, bool with_oc) {
  std::string line;
  char buf[64];
  for (int s = 0; s < kFrameSamples; ++s) {
    std::snprintf(buf, sizeof buf, "%.9g",
                  static_cast<double>(f.samples[static_cast<std::size_t>(s)]));
    line += buf;
    line += ',';
  }
  line += std::to_string(int(f.label));
  if (with_oc) {
    line += ',';
    line += std::to_string(int(f.oc));
  }
  return line;
}

}  // namespace

TEST_CASE("csv import reads values, labels, and operating conditions back") {
  const Frame a = patterned_frame(1, 0, 1);
  const Frame b = patterned_frame(2, 4, 2);
  const std::string path = temp_path("vibcnn_import.csv");

  SUBCASE("601 columns, header, oc defaults to 1") {
    std::ofstream out(path);
    out << "c0";
    for (int s = 1; s < kFrameSamples; ++s) out << ",c" << s;
    out << ",label\n";
    out << csv_row(a, false) << "\n" << csv_row(b, false) << "\n";
    out.close();

    const Dataset ds = import_csv(path);
    REQUIRE(ds.size() == 2);
    CHECK(ds.frames[0].samples == a.samples);
    CHECK(ds.frames[1].samples == b.samples);
    CHECK(ds.frames[0].label == 0);
    CHECK(ds.frames[1].label == 4);
    CHECK(ds.frames[0].oc == 1);
    CHECK(ds.frames[1].oc == 1);
  }
  SUBCASE("602 columns, no header, CRLF endings") {
    std::ofstream out(path);
    out << csv_row(a, true) << "\r\n" << csv_row(b, true) << "\r\n";
    out.close();

    const Dataset ds = import_csv(path);
    REQUIRE(ds.size() == 2);
    CHECK(ds.frames[0].samples == a.samples);
    CHECK(ds.frames[0].oc == 1);
    CHECK(ds.frames[1].oc == 2);
  }
  SUBCASE("blank lines are skipped, row order is kept") {
    std::ofstream out(path);
    out << "\n" << csv_row(b, false) << "\n\n" << csv_row(a, false) << "\n";
    out.close();

    const Dataset ds = import_csv(path);
    REQUIRE(ds.size() == 2);
    CHECK(ds.frames[0].label == b.label);
    CHECK(ds.frames[1].label == a.label);
  }
  SUBCASE("header-only file yields an empty dataset") {
    std::ofstream out(path);
    out << "c0,c1,label\n";
    out.close();
    CHECK(import_csv(path).size() == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("csv import reports 1-based rows for malformed lines") {
  const Frame a = patterned_frame(5, 2, 1);
  const std::string path = temp_path("vibcnn_badcsv.csv");

  const auto expect_parse_error_at = [&](const std::string& text,
                                         std::uint64_t row,
                                         CsvLayout layout = CsvLayout::auto_detect) {
    std::ofstream out(path);
    out << text;
    out.close();
    try {
      import_csv(path, layout);
      FAIL_CHECK("expected a parse error at row " << row);
    } catch (const ParseError& e) {
      CHECK(e.row == row);
    }
  };

  SUBCASE("short first row") {
    // 599 samples + label = 600 cells: rejected on the first physical row.
    std::string text;
    for (int s = 0; s < 599; ++s) text += "0.0,";
    text += "2\n";
    expect_parse_error_at(text, 1);
  }
  SUBCASE("column count changes after the header") {
    expect_parse_error_at("h0,h1\n" + csv_row(a, false) + "\n1,2,3\n", 3);
  }
  SUBCASE("non-numeric sample cell") {
    std::string bad = csv_row(a, false);
    bad.replace(bad.find(','), 1, "x,");  // corrupt the second cell
    expect_parse_error_at(csv_row(a, false) + "\n" + bad + "\n", 2);
  }
  SUBCASE("fractional label") {
    std::string row = csv_row(a, false);
    row.back() = '5';
    row += ".5";
    expect_parse_error_at(row + "\n", 1);
  }
  SUBCASE("label out of range") {
    std::string row = csv_row(a, false);
    row.back() = '9';
    expect_parse_error_at(row + "\n", 1);
  }
  SUBCASE("operating condition out of range") {
    Frame f = a;
    f.oc = 2;
    std::string row = csv_row(f, true);
    row.back() = '3';
    expect_parse_error_at(row + "\n", 1);
  }
  SUBCASE("forced two-column layout rejects the one-column shape") {
    expect_parse_error_at(csv_row(a, false) + "\n", 1, CsvLayout::label_oc);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(import_csv(temp_path("vibcnn_missing.csv")), IoError);
  }
  std::remove(path.c_str());
}

// ---------------------------------------------------------------------------
// Batch gathering

TEST_CASE("gather_batch copies frames channel-major with their metadata") {
  Dataset ds;
  for (int i = 0; i < 3; ++i)
    ds.frames.push_back(patterned_frame(i, static_cast<std::uint8_t>(i), 1));

  const std::int32_t idx[] = {2, 0};
  const FrameBatch b = gather_batch(ds, idx);

  REQUIRE(b.size() == 2);
  CHECK(b.x.channels == kChannels);
  CHECK(b.x.length == kFrameLen);
  CHECK(b.labels == std::vector<std::uint8_t>{2, 0});
  CHECK(b.global_index == std::vector<std::int32_t>{2, 0});
  for (int ch = 0; ch < kChannels; ++ch)
    for (int l = 0; l < kFrameLen; ++l) {
      CHECK(b.x.at(0, ch, l) ==
            ds.frames[2].samples[static_cast<std::size_t>(ch * kFrameLen + l)]);
      CHECK(b.x.at(1, ch, l) ==
            ds.frames[0].samples[static_cast<std::size_t>(ch * kFrameLen + l)]);
    }

  const std::int32_t bad_hi[] = {3};
  CHECK_THROWS_AS(gather_batch(ds, bad_hi), ConfigError);
  const std::int32_t bad_lo[] = {-1};
  CHECK_THROWS_AS(gather_batch(ds, bad_lo), ConfigError);
}

// ---------------------------------------------------------------------------
// Stratified k-fold

namespace {

Dataset balanced_dataset(int per_class) {
  Dataset ds;
  for (int c = 0; c < kClasses; ++c)
    for (int j = 0; j < per_class; ++j)
      ds.frames.push_back(
          patterned_frame(c * per_class + j, static_cast<std::uint8_t>(c), 1));
  return ds;
}

std::array<int, kClasses> class_histogram(const Dataset& ds,
                                          std::span<const std::int32_t> idx) {
  std::array<int, kClasses> h{};
  for (std::int32_t i : idx) ++h[ds.frames[static_cast<std::size_t>(i)].label];
  return h;
}

}  // namespace

TEST_CASE("stratified_kfold deals each class round-robin into sorted folds") {
  const Dataset ds = balanced_dataset(20);
  const auto folds = stratified_kfold(ds, 5, 42);

  REQUIRE(folds.size() == 5);
  std::set<std::int32_t> seen;
  for (const auto& fold : folds) {
    CHECK(fold.size() == 20);  // 100 frames over 5 folds
    CHECK(std::is_sorted(fold.begin(), fold.end()));
    const auto h = class_histogram(ds, fold);
    for (int c = 0; c < kClasses; ++c) CHECK(h[static_cast<std::size_t>(c)] == 4);
    seen.insert(fold.begin(), fold.end());
  }
  CHECK(seen.size() == ds.size());  // disjoint and covering

  CHECK(stratified_kfold(ds, 5, 42) == folds);       // deterministic
  CHECK(stratified_kfold(ds, 5, 43) != folds);       // seed-sensitive
}

TEST_CASE("stratified_kfold spreads a remainder across the leading folds") {
  Dataset ds;
  for (int j = 0; j < 7; ++j)
    ds.frames.push_back(patterned_frame(j, 0, 1));  // one class, 7 frames

  const auto folds = stratified_kfold(ds, 5, 9);
  REQUIRE(folds.size() == 5);
  CHECK(folds[0].size() == 2);
  CHECK(folds[1].size() == 2);
  CHECK(folds[2].size() == 1);
  CHECK(folds[3].size() == 1);
  CHECK(folds[4].size() == 1);
}

TEST_CASE("stratified_kfold rejects impossible configurations") {
  const Dataset ds = balanced_dataset(3);
  CHECK_THROWS_AS(stratified_kfold(ds, 1, 0), ConfigError);
  CHECK_THROWS_AS(stratified_kfold(ds, 5, 0), ConfigError);  // 3 < 5 per class
  CHECK_THROWS_AS(stratified_kfold(Dataset{}, 5, 0), ConfigError);
}

// ---------------------------------------------------------------------------
// Train/validation split

TEST_CASE("train_val_split keeps per-class floor(ratio * count) in train") {
  const Dataset ds = balanced_dataset(20);
  std::vector<std::int32_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = static_cast<std::int32_t>(i);

  const TrainValSplit s = train_val_split(ds, all, 0.8, 7);
  CHECK(s.train.size() == 80);
  CHECK(s.val.size() == 20);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  CHECK(std::is_sorted(s.val.begin(), s.val.end()));

  const auto ht = class_histogram(ds, s.train);
  const auto hv = class_histogram(ds, s.val);
  for (int c = 0; c < kClasses; ++c) {
    CHECK(ht[static_cast<std::size_t>(c)] == 16);
    CHECK(hv[static_cast<std::size_t>(c)] == 4);
  }

  std::set<std::int32_t> seen(s.train.begin(), s.train.end());
  seen.insert(s.val.begin(), s.val.end());
  CHECK(seen.size() == ds.size());

  const TrainValSplit again = train_val_split(ds, all, 0.8, 7);
  CHECK(again.train == s.train);
  CHECK(again.val == s.val);
}

TEST_CASE("train_val_split arithmetic on awkward class sizes") {
  Dataset ds;
  for (int j = 0; j < 3; ++j) ds.frames.push_back(patterned_frame(j, 0, 1));
  std::vector<std::int32_t> idx = {0, 1, 2};

  const TrainValSplit s = train_val_split(ds, idx, 0.5, 1);
  CHECK(s.train.size() == 1);  // floor(1.5) = 1
  CHECK(s.val.size() == 2);
}

TEST_CASE("train_val_split splits only the given indices") {
  const Dataset ds = balanced_dataset(10);
  std::vector<std::int32_t> subset;
  for (int c = 0; c < kClasses; ++c)
    for (int j = 0; j < 5; ++j) subset.push_back(c * 10 + j);

  const TrainValSplit s = train_val_split(ds, subset, 0.8, 3);
  CHECK(s.train.size() == 20);  // floor(0.8 * 5) = 4 per class
  CHECK(s.val.size() == 5);
  std::set<std::int32_t> given(subset.begin(), subset.end());
  for (std::int32_t i : s.train) CHECK(given.count(i) == 1);
  for (std::int32_t i : s.val) CHECK(given.count(i) == 1);
}

TEST_CASE("train_val_split rejects degenerate requests") {
  const Dataset ds = balanced_dataset(10);
  std::vector<std::int32_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = static_cast<std::int32_t>(i);

  CHECK_THROWS_AS(train_val_split(ds, all, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(train_val_split(ds, all, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(train_val_split(ds, std::vector<std::int32_t>{}, 0.8, 0),
                  ConfigError);

  // A single-frame class cannot populate both sides.
  std::vector<std::int32_t> tiny = {0};
  CHECK_THROWS_AS(train_val_split(ds, tiny, 0.8, 0), ConfigError);
}

// ---------------------------------------------------------------------------
// Synthetic generator

TEST_CASE("generate_synthetic is deterministic and class-major") {
  SynthConfig cfg;
  cfg.frames_per_class = 4;
  cfg.seed = 11;

  const Dataset a = generate_synthetic(cfg);
  const Dataset b = generate_synthetic(cfg);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.frames[i].label == static_cast<std::uint8_t>(i / 4));
    CHECK(a.frames[i].oc == 1);
    CHECK(a.frames[i].samples == b.frames[i].samples);
  }
  const auto counts = a.class_counts();
  for (int c = 0; c < kClasses; ++c)
    CHECK(counts[static_cast<std::size_t>(c)] == 4);

  SynthConfig other = cfg;
  other.seed = 12;
  CHECK(generate_synthetic(other).frames[0].samples != a.frames[0].samples);
}

TEST_CASE("for_oc presets the rotational speed") {
  CHECK(SynthConfig::for_oc(1, 10, 0).rotational_speed_hz == 25.0);
  CHECK(SynthConfig::for_oc(2, 10, 0).rotational_speed_hz == 45.0);
  CHECK(SynthConfig::for_oc(2, 10, 0).oc == 2);
  CHECK_THROWS_AS(SynthConfig::for_oc(3, 10, 0), ConfigError);
}

TEST_CASE("synth config validation") {
  SynthConfig cfg;
  SUBCASE("frames_per_class") { cfg.frames_per_class = 0; }
  SUBCASE("oc") { cfg.oc = 0; }
  SUBCASE("speed sign") { cfg.rotational_speed_hz = -1.0; }
  SUBCASE("speed nyquist") { cfg.rotational_speed_hz = 140.0; }
  SUBCASE("load") { cfg.load_scale = 0.0; }
  SUBCASE("noise") { cfg.noise_floor = -0.1; }
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("healthy frames stay below the class-0 peak bound") {
  SynthConfig cfg;
  cfg.frames_per_class = 200;
  cfg.seed = 5;
  const Dataset ds = generate_synthetic(cfg);
  const double bound = class0_peak_bound(cfg);
  CHECK(bound == doctest::Approx(1.75 * cfg.load_scale + 4.0 * cfg.noise_floor));

  int below = 0;
  for (int j = 0; j < cfg.frames_per_class; ++j) {
    float peak = 0.0f;
    for (float v : ds.frames[static_cast<std::size_t>(j)].samples)
      peak = std::max(peak, std::abs(v));
    if (peak < bound) ++below;
  }
  CHECK(below >= static_cast<int>(0.99 * cfg.frames_per_class));
}

TEST_CASE("spectral signatures: mesh carrier present, faults ring at 2.2 kHz") {
  SynthConfig cfg;
  cfg.frames_per_class = 20;
  cfg.seed = 3;
  const Dataset ds = generate_synthetic(cfg);

  // At 25 Hz shaft speed the mesh tone is 300 Hz = bin 6 of a 200-sample
  // frame at 10 kHz; the 2.2 kHz resonance band spans roughly bins 38-50;
  // bin 20 (1 kHz) holds no deterministic component for healthy frames.
  const auto band_power = [](const float* x, int lo, int hi) {
    double p = 0.0;
    for (int k = lo; k <= hi; ++k) p += bin_power(x, kFrameLen, k);
    return p;
  };
  double mesh = 0.0, quiet = 0.0, ring_healthy = 0.0, ring_severe = 0.0;
  for (int j = 0; j < cfg.frames_per_class; ++j) {
    const float* x0 = ds.frames[static_cast<std::size_t>(j)].samples.data();
    const float* x4 =
        ds.frames[static_cast<std::size_t>(4 * cfg.frames_per_class + j)]
            .samples.data();
    mesh += bin_power(x0, kFrameLen, 6);
    quiet += bin_power(x0, kFrameLen, 20);
    ring_healthy += band_power(x0, 38, 50);
    ring_severe += band_power(x4, 38, 50);
  }
  CHECK(mesh > 100.0 * quiet);
  CHECK(ring_severe > 25.0 * ring_healthy);
}

TEST_CASE("per-frame signal energy grows with fault severity") {
  SynthConfig cfg;
  cfg.frames_per_class = 30;
  cfg.seed = 8;
  const Dataset ds = generate_synthetic(cfg);

  std::array<double, kClasses> mean_power{};
  for (int c = 0; c < kClasses; ++c) {
    for (int j = 0; j < cfg.frames_per_class; ++j) {
      const Frame& f =
          ds.frames[static_cast<std::size_t>(c * cfg.frames_per_class + j)];
      double p = 0.0;
      for (float v : f.samples) p += static_cast<double>(v) * v;
      mean_power[static_cast<std::size_t>(c)] += p / kFrameSamples;
    }
    mean_power[static_cast<std::size_t>(c)] /= cfg.frames_per_class;
  }
  for (int c = 0; c + 1 < kClasses; ++c)
    CHECK(mean_power[static_cast<std::size_t>(c)] <
          mean_power[static_cast<std::size_t>(c + 1)]);
}

TEST_CASE("operating conditions produce distinct signals") {
  const Dataset oc1 = generate_synthetic(SynthConfig::for_oc(1, 2, 4));
  const Dataset oc2 = generate_synthetic(SynthConfig::for_oc(2, 2, 4));
  CHECK(oc1.frames[0].oc == 1);
  CHECK(oc2.frames[0].oc == 2);
  CHECK(oc1.frames[0].samples != oc2.frames[0].samples);

  // The OC2 mesh tone sits at 540 Hz; OC1 has nothing there.
  const double p1 = bin_power(oc1.frames[0].samples.data(), kFrameLen, 11);
  const double p2 = bin_power(oc2.frames[0].samples.data(), kFrameLen, 11);
  CHECK(p2 > 10.0 * p1);
}

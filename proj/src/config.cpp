#include "vibcnn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "vibcnn/errors.hpp"

namespace vibcnn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Shortest decimal that round-trips, so echoed configs re-parse exactly.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view raw, std::uint64_t row, const char* key) {
  const std::string_view s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("key '" + std::string(key) + "': cannot parse '" +
                         std::string(s) + "' as a number",
                     row);
  return v;
}

int parse_int(std::string_view raw, std::uint64_t row, const char* key) {
  const double v = parse_double(raw, row, key);
  if (v != std::floor(v) || v < -2e9 || v > 2e9)
    throw ParseError("key '" + std::string(key) + "' must be an integer", row);
  return static_cast<int>(v);
}

std::vector<double> parse_list(std::string_view raw, std::uint64_t row,
                               const char* key) {
  std::vector<double> out;
  std::size_t start = 0;
  const std::string s(raw);
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string_view cell =
        std::string_view(s).substr(start, comma == std::string::npos
                                              ? std::string::npos
                                              : comma - start);
    out.push_back(parse_double(cell, row, key));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  return s;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view, std::uint64_t)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VIBCNN_INT_FIELD(name, member)                                     \
  Field{name,                                                              \
        [](RunConfig& c, std::string_view v, std::uint64_t row) {          \
          c.member = parse_int(v, row, name);                              \
        },                                                                 \
        [](const RunConfig& c) { return std::to_string(c.member); }}

#define VIBCNN_DBL_FIELD(name, member)                                     \
  Field{name,                                                              \
        [](RunConfig& c, std::string_view v, std::uint64_t row) {          \
          c.member = parse_double(v, row, name);                           \
        },                                                                 \
        [](const RunConfig& c) { return fmt(c.member); }}

// Canonical field order: training protocol first, then augmentation.
const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      VIBCNN_INT_FIELD("batch_size", train.batch_size),
      VIBCNN_DBL_FIELD("lr0", train.lr0),
      VIBCNN_DBL_FIELD("weight_decay", train.weight_decay),
      VIBCNN_DBL_FIELD("beta1", train.beta1),
      VIBCNN_DBL_FIELD("beta2", train.beta2),
      VIBCNN_DBL_FIELD("adam_eps", train.adam_eps),
      VIBCNN_DBL_FIELD("lr_factor", train.lr_factor),
      VIBCNN_INT_FIELD("lr_patience", train.lr_patience),
      VIBCNN_DBL_FIELD("improve_threshold", train.improve_threshold),
      VIBCNN_INT_FIELD("min_epochs", train.min_epochs),
      VIBCNN_INT_FIELD("stop_patience", train.stop_patience),
      VIBCNN_INT_FIELD("max_epochs", train.max_epochs),
      VIBCNN_DBL_FIELD("train_ratio", train.train_ratio),
      VIBCNN_DBL_FIELD("p_awgn", augment.p_awgn),
      Field{"snr_db",
            [](RunConfig& c, std::string_view v, std::uint64_t row) {
              c.augment.snr_db = parse_list(v, row, "snr_db");
            },
            [](const RunConfig& c) { return fmt_list(c.augment.snr_db); }},
      VIBCNN_DBL_FIELD("p_scale", augment.p_scale),
      VIBCNN_DBL_FIELD("scale_lo", augment.scale_lo),
      VIBCNN_DBL_FIELD("scale_hi", augment.scale_hi),
      VIBCNN_DBL_FIELD("p_sign", augment.p_sign),
      VIBCNN_DBL_FIELD("p_shift", augment.p_shift),
      VIBCNN_DBL_FIELD("shift_lo", augment.shift_lo),
      VIBCNN_DBL_FIELD("shift_hi", augment.shift_hi),
  };
  return f;
}

#undef VIBCNN_INT_FIELD
#undef VIBCNN_DBL_FIELD

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::uint64_t row = 0;
  std::set<std::string> seen;

  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view stripped = trim(line);
    if (stripped.empty()) continue;

    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected key=value", row);
    const std::string key(trim(stripped.substr(0, eq)));
    const std::string_view value = trim(stripped.substr(eq + 1));

    const Field* field = nullptr;
    for (const Field& f : fields())
      if (key == f.key) {
        field = &f;
        break;
      }
    if (!field) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigError("duplicate config key '" + key + "'");
    field->set(cfg, value, row);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace vibcnn

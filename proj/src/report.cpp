#include "vibcnn/report.hpp"

#include <cstdio>
#include <string>

#include "json.hpp"
#include "vibcnn/errors.hpp"

namespace vibcnn {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_json(
    const std::array<std::array<std::int64_t, kClasses>, kClasses>& m) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : m) rows.push_back(row);
  return rows;
}

ordered_json matrix_json(
    const std::array<std::array<double, kClasses>, kClasses>& m) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : m) rows.push_back(row);
  return rows;
}

ordered_json config_echo_json(const RunConfig& cfg) {
  ordered_json echo;
  echo["batch_size"] = cfg.train.batch_size;
  echo["lr0"] = cfg.train.lr0;
  echo["weight_decay"] = cfg.train.weight_decay;
  echo["beta1"] = cfg.train.beta1;
  echo["beta2"] = cfg.train.beta2;
  echo["adam_eps"] = cfg.train.adam_eps;
  echo["lr_factor"] = cfg.train.lr_factor;
  echo["lr_patience"] = cfg.train.lr_patience;
  echo["improve_threshold"] = cfg.train.improve_threshold;
  echo["min_epochs"] = cfg.train.min_epochs;
  echo["stop_patience"] = cfg.train.stop_patience;
  echo["max_epochs"] = cfg.train.max_epochs;
  echo["train_ratio"] = cfg.train.train_ratio;
  echo["p_awgn"] = cfg.augment.p_awgn;
  echo["snr_db"] = cfg.augment.snr_db;
  echo["p_scale"] = cfg.augment.p_scale;
  echo["scale_lo"] = cfg.augment.scale_lo;
  echo["scale_hi"] = cfg.augment.scale_hi;
  echo["p_sign"] = cfg.augment.p_sign;
  echo["p_shift"] = cfg.augment.p_shift;
  echo["shift_lo"] = cfg.augment.shift_lo;
  echo["shift_hi"] = cfg.augment.shift_hi;
  return echo;
}

}  // namespace

std::string report_json(const CrossvalReport& rep, const RunConfig& cfg) {
  ordered_json j;
  j["scenario"] = to_string(rep.scenario);
  j["seed"] = rep.seed;
  ordered_json folds = ordered_json::array();
  for (const FoldReport& f : rep.folds) {
    ordered_json fj;
    fj["accuracy"] = f.accuracy_pct;
    fj["confusion_counts"] = matrix_json(f.confusion.counts);
    fj["confusion_row_pct"] = matrix_json(f.confusion.row_pct());
    fj["epochs_trained"] = f.epochs_trained;
    fj["best_epoch"] = f.best_epoch;
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  j["mean_accuracy"] = rep.mean_accuracy_pct;
  j["config_echo"] = config_echo_json(cfg);
  return j.dump(2) + "\n";
}

CrossvalReport report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(),
                      e.byte > 0 ? e.byte - 1 : 0);
  }

  try {
    CrossvalReport rep;
    rep.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    rep.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& fj : j.at("folds")) {
      FoldReport f;
      f.accuracy_pct = fj.at("accuracy").get<double>();
      const auto& counts = fj.at("confusion_counts");
      if (counts.size() != kClasses)
        throw ConfigError("confusion_counts must have 5 rows");
      for (std::size_t t = 0; t < kClasses; ++t) {
        if (counts[t].size() != kClasses)
          throw ConfigError("confusion_counts rows must have 5 entries");
        for (std::size_t p = 0; p < kClasses; ++p)
          f.confusion.counts[t][p] = counts[t][p].get<std::int64_t>();
      }
      f.epochs_trained = fj.at("epochs_trained").get<int>();
      f.best_epoch = fj.at("best_epoch").get<int>();
      rep.folds.push_back(std::move(f));
    }
    rep.k = static_cast<int>(rep.folds.size());
    rep.mean_accuracy_pct = j.at("mean_accuracy").get<double>();
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report schema violation: ") + e.what(), 0);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("report schema violation: ") + e.what(), 0);
  }
}

namespace {

template <typename Emit>
void emit_confusion(const ConfusionMatrix& cm, Emit&& emit) {
  // Rendered transposed: columns are the true class, rows the prediction,
  // so each column of the percentage panel sums to 100.
  emit("confusion counts (columns = true class)\n");
  emit("%8s", "");
  for (int c = 0; c < kClasses; ++c) emit("  %8s", ("c" + std::to_string(c)).c_str());
  emit("\n");
  for (int p = 0; p < kClasses; ++p) {
    emit("  pred %d", p);
    for (int t = 0; t < kClasses; ++t)
      emit("  %8lld",
           static_cast<long long>(
               cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]));
    emit("\n");
  }

  const auto pct = cm.row_pct();
  emit("%s", "\nconfusion (% of each true class)\n");
  emit("%8s", "");
  for (int c = 0; c < kClasses; ++c) emit("  %8s", ("c" + std::to_string(c)).c_str());
  emit("\n");
  for (int p = 0; p < kClasses; ++p) {
    emit("  pred %d", p);
    for (int t = 0; t < kClasses; ++t)
      emit("  %8.2f",
           pct[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    emit("\n");
  }
}

struct TextSink {
  std::string out;
  char buf[160];

  template <typename... Args>
  void operator()(const char* fmt, Args... args) {
    if constexpr (sizeof...(Args) == 0) {
      out += fmt;
    } else {
      std::snprintf(buf, sizeof buf, fmt, args...);
      out += buf;
    }
  }
};

}  // namespace

std::string render_confusion(const ConfusionMatrix& cm) {
  TextSink emit;
  emit_confusion(cm, emit);
  return std::move(emit.out);
}

std::string render_report(const CrossvalReport& rep) {
  TextSink emit;

  emit("cross-validation report\n");
  emit("scenario: %s    folds: %d    seed: %llu\n\n",
       to_string(rep.scenario).c_str(), static_cast<int>(rep.folds.size()),
       static_cast<unsigned long long>(rep.seed));

  emit("%4s  %10s  %8s  %12s\n", "fold", "accuracy", "epochs", "best epoch");
  for (std::size_t f = 0; f < rep.folds.size(); ++f)
    emit("%4zu  %9.2f%%  %8d  %12d\n", f + 1, rep.folds[f].accuracy_pct,
         rep.folds[f].epochs_trained, rep.folds[f].best_epoch);
  emit("\nmean accuracy: %.2f%%\n", rep.mean_accuracy_pct);

  // Aggregate confusion over all folds.
  ConfusionMatrix agg;
  for (const FoldReport& f : rep.folds)
    for (std::size_t t = 0; t < kClasses; ++t)
      for (std::size_t p = 0; p < kClasses; ++p)
        agg.counts[t][p] += f.confusion.counts[t][p];

  emit("\naggregate ");
  emit_confusion(agg, emit);
  return std::move(emit.out);
}

}  // namespace vibcnn

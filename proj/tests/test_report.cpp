// Run-config parsing/serialization and the cross-validation report codecs.
// The JSON oracle is structural: documents are re-parsed with the JSON
// library and checked field by field against the inputs that built them.

#include <string>

#include "doctest.h"
#include "json.hpp"
#include "vibcnn/config.hpp"
#include "vibcnn/errors.hpp"
#include "vibcnn/report.hpp"

namespace {

using namespace vibcnn;

CrossvalReport sample_report() {
  CrossvalReport rep;
  rep.scenario = Scenario::model3;
  rep.k = 2;
  rep.seed = 42;
  for (int f = 0; f < 2; ++f) {
    FoldReport fr;
    for (int c = 0; c < kClasses; ++c)
      fr.confusion.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] =
          8 + f;
    fr.confusion.counts[0][2] = 2;  // some class-0 frames read as class 2
    fr.accuracy_pct = fr.confusion.accuracy_pct();
    fr.epochs_trained = 90 + f;
    fr.best_epoch = 65 + f;
    rep.folds.push_back(fr);
  }
  rep.mean_accuracy_pct =
      (rep.folds[0].accuracy_pct + rep.folds[1].accuracy_pct) / 2.0;
  return rep;
}

}  // namespace

// ---------------------------------------------------------------------------
// Run configuration

TEST_CASE("config defaults serialize and re-parse to the same values") {
  const RunConfig def;
  const std::string text = serialize_run_config(def);
  const RunConfig back = parse_run_config(text);

  CHECK(back.train.batch_size == def.train.batch_size);
  CHECK(back.train.lr0 == def.train.lr0);
  CHECK(back.train.weight_decay == def.train.weight_decay);
  CHECK(back.train.improve_threshold == def.train.improve_threshold);
  CHECK(back.train.train_ratio == def.train.train_ratio);
  CHECK(back.augment.p_awgn == def.augment.p_awgn);
  CHECK(back.augment.snr_db == def.augment.snr_db);
  CHECK(back.augment.shift_hi == def.augment.shift_hi);

  CHECK(serialize_run_config(back) == text);  // canonical form is a fixed point
}

TEST_CASE("config parsing: overrides, comments, and whitespace") {
  const RunConfig cfg = parse_run_config(
      "# training tweaks\n"
      "batch_size = 16\n"
      "lr0=0.002   # inline comment\n"
      "\n"
      "snr_db = 20, 25, 30\n"
      "p_shift=0.5\r\n");
  CHECK(cfg.train.batch_size == 16);
  CHECK(cfg.train.lr0 == 0.002);
  CHECK(cfg.augment.snr_db == std::vector<double>{20.0, 25.0, 30.0});
  CHECK(cfg.augment.p_shift == 0.5);
  CHECK(cfg.train.max_epochs == 120);  // untouched default
}

TEST_CASE("config parsing rejects bad input precisely") {
  CHECK_THROWS_AS(parse_run_config("bogus_key=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("batch_size=8\nbatch_size=16\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("batch_size=0\n"), ConfigError);  // validated
  CHECK_THROWS_AS(parse_run_config("p_awgn=2.0\n"), ConfigError);

  try {
    parse_run_config("batch_size=16\njust words\n");
    FAIL_CHECK("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row == 2);
  }
  try {
    parse_run_config("\n\nlr0=abc\n");
    FAIL_CHECK("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row == 3);
  }
  try {
    parse_run_config("batch_size=8.5\n");
    FAIL_CHECK("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row == 1);
  }

  CHECK_THROWS_AS(load_run_config("/nonexistent/vibcnn.conf"), IoError);
}

// ---------------------------------------------------------------------------
// Report JSON

TEST_CASE("report_json carries the schema fields with exact values") {
  const CrossvalReport rep = sample_report();
  const std::string text = report_json(rep, RunConfig{});
  const auto j = nlohmann::json::parse(text);

  CHECK(j.at("scenario") == "model3");
  CHECK(j.at("seed") == 42);
  CHECK(j.at("mean_accuracy").get<double>() ==
        doctest::Approx(rep.mean_accuracy_pct));
  REQUIRE(j.at("folds").size() == 2);

  const auto& f0 = j.at("folds")[0];
  CHECK(f0.at("accuracy").get<double>() == doctest::Approx(rep.folds[0].accuracy_pct));
  CHECK(f0.at("epochs_trained") == 90);
  CHECK(f0.at("best_epoch") == 65);
  REQUIRE(f0.at("confusion_counts").size() == 5);
  CHECK(f0.at("confusion_counts")[0][0] == 8);
  CHECK(f0.at("confusion_counts")[0][2] == 2);
  CHECK(f0.at("confusion_row_pct")[0][0].get<double>() == doctest::Approx(80.0));
  CHECK(f0.at("confusion_row_pct")[1][1].get<double>() == doctest::Approx(100.0));

  const auto& echo = j.at("config_echo");
  CHECK(echo.at("batch_size") == 32);
  CHECK(echo.at("lr0").get<double>() == 0.001);
  CHECK(echo.at("snr_db") == nlohmann::json::array({25.0, 30.0}));
  CHECK(echo.at("max_epochs") == 120);

  // Deterministic rendering: same inputs, same bytes.
  CHECK(report_json(rep, RunConfig{}) == text);
}

TEST_CASE("report_from_json inverts report_json") {
  const CrossvalReport rep = sample_report();
  const CrossvalReport back = report_from_json(report_json(rep, RunConfig{}));

  CHECK(back.scenario == rep.scenario);
  CHECK(back.seed == rep.seed);
  CHECK(back.k == rep.k);
  CHECK(back.mean_accuracy_pct == doctest::Approx(rep.mean_accuracy_pct));
  REQUIRE(back.folds.size() == rep.folds.size());
  for (std::size_t f = 0; f < rep.folds.size(); ++f) {
    CHECK(back.folds[f].confusion.counts == rep.folds[f].confusion.counts);
    CHECK(back.folds[f].epochs_trained == rep.folds[f].epochs_trained);
    CHECK(back.folds[f].best_epoch == rep.folds[f].best_epoch);
  }
}

TEST_CASE("report_from_json rejects malformed documents") {
  CHECK_THROWS_AS(report_from_json("not json at all"), FormatError);
  CHECK_THROWS_AS(report_from_json("{}"), FormatError);
  CHECK_THROWS_AS(report_from_json(R"({"scenario":"model9","seed":1,)"
                                   R"("folds":[],"mean_accuracy":0})"),
                  FormatError);
  CHECK_THROWS_AS(
      report_from_json(R"({"scenario":"model1","seed":1,"folds":)"
                       R"([{"accuracy":1.0,"confusion_counts":[[1]],)"
                       R"("epochs_trained":1,"best_epoch":1}],)"
                       R"("mean_accuracy":1.0})"),
      FormatError);
}

// ---------------------------------------------------------------------------
// Text rendering

TEST_CASE("render_report prints folds, the mean, and both confusion panels") {
  const CrossvalReport rep = sample_report();
  const std::string text = render_report(rep);

  CHECK(text.find("scenario: model3") != std::string::npos);
  CHECK(text.find("folds: 2") != std::string::npos);
  CHECK(text.find("seed: 42") != std::string::npos);
  // Fold accuracies: 40/42 and 45/47 correct, 2 decimals.
  CHECK(text.find("95.24") != std::string::npos);
  CHECK(text.find("95.74") != std::string::npos);
  char mean[32];
  std::snprintf(mean, sizeof mean, "mean accuracy: %.2f%%",
                rep.mean_accuracy_pct);
  CHECK(text.find(mean) != std::string::npos);

  // Aggregate counts: diagonal 8+9=17 everywhere, plus the 0->2 leak of 4.
  CHECK(text.find("aggregate confusion counts") != std::string::npos);
  CHECK(text.find("(% of each true class)") != std::string::npos);
  CHECK(text.find("%%") == std::string::npos);  // no unconverted specifiers
  CHECK(text.find("17") != std::string::npos);
  // Class 0 splits 17/(17+4): 80.95% read correctly, 19.05% as class 2.
  CHECK(text.find("80.95") != std::string::npos);
  CHECK(text.find("19.05") != std::string::npos);
  CHECK(text.find("100.00") != std::string::npos);

  CHECK(render_report(rep) == text);
}

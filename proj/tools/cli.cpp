// Command-line driver: a thin shell over the library. Subcommands cover the
// whole workflow — synthesize or import data, train, cross-validate,
// evaluate, predict, run the finite-difference self-check, and render
// reports. Diagnostics go to stderr; results go to files or stdout.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 data or format
// error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vibcnn/checkpoint.hpp"
#include "vibcnn/config.hpp"
#include "vibcnn/data.hpp"
#include "vibcnn/errors.hpp"
#include "vibcnn/gradcheck.hpp"
#include "vibcnn/report.hpp"
#include "vibcnn/trainer.hpp"

namespace {

using namespace vibcnn;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return ss.str();
}

// Fail before any long-running work if the output could never be written.
void check_output_dir(const std::string& path) {
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  if (dir.empty()) return;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw IoError("output directory '" + dir.string() + "' does not exist");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<std::int32_t> all_indices(const Dataset& ds) {
  std::vector<std::int32_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// ---------------------------------------------------------------------------
// Subcommand option blocks

struct SynthOpts {
  std::string out;
  int frames_per_class = 500;
  int oc = 1;
  std::uint64_t seed = 0;
  double speed_hz = 0.0;
  double load_scale = 0.0;
  double noise_floor = -1.0;
  bool speed_set = false, load_set = false, noise_set = false;
};

struct ImportOpts {
  std::string in;
  std::string out;
  std::string layout = "auto";
};

struct TrainOpts {
  std::string data;
  std::string scenario;  // empty = use every frame
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct CrossvalOpts {
  std::string data;
  std::string scenario;
  std::string config;
  std::string report;
  int k = 5;
  std::uint64_t seed = 0;
  bool quiet = false;
  bool verbose = false;
};

struct EvalOpts {
  std::string data;
  std::string checkpoint;
  std::string scenario;  // empty = use every frame
};

struct PredictOpts {
  std::string data;
  std::string checkpoint;
  std::string out;  // empty = stdout
};

struct GradcheckOpts {
  int seeds = 20;
};

struct ReportOpts {
  std::string in;
};

// ---------------------------------------------------------------------------
// Handlers

int cmd_synth(const SynthOpts& o) {
  check_output_dir(o.out);
  SynthConfig cfg = SynthConfig::for_oc(o.oc, o.frames_per_class, o.seed);
  if (o.speed_set) cfg.rotational_speed_hz = o.speed_hz;
  if (o.load_set) cfg.load_scale = o.load_scale;
  if (o.noise_set) cfg.noise_floor = o.noise_floor;
  const Dataset ds = generate_synthetic(cfg);
  write_dataset(ds, o.out);
  std::printf("wrote %zu frames (%d per class, oc %d) to %s\n", ds.size(),
              cfg.frames_per_class, cfg.oc, o.out.c_str());
  return 0;
}

int cmd_import(const ImportOpts& o) {
  check_output_dir(o.out);
  CsvLayout layout = CsvLayout::auto_detect;
  if (o.layout == "label") layout = CsvLayout::label;
  else if (o.layout == "label_oc") layout = CsvLayout::label_oc;
  const Dataset ds = import_csv(o.in, layout);
  write_dataset(ds, o.out);
  std::printf("imported %zu frames from %s to %s\n", ds.size(), o.in.c_str(),
              o.out.c_str());
  return 0;
}

RunConfig config_for(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

EpochCallback epoch_printer(bool enabled) {
  if (!enabled) return {};
  return [](int epoch, const EpochStats& s) {
    std::fprintf(stderr, "epoch %3d  loss %.4f  val %6.2f%%  lr %.6g\n", epoch,
                 s.train_loss, s.val_acc_pct, s.lr);
  };
}

int cmd_train(const TrainOpts& o) {
  check_output_dir(o.out);
  const RunConfig cfg = config_for(o.config);
  Dataset ds = read_dataset(o.data);
  if (!o.scenario.empty())
    ds = filter_scenario(ds, scenario_from_string(o.scenario));

  const auto idx = all_indices(ds);
  const TrainValSplit split =
      train_val_split(ds, idx, cfg.train.train_ratio, o.seed);
  const TrainResult tr = train_fold(ds, split.train, split.val, cfg.train,
                                    cfg.augment, o.seed,
                                    epoch_printer(!o.quiet));

  save_checkpoint(tr.best_params, &tr.adam, o.out);
  std::printf("trained %d epochs on %zu frames (val %zu)\n", tr.epochs_trained,
              split.train.size(), split.val.size());
  std::printf("best epoch %d  val accuracy %.2f%%\n", tr.best_epoch,
              tr.best_val_acc_pct);
  std::printf("checkpoint: %s\n", o.out.c_str());
  return 0;
}

int cmd_crossval(const CrossvalOpts& o) {
  if (!o.report.empty()) check_output_dir(o.report);
  const RunConfig cfg = config_for(o.config);
  const Dataset ds = read_dataset(o.data);
  const Scenario sc = scenario_from_string(o.scenario);

  FoldCallback on_fold;
  if (!o.quiet)
    on_fold = [&o](int fold, const FoldReport& fr) {
      std::fprintf(stderr, "fold %d/%d  accuracy %.2f%%  (%d epochs, best %d)\n",
                   fold + 1, o.k, fr.accuracy_pct, fr.epochs_trained,
                   fr.best_epoch);
    };

  const CrossvalReport rep =
      crossval(ds, sc, o.k, cfg.train, cfg.augment, o.seed,
               epoch_printer(o.verbose && !o.quiet), on_fold);

  if (!o.report.empty()) write_text_file(o.report, report_json(rep, cfg));
  std::fputs(render_report(rep).c_str(), stdout);
  return 0;
}

int cmd_eval(const EvalOpts& o) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  Dataset ds = read_dataset(o.data);
  if (!o.scenario.empty())
    ds = filter_scenario(ds, scenario_from_string(o.scenario));

  const auto idx = all_indices(ds);
  const EvalResult ev = evaluate(ck.params, ds, idx);
  std::printf("frames: %zu\naccuracy: %.2f%%\n\n", idx.size(), ev.accuracy_pct);
  std::fputs(render_confusion(ev.confusion).c_str(), stdout);
  return 0;
}

int cmd_predict(const PredictOpts& o) {
  if (!o.out.empty()) check_output_dir(o.out);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const Dataset ds = read_dataset(o.data);
  const auto idx = all_indices(ds);
  if (idx.empty()) throw ConfigError("dataset is empty");

  const FrameBatch batch = gather_batch(ds, idx);
  const auto pred = predict(ck.params, batch.x);

  std::FILE* f = stdout;
  if (!o.out.empty()) {
    f = std::fopen(o.out.c_str(), "wb");
    if (!f) throw IoError("cannot open '" + o.out + "' for writing");
  }
  std::fprintf(f, "index,label,pred,p0,p1,p2,p3,p4\n");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::fprintf(f, "%zu,%d,%d", i, static_cast<int>(ds.frames[i].label),
                 static_cast<int>(pred.labels[i]));
    for (int c = 0; c < kClasses; ++c)
      std::fprintf(f, ",%.6f", static_cast<double>(pred.probs.at(
                                   static_cast<int>(i), c)));
    std::fputc('\n', f);
  }
  if (f != stdout) {
    if (std::fclose(f) != 0) throw IoError("failed writing '" + o.out + "'");
  }
  return 0;
}

int cmd_gradcheck(const GradcheckOpts& o) {
  if (o.seeds < 1) throw ConfigError("--seeds must be >= 1");

  std::vector<GradCheckResult> agg;
  const auto merge = [&agg](const GradCheckResult& r) {
    for (GradCheckResult& a : agg)
      if (a.name == r.name) {
        a.max_rel_err = std::max(a.max_rel_err, r.max_rel_err);
        a.pass = a.pass && r.pass;
        return;
      }
    agg.push_back(r);
  };

  for (int s = 0; s < o.seeds; ++s) {
    for (const GradCheckResult& r :
         kernel_gradchecks(static_cast<std::uint64_t>(s)))
      merge(r);
    merge(tiny_model_gradcheck(static_cast<std::uint64_t>(s)));
  }

  bool all_pass = true;
  for (const GradCheckResult& r : agg) {
    std::printf("%-28s  max rel err %.3e  (tol %.0e)  %s\n", r.name.c_str(),
                r.max_rel_err, r.tolerance, r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::printf("%zu checks x %d seeds: %s\n", agg.size(), o.seeds,
              all_pass ? "all passed" : "FAILURES");
  return all_pass ? 0 : 3;
}

int cmd_report(const ReportOpts& o) {
  const CrossvalReport rep = report_from_json(slurp(o.in));
  std::fputs(render_report(rep).c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  CLI::App app{"vibcnn — 1-D residual CNN for gearbox fault classification "
               "from raw vibration frames"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vibcnn 1.0.0");

  const std::vector<std::string> scenario_names = {"model1", "model2",
                                                   "model3"};

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", so.out, "output dataset path (VBF1)")->required();
  synth->add_option("--frames-per-class", so.frames_per_class,
                    "frames per fault class")
      ->capture_default_str();
  synth->add_option("--oc", so.oc, "operating condition")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  synth->add_option("--seed", so.seed, "RNG seed")->required();
  auto* sp = synth->add_option("--speed-hz", so.speed_hz,
                               "override rotational speed (Hz)");
  auto* ld = synth->add_option("--load-scale", so.load_scale,
                               "override load scale");
  auto* nf = synth->add_option("--noise-floor", so.noise_floor,
                               "override noise floor");

  ImportOpts io;
  auto* import = app.add_subcommand("import", "Convert a CSV dataset to VBF1");
  import->add_option("--in", io.in, "input CSV path")->required();
  import->add_option("--out", io.out, "output dataset path (VBF1)")->required();
  import->add_option("--layout", io.layout, "CSV column layout")
      ->check(CLI::IsMember({"auto", "label", "label_oc"}))
      ->capture_default_str();

  TrainOpts to;
  auto* train = app.add_subcommand(
      "train", "Train one model on a stratified train/validation split");
  train->add_option("--data", to.data, "dataset path (VBF1)")->required();
  train->add_option("--scenario", to.scenario,
                    "restrict to a scenario's operating conditions")
      ->check(CLI::IsMember(scenario_names));
  train->add_option("--config", to.config, "training config file");
  train->add_option("--out", to.out, "output checkpoint path (VCK1)")
      ->required();
  train->add_option("--seed", to.seed, "RNG seed")->required();
  train->add_flag("--quiet", to.quiet, "suppress per-epoch progress");

  CrossvalOpts co;
  auto* cv = app.add_subcommand("crossval",
                                "Run stratified k-fold cross-validation");
  cv->add_option("--data", co.data, "dataset path (VBF1)")->required();
  cv->add_option("--scenario", co.scenario, "evaluation scenario")
      ->check(CLI::IsMember(scenario_names))
      ->required();
  cv->add_option("--k", co.k, "number of folds")->capture_default_str();
  cv->add_option("--config", co.config, "training config file");
  cv->add_option("--report", co.report, "write the JSON report here");
  cv->add_option("--seed", co.seed, "RNG seed")->required();
  cv->add_flag("--quiet", co.quiet, "suppress progress output");
  cv->add_flag("--verbose", co.verbose, "print per-epoch progress");

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval",
                                  "Evaluate a checkpoint on a dataset");
  eval->add_option("--data", eo.data, "dataset path (VBF1)")->required();
  eval->add_option("--checkpoint", eo.checkpoint, "checkpoint path (VCK1)")
      ->required();
  eval->add_option("--scenario", eo.scenario,
                   "restrict to a scenario's operating conditions")
      ->check(CLI::IsMember(scenario_names));

  PredictOpts po;
  auto* pr = app.add_subcommand(
      "predict", "Print per-frame predictions and class probabilities");
  pr->add_option("--data", po.data, "dataset path (VBF1)")->required();
  pr->add_option("--checkpoint", po.checkpoint, "checkpoint path (VCK1)")
      ->required();
  pr->add_option("--out", po.out, "output CSV path (default: stdout)");

  GradcheckOpts go;
  auto* gc = app.add_subcommand(
      "gradcheck", "Finite-difference check of every kernel and a tiny model");
  gc->add_option("--seeds", go.seeds, "number of seeds to sweep")
      ->capture_default_str();

  ReportOpts ro;
  auto* rp = app.add_subcommand("report",
                                "Render a JSON report as text tables");
  rp->add_option("--in", ro.in, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the usage diagnostic
    return rc == 0 ? 0 : 1;
  }

  so.speed_set = sp->count() > 0;
  so.load_set = ld->count() > 0;
  so.noise_set = nf->count() > 0;

  try {
    if (*synth) return cmd_synth(so);
    if (*import) return cmd_import(io);
    if (*train) return cmd_train(to);
    if (*cv) return cmd_crossval(co);
    if (*eval) return cmd_eval(eo);
    if (*pr) return cmd_predict(po);
    if (*gc) return cmd_gradcheck(go);
    if (*rp) return cmd_report(ro);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;  // unreachable: require_subcommand guarantees a match
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }

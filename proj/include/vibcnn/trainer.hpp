#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vibcnn/adam.hpp"
#include "vibcnn/augment.hpp"
#include "vibcnn/data.hpp"
#include "vibcnn/model.hpp"

// Training protocol: Adam with coupled L2 on conv/fc weights, a
// reduce-on-plateau schedule, and patience-based early stopping with a
// minimum epoch budget. All accuracies are percentages (0..100).

namespace vibcnn {

struct TrainConfig {
  int batch_size = 32;
  double lr0 = 1e-3;
  double weight_decay = 5e-5;  // coupled L2 on conv/fc weights only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_factor = 0.8;          // plateau multiplier
  int lr_patience = 5;             // stagnant epochs before a cut
  double improve_threshold = 0.01; // percentage points that count as progress
  int min_epochs = 65;
  int stop_patience = 25;          // epochs since the best before stopping
  int max_epochs = 120;
  double train_ratio = 0.8;        // train share of the non-test pool

  void validate() const;
};

// One Adam update over every trainable slot. Weight decay is added to the
// gradient (coupled L2) for slots flagged `decay`. Throws NumericError
// naming the first parameter whose update turns non-finite.
void adam_step(ModelParamsT<float>& params, GradientsT<float>& grads,
               AdamState& state, double lr, const TrainConfig& cfg);

// Reduce-on-plateau: accuracy must beat the running best by more than
// `threshold_pct` to count; `patience` stagnant epochs multiply the rate by
// `factor` and restart the count.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr0, double factor, int patience, double threshold_pct)
      : lr_(lr0), factor_(factor), threshold_(threshold_pct), patience_(patience) {}

  double lr() const { return lr_; }
  double observe(double val_acc_pct) {
    if (val_acc_pct > best_ + threshold_) {
      best_ = val_acc_pct;
      stagnant_ = 0;
    } else if (++stagnant_ >= patience_) {
      lr_ *= factor_;
      stagnant_ = 0;
    }
    return lr_;
  }

 private:
  double lr_;
  double factor_;
  double threshold_;
  int patience_;
  double best_ = -std::numeric_limits<double>::infinity();
  int stagnant_ = 0;
};

// Patience stopper on strict improvement, independent of the scheduler's
// thresholded counter. Never stops before `min_epochs`; always stops after
// `max_epochs`. Epochs are 1-based.
class EarlyStopper {
 public:
  EarlyStopper(int min_epochs, int patience, int max_epochs)
      : min_epochs_(min_epochs), patience_(patience), max_epochs_(max_epochs) {}

  // Returns true when training should end after this epoch. Sets improved()
  // for the caller's checkpointing decision.
  bool observe(int epoch, double val_acc_pct) {
    improved_ = val_acc_pct > best_;
    if (improved_) {
      best_ = val_acc_pct;
      best_epoch_ = epoch;
    }
    if (epoch >= max_epochs_) return true;
    return epoch >= min_epochs_ && epoch - best_epoch_ >= patience_;
  }

  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int min_epochs_;
  int patience_;
  int max_epochs_;
  double best_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  bool improved_ = false;
};

struct ConfusionMatrix {
  // counts[t][p]: frames of true class t predicted as class p.
  std::array<std::array<std::int64_t, kClasses>, kClasses> counts{};

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& row : counts)
      for (std::int64_t v : row) n += v;
    return n;
  }
  std::int64_t correct() const {
    std::int64_t n = 0;
    for (int c = 0; c < kClasses; ++c)
      n += counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    return n;
  }
  double accuracy_pct() const {
    const std::int64_t n = total();
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(correct()) / static_cast<double>(n);
  }
  // Each row rescaled to percentages of its true-class count.
  std::array<std::array<double, kClasses>, kClasses> row_pct() const;
};

struct EvalResult {
  double accuracy_pct = 0.0;
  ConfusionMatrix confusion;
};

EvalResult evaluate(const ModelParamsT<float>& params, const Dataset& ds,
                    std::span<const std::int32_t> indices, int batch_cap = 256);

struct EpochStats {
  double train_loss = 0.0;
  double val_acc_pct = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelParamsT<float> best_params;
  AdamState adam;                 // optimizer state at the end of training
  int epochs_trained = 0;
  int best_epoch = 0;             // 1-based epoch of the restored parameters
  double best_val_acc_pct = 0.0;
  std::vector<EpochStats> history;
};

// Progress observer: called once per finished epoch (1-based).
using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// Trains a fresh model on `train_idx`, validating on `val_idx` each epoch.
// The final partial batch of a training epoch is dropped; validation uses
// every frame. Returns the parameters of the best validation epoch.
TrainResult train_fold(const Dataset& ds, std::span<const std::int32_t> train_idx,
                       std::span<const std::int32_t> val_idx,
                       const TrainConfig& tc, const AugmentConfig& ac,
                       std::uint64_t seed, const EpochCallback& on_epoch = {});

// Evaluation scenarios: per-condition models and the pooled model.
enum class Scenario { model1, model2, model3 };

std::string to_string(Scenario sc);
Scenario scenario_from_string(const std::string& name);

// The subset a scenario trains and tests on: model1 keeps operating
// condition 1, model2 keeps condition 2, model3 keeps every frame but
// requires both conditions to be represented.
Dataset filter_scenario(const Dataset& ds, Scenario sc);

struct FoldReport {
  double accuracy_pct = 0.0;
  ConfusionMatrix confusion;
  int epochs_trained = 0;
  int best_epoch = 0;
};

struct CrossvalReport {
  Scenario scenario = Scenario::model3;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<FoldReport> folds;
  double mean_accuracy_pct = 0.0;
};

// Fold observer: called once per finished fold (0-based index).
using FoldCallback = std::function<void(int fold, const FoldReport&)>;

// Stratified k-fold cross-validation over the frames matching the scenario's
// operating conditions. Each fold trains from scratch on an 80/20 split of
// the remaining folds (ratio from the config) with a fold-derived seed, then
// tests on the held-out fold.
CrossvalReport crossval(const Dataset& ds, Scenario sc, int k,
                        const TrainConfig& tc, const AugmentConfig& ac,
                        std::uint64_t seed, const EpochCallback& on_epoch = {},
                        const FoldCallback& on_fold = {});

}  // namespace vibcnn

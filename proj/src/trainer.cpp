#include "vibcnn/trainer.hpp"

#include <cmath>
#include <numeric>

#include "vibcnn/errors.hpp"
#include "vibcnn/rng.hpp"

namespace vibcnn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(lr0 > 0.0) || !std::isfinite(lr0))
    throw ConfigError("lr0 must be positive and finite");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw ConfigError("weight_decay must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(lr_factor > 0.0 && lr_factor <= 1.0))
    throw ConfigError("lr_factor must lie in (0, 1]");
  if (lr_patience < 1) throw ConfigError("lr_patience must be positive");
  if (!(improve_threshold >= 0.0))
    throw ConfigError("improve_threshold must be nonnegative");
  if (min_epochs < 1) throw ConfigError("min_epochs must be positive");
  if (stop_patience < 1) throw ConfigError("stop_patience must be positive");
  if (max_epochs < min_epochs)
    throw ConfigError("max_epochs must be at least min_epochs");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw ConfigError("train_ratio must lie strictly between 0 and 1");
}

void adam_step(ModelParamsT<float>& params, GradientsT<float>& grads,
               AdamState& state, double lr, const TrainConfig& cfg) {
  auto ps = trainable_slots(params);
  auto gs = grad_slots(grads);
  if (state.m.size() != ps.size() || state.v.size() != ps.size())
    throw ConfigError("optimizer state does not match the parameter layout");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

  for (std::size_t s = 0; s < ps.size(); ++s) {
    auto theta = ps[s].values;
    const auto grad = gs[s].values;
    if (grad.size() != theta.size() || state.m[s].size() != theta.size())
      throw ConfigError(std::string("gradient or moment size mismatch for ") +
                        ps[s].name);
    float* m = state.m[s].data();
    float* v = state.v[s].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      double g = grad[j];
      if (ps[s].decay) g += cfg.weight_decay * theta[j];
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double next =
          theta[j] - lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg.adam_eps);
      if (!std::isfinite(next))
        throw NumericError(std::string("non-finite update for parameter '") +
                           ps[s].name + "' at step " + std::to_string(state.t));
      theta[j] = static_cast<float>(next);
    }
  }
}

std::array<std::array<double, kClasses>, kClasses> ConfusionMatrix::row_pct()
    const {
  std::array<std::array<double, kClasses>, kClasses> out{};
  for (int t = 0; t < kClasses; ++t) {
    const auto& row = counts[static_cast<std::size_t>(t)];
    std::int64_t row_total = 0;
    for (std::int64_t v : row) row_total += v;
    if (row_total == 0) continue;
    for (int p = 0; p < kClasses; ++p)
      out[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] =
          100.0 * static_cast<double>(row[static_cast<std::size_t>(p)]) /
          static_cast<double>(row_total);
  }
  return out;
}

EvalResult evaluate(const ModelParamsT<float>& params, const Dataset& ds,
                    std::span<const std::int32_t> indices, int batch_cap) {
  if (indices.empty()) throw ConfigError("cannot evaluate an empty index set");
  const FrameBatch batch = gather_batch(ds, indices);
  const auto pred = predict(params, batch.x, batch_cap);

  EvalResult r;
  for (std::size_t i = 0; i < batch.labels.size(); ++i)
    ++r.confusion.counts[batch.labels[i]][pred.labels[i]];
  r.accuracy_pct = r.confusion.accuracy_pct();
  return r;
}

TrainResult train_fold(const Dataset& ds, std::span<const std::int32_t> train_idx,
                       std::span<const std::int32_t> val_idx,
                       const TrainConfig& tc, const AugmentConfig& ac,
                       std::uint64_t seed, const EpochCallback& on_epoch) {
  tc.validate();
  ac.validate();
  if (train_idx.size() < static_cast<std::size_t>(tc.batch_size))
    throw ConfigError("training set is smaller than one batch");
  if (val_idx.empty()) throw ConfigError("validation set is empty");

  auto params = init_params<float>(ModelDims::standard(), seed);
  auto adam = AdamState::init(params);
  PlateauScheduler sched(tc.lr0, tc.lr_factor, tc.lr_patience,
                         tc.improve_threshold);
  EarlyStopper stopper(tc.min_epochs, tc.stop_patience, tc.max_epochs);

  TrainResult res;
  res.best_params = params;
  res.adam = adam;

  std::vector<std::int32_t> order(train_idx.begin(), train_idx.end());
  const int n_batches = static_cast<int>(order.size()) / tc.batch_size;

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    const double lr = sched.lr();
    Rng shuffle_rng(
        derive_key(seed, RngTag::epoch_shuffle, static_cast<std::uint64_t>(epoch)));
    deterministic_shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    for (int bi = 0; bi < n_batches; ++bi) {
      FrameBatch batch = gather_batch(
          ds, std::span<const std::int32_t>(order).subspan(
                  static_cast<std::size_t>(bi) *
                      static_cast<std::size_t>(tc.batch_size),
                  static_cast<std::size_t>(tc.batch_size)));
      batch = augment_batch(batch, ac, epoch, seed);
      ForwardCacheT<float> cache;
      const auto logits = model_forward_train(params, batch.x, cache);
      auto lg = model_loss_and_grads(params, cache, logits, batch.labels);
      loss_sum += lg.loss;
      adam_step(params, lg.grads, adam, lr, tc);
    }

    const EvalResult val = evaluate(params, ds, val_idx);
    res.history.push_back(
        {n_batches > 0 ? loss_sum / n_batches : 0.0, val.accuracy_pct, lr});
    res.epochs_trained = epoch;
    if (on_epoch) on_epoch(epoch, res.history.back());

    const bool stop = stopper.observe(epoch, val.accuracy_pct);
    if (stopper.improved()) {
      res.best_params = params;
      res.adam = adam;
      res.best_epoch = epoch;
      res.best_val_acc_pct = val.accuracy_pct;
    }
    sched.observe(val.accuracy_pct);
    if (stop) break;
  }
  return res;
}

std::string to_string(Scenario sc) {
  switch (sc) {
    case Scenario::model1: return "model1";
    case Scenario::model2: return "model2";
    case Scenario::model3: return "model3";
  }
  throw ConfigError("unknown scenario");
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "model1") return Scenario::model1;
  if (name == "model2") return Scenario::model2;
  if (name == "model3") return Scenario::model3;
  throw ConfigError("unknown scenario '" + name +
                    "' (expected model1, model2, or model3)");
}

Dataset filter_scenario(const Dataset& ds, Scenario sc) {
  // Per-condition models train on one operating condition; the pooled model
  // needs both represented.
  Dataset sub;
  sub.provenance = ds.provenance + " [" + to_string(sc) + "]";
  bool saw1 = false, saw2 = false;
  for (const Frame& f : ds.frames) {
    (f.oc == 1 ? saw1 : saw2) = true;
    const bool keep = (sc == Scenario::model1 && f.oc == 1) ||
                      (sc == Scenario::model2 && f.oc == 2) ||
                      sc == Scenario::model3;
    if (keep) sub.frames.push_back(f);
  }
  if (sub.frames.empty())
    throw ConfigError("no frames match scenario " + to_string(sc));
  if (sc == Scenario::model3 && !(saw1 && saw2))
    throw ConfigError(
        "the pooled scenario requires frames from both operating conditions");
  return sub;
}

CrossvalReport crossval(const Dataset& ds, Scenario sc, int k,
                        const TrainConfig& tc, const AugmentConfig& ac,
                        std::uint64_t seed, const EpochCallback& on_epoch,
                        const FoldCallback& on_fold) {
  tc.validate();
  ac.validate();

  const Dataset sub = filter_scenario(ds, sc);
  const auto folds = stratified_kfold(sub, k, seed);

  CrossvalReport rep;
  rep.scenario = sc;
  rep.k = k;
  rep.seed = seed;

  for (int f = 0; f < k; ++f) {
    std::vector<std::int32_t> pool;
    for (int g = 0; g < k; ++g)
      if (g != f)
        pool.insert(pool.end(), folds[static_cast<std::size_t>(g)].begin(),
                    folds[static_cast<std::size_t>(g)].end());

    const std::uint64_t fold_seed =
        derive_key(seed, RngTag::fold_seed, static_cast<std::uint64_t>(f));
    const TrainValSplit split =
        train_val_split(sub, pool, tc.train_ratio, fold_seed);
    const TrainResult tr =
        train_fold(sub, split.train, split.val, tc, ac, fold_seed, on_epoch);
    const EvalResult ev =
        evaluate(tr.best_params, sub, folds[static_cast<std::size_t>(f)]);

    rep.folds.push_back(
        {ev.accuracy_pct, ev.confusion, tr.epochs_trained, tr.best_epoch});
    rep.mean_accuracy_pct += ev.accuracy_pct;
    if (on_fold) on_fold(f, rep.folds.back());
  }
  rep.mean_accuracy_pct /= static_cast<double>(k);
  return rep;
}

}  // namespace vibcnn

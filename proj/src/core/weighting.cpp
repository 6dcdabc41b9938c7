#include "core/weighting.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace msuda {

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "shared") return WeightMode::SharedPath;
  if (s == "private") return WeightMode::PrivatePath;
  throw_config("unknown weight mode '" + s + "' (expected 'shared' or 'private')");
}

const char* to_string(WeightMode mode) {
  return mode == WeightMode::SharedPath ? "shared" : "private";
}

std::vector<double> normalize_weights(const std::vector<double>& raw) {
  if (raw.empty()) throw_dimension("normalize_weights: empty weight vector");
  double sum = 0.0;
  for (double w : raw) {
    if (w < 0.0) throw_config("normalize_weights: negative raw weight");
    sum += w;
  }
  if (sum <= 0.0 || !std::isfinite(sum)) {
    log_warn("all instance weights vanished; falling back to uniform");
    return std::vector<double>(raw.size(), 1.0 / static_cast<double>(raw.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sum;
  return out;
}

namespace {

std::vector<std::vector<double>> batch_weights(const SharedPrivateModel& model,
                                               const SparseBatch& x, WeightMode mode) {
  const std::size_t k = model.config.num_sources;
  std::vector<std::vector<double>> raw(x.size(), std::vector<double>(k, 0.0));
  if (mode == WeightMode::SharedPath) {
    const Matrix probs = model.discriminate(model.extract_shared(x));
    for (std::size_t r = 0; r < x.size(); ++r)
      for (std::size_t j = 0; j < k; ++j) raw[r][j] = probs.at(r, j);
  } else {
    for (std::size_t j = 0; j < k; ++j) {
      const Matrix probs =
          model.discriminate(model.extract_private(static_cast<int>(j), x));
      for (std::size_t r = 0; r < x.size(); ++r) raw[r][j] = probs.at(r, j);
    }
  }
  std::vector<std::vector<double>> out;
  out.reserve(x.size());
  for (auto& row : raw) out.push_back(normalize_weights(row));
  return out;
}

}  // namespace

std::vector<double> instance_weights(const SharedPrivateModel& model, const FeatureVector& x,
                                     WeightMode mode) {
  SparseBatch batch;
  batch.dim = model.config.input_dim;
  batch.rows.push_back(&x);
  return batch_weights(model, batch, mode).front();
}

std::vector<double> combine_predictions(const std::vector<std::vector<double>>& per_source,
                                        const std::vector<double>& weights) {
  if (per_source.empty()) throw_dimension("combine_predictions: no source predictions");
  if (per_source.size() != weights.size())
    throw_dimension("combine_predictions: weight count does not match source count");
  const std::size_t classes = per_source.front().size();
  std::vector<double> combined(classes, 0.0);
  for (std::size_t j = 0; j < per_source.size(); ++j) {
    if (per_source[j].size() != classes)
      throw_dimension("combine_predictions: class counts differ across sources");
    for (std::size_t c = 0; c < classes; ++c) combined[c] += weights[j] * per_source[j][c];
  }
  return combined;
}

std::vector<TargetPrediction> predict_target(const SharedPrivateModel& model,
                                             const SparseBatch& x, WeightMode mode) {
  const std::vector<Matrix> preds = model.source_predictions(x);
  const std::vector<std::vector<double>> weights = batch_weights(model, x, mode);
  const std::size_t k = model.config.num_sources;
  const std::size_t classes = model.config.num_classes;

  std::vector<TargetPrediction> out(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) {
    TargetPrediction& tp = out[r];
    tp.per_source.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      tp.per_source[j].assign(preds[j].row(r), preds[j].row(r) + classes);
    }
    tp.weights = weights[r];
    tp.combined = combine_predictions(tp.per_source, tp.weights);
    const auto best = std::max_element(tp.combined.begin(), tp.combined.end());
    tp.confidence = *best;
    tp.label = static_cast<int>(best - tp.combined.begin());
  }
  return out;
}

std::optional<int> pseudo_label_rule(const std::vector<double>& ensemble_probs,
                                     const std::vector<double>& target_probs, double delta,
                                     bool bootstrap) {
  const auto ens_best = std::max_element(ensemble_probs.begin(), ensemble_probs.end());
  if (!(*ens_best > delta)) return std::nullopt;
  const int ens_label = static_cast<int>(ens_best - ensemble_probs.begin());
  if (bootstrap) return ens_label;
  const auto tgt_best = std::max_element(target_probs.begin(), target_probs.end());
  if (!(*tgt_best > delta)) return std::nullopt;
  const int tgt_label = static_cast<int>(tgt_best - target_probs.begin());
  if (tgt_label != ens_label) return std::nullopt;
  return ens_label;
}

std::vector<PseudoLabel> pseudo_label_select(const SharedPrivateModel& model,
                                             const SparseBatch& pool, double delta,
                                             bool bootstrap, WeightMode mode) {
  if (!(delta > 0.5) || delta > 1.0)
    throw_config("pseudo_label_select: delta must lie in (0.5, 1]");
  std::vector<PseudoLabel> selected;
  if (pool.size() == 0) return selected;

  const std::vector<TargetPrediction> ensemble = predict_target(model, pool, mode);
  Matrix target_probs;
  if (!bootstrap) {
    const Matrix z_s = model.extract_shared(pool);
    const Matrix z_t = model.extract_private(kTargetPath, pool);
    target_probs = model.classify(z_s, z_t);
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::vector<double> tp;
    if (!bootstrap)
      tp.assign(target_probs.row(i), target_probs.row(i) + target_probs.cols);
    const auto label = pseudo_label_rule(ensemble[i].combined, tp, delta, bootstrap);
    if (label) selected.push_back({i, *label});
  }
  return selected;
}

}  // namespace msuda

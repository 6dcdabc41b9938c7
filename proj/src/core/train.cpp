#include "core/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace msuda {

void TrainConfig::validate() const {
  if (batch_size < 1) throw_config("train: batch_size must be >= 1");
  if (lr <= 0.0) throw_config("train: learning rate must be positive");
  if (lambda <= 0.0) throw_config("train: lambda must be positive");
  if (n_critic < 1) throw_config("train: n_critic must be >= 1");
  if (patience < 1) throw_config("train: patience must be >= 1");
}

void PseudoLabelConfig::validate() const {
  if (!(delta0 > 0.5) || delta0 > 1.0) throw_config("pseudo: delta must lie in (0.5, 1]");
  if (eta <= 0.0) throw_config("pseudo: eta must be positive");
  if (iter_min < 1) throw_config("pseudo: iter_min must be >= 1");
}

SparseBatch ValidationSet::batch() const {
  SparseBatch b;
  b.dim = input_dim;
  b.rows.reserve(features.size());
  for (const FeatureVector& f : features) b.rows.push_back(&f);
  return b;
}

StopDecision early_stop(const std::vector<double>& val_history, std::size_t patience) {
  if (val_history.empty()) throw_config("early_stop: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_history.size(); ++i)
    if (val_history[i] > val_history[best]) best = i;
  const std::size_t since_best = val_history.size() - 1 - best;
  return {since_best >= patience, best};
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& reference) {
  if (predicted.size() != reference.size())
    throw_dimension("accuracy: prediction/reference length mismatch");
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == reference[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {

constexpr std::size_t kMetricsEvalCap = 2000;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Shuffled cyclic index stream over one corpus.
class Cycler {
 public:
  Cycler(std::size_t n, Rng* rng) : order_(n), rng_(rng) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_->shuffle(order_);
  }
  std::size_t next() {
    if (pos_ == order_.size()) {
      rng_->shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  Rng* rng_;
};

const Corpus& domain_corpus(const DatasetBundle& data, std::size_t d) {
  return d < data.num_sources() ? data.sources[d] : data.target;
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double* p = probs.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols; ++c)
      if (p[c] > p[best]) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

std::vector<std::size_t> stride_sample(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (cap == 0 || n <= cap) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  const double step = static_cast<double>(n) / static_cast<double>(cap);
  idx.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i)
    idx.push_back(static_cast<std::size_t>(static_cast<double>(i) * step));
  return idx;
}

// Parameter values only; used for best/last-good snapshots.
using ValueSnapshot = std::vector<std::vector<double>>;

ValueSnapshot snapshot_values(SharedPrivateModel& m) {
  ValueSnapshot snap;
  for (const ParamBlock& b : m.all_params())
    snap.emplace_back(b.value, b.value + b.count);
  return snap;
}

void restore_values(SharedPrivateModel& m, const ValueSnapshot& snap) {
  ParamSet params = m.all_params();
  if (params.size() != snap.size()) throw_dimension("snapshot does not match model layout");
  for (std::size_t i = 0; i < params.size(); ++i)
    std::memcpy(params[i].value, snap[i].data(), params[i].count * sizeof(double));
}

}  // namespace

double validation_accuracy(const SharedPrivateModel& model, const ValidationSet& val,
                           WeightMode mode) {
  if (val.empty()) return 0.0;
  const SparseBatch batch = val.batch();
  if (val.kind == ValKind::TargetTransductive) {
    const auto preds = predict_target(model, batch, mode);
    std::vector<int> labels(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) labels[i] = preds[i].label;
    return accuracy(labels, val.labels);
  }
  // Held-out source instances, each classified through its own private path.
  if (val.domains.size() != val.features.size())
    throw_config("validation: source-held-out set needs per-instance domains");
  std::size_t hits = 0;
  for (std::size_t j = 0; j < model.config.num_sources; ++j) {
    SparseBatch sub;
    sub.dim = val.input_dim;
    std::vector<int> sub_labels;
    for (std::size_t i = 0; i < val.features.size(); ++i) {
      if (val.domains[i] == static_cast<int>(j)) {
        sub.rows.push_back(&val.features[i]);
        sub_labels.push_back(val.labels[i]);
      }
    }
    if (sub.rows.empty()) continue;
    const Matrix probs =
        model.classify(model.extract_shared(sub), model.extract_private(static_cast<int>(j), sub));
    const auto pred = argmax_rows(probs);
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == sub_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(val.features.size());
}

std::vector<int> target_path_predictions(const SharedPrivateModel& model, const SparseBatch& x) {
  const Matrix probs = model.classify(model.extract_shared(x), model.extract_private(kTargetPath, x));
  return argmax_rows(probs);
}

double target_path_accuracy(const SharedPrivateModel& model, const SparseBatch& x,
                            const std::vector<int>& labels) {
  return accuracy(target_path_predictions(model, x), labels);
}

double domain_accuracy_shared(const SharedPrivateModel& model, const DatasetBundle& data,
                              std::size_t max_instances) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t d = 0; d < data.num_sources() + 1; ++d) {
    const Corpus& corpus = domain_corpus(data, d);
    const auto idx = stride_sample(corpus.items.size(), max_instances == 0
                                                            ? 0
                                                            : max_instances / (data.num_sources() + 1));
    if (idx.empty()) continue;
    SparseBatch batch;
    batch.dim = data.input_dim;
    for (std::size_t i : idx) batch.rows.push_back(&corpus.items[i].features);
    const auto pred = argmax_rows(model.discriminate(model.extract_shared(batch)));
    for (int p : pred)
      if (p == static_cast<int>(d)) ++hits;
    total += pred.size();
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

double domain_accuracy_private(const SharedPrivateModel& model, const DatasetBundle& data,
                               std::size_t max_instances) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t j = 0; j < data.num_sources(); ++j) {
    const Corpus& corpus = data.sources[j];
    const auto idx = stride_sample(corpus.items.size(),
                                   max_instances == 0 ? 0 : max_instances / data.num_sources());
    if (idx.empty()) continue;
    SparseBatch batch;
    batch.dim = data.input_dim;
    for (std::size_t i : idx) batch.rows.push_back(&corpus.items[i].features);
    const auto pred =
        argmax_rows(model.discriminate(model.extract_private(static_cast<int>(j), batch)));
    for (int p : pred)
      if (p == static_cast<int>(j)) ++hits;
    total += pred.size();
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

namespace {

// Source corpora may mix labeled and unlabeled documents; domain batches draw
// from everything, classifier batches from the labeled subset only.
struct BatchBuilder {
  const DatasetBundle* data;
  std::size_t batch_size;
  std::vector<Cycler> domain_cyclers;               // one per domain, target last
  std::vector<std::vector<std::size_t>> labeled;    // labeled indices per source
  std::vector<Cycler> labeled_cyclers;

  BatchBuilder(const DatasetBundle* d, std::size_t b, Rng* rng) : data(d), batch_size(b) {
    for (std::size_t dom = 0; dom < d->num_sources() + 1; ++dom)
      domain_cyclers.emplace_back(domain_corpus(*d, dom).items.size(), rng);
    labeled.resize(d->num_sources());
    for (std::size_t j = 0; j < d->num_sources(); ++j) {
      for (std::size_t i = 0; i < d->sources[j].items.size(); ++i)
        if (d->sources[j].items[i].class_label) labeled[j].push_back(i);
      if (labeled[j].empty())
        throw_config("source corpus '" + d->sources[j].name + "' has no labeled documents");
      labeled_cyclers.emplace_back(labeled[j].size(), rng);
    }
  }

  // One minibatch per domain, concatenated; the second view covers only the
  // source instances of the same draw.
  void sample_all_domains(DomainBatch* all, DomainBatch* source_view) {
    all->x.dim = data->input_dim;
    all->x.rows.clear();
    all->domains.clear();
    source_view->x.dim = data->input_dim;
    source_view->x.rows.clear();
    source_view->domains.clear();
    const std::size_t num_domains = data->num_sources() + 1;
    for (std::size_t d = 0; d < num_domains; ++d) {
      const Corpus& corpus = domain_corpus(*data, d);
      for (std::size_t i = 0; i < batch_size; ++i) {
        const Example& ex = corpus.items[domain_cyclers[d].next()];
        all->x.rows.push_back(&ex.features);
        all->domains.push_back(static_cast<int>(d));
        if (d < data->num_sources()) {
          source_view->x.rows.push_back(&ex.features);
          source_view->domains.push_back(static_cast<int>(d));
        }
      }
    }
  }

  std::vector<LabeledBatch> sample_source_batches() {
    std::vector<LabeledBatch> batches(data->num_sources());
    for (std::size_t j = 0; j < data->num_sources(); ++j) {
      LabeledBatch& b = batches[j];
      b.source = static_cast<int>(j);
      b.x.dim = data->input_dim;
      for (std::size_t i = 0; i < batch_size; ++i) {
        const Example& ex = data->sources[j].items[labeled[j][labeled_cyclers[j].next()]];
        b.x.rows.push_back(&ex.features);
        b.labels.push_back(*ex.class_label);
      }
    }
    return batches;
  }
};

void check_bundle(const SharedPrivateModel& model, const DatasetBundle& data) {
  if (data.sources.empty()) throw_config("training requires at least one source corpus");
  if (data.num_sources() != model.config.num_sources)
    throw_config("model was built for " + std::to_string(model.config.num_sources) +
                 " sources but the dataset has " + std::to_string(data.num_sources()));
  if (data.input_dim != model.config.input_dim)
    throw_config("dataset dimensionality does not match the model input");
  for (const Corpus& s : data.sources)
    if (s.items.empty()) throw_config("source corpus '" + s.name + "' is empty");
  if (data.target.items.empty()) throw_config("target corpus is empty");
}

}  // namespace

TrainResult train_wsuda(SharedPrivateModel model, const DatasetBundle& data,
                        const ValidationSet& val, const TrainConfig& cfg,
                        const MetricsSink& sink) {
  cfg.validate();
  check_bundle(model, data);

  Rng rng(mix_seed(cfg.seed, 0x57735));
  BatchBuilder builder(&data, cfg.batch_size, &rng);

  AdamState adam_d(model.discriminator_params(), cfg.lr);
  AdamState adam_main(model.main_params(), cfg.lr);

  std::size_t largest_source = 0;
  for (const Corpus& s : data.sources) largest_source = std::max(largest_source, s.items.size());
  const std::size_t steps_per_epoch =
      (largest_source + cfg.batch_size - 1) / cfg.batch_size;

  const bool has_val = !val.empty();
  TrainResult result;
  result.status = TrainStatus::MaxEpochs;
  ValueSnapshot best = snapshot_values(model);
  ValueSnapshot last_good = best;
  double best_val = -1.0;
  std::vector<double> val_history;

  DomainBatch all_batch, source_view, all_batch_main;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double sum_loss_d = 0.0;
    double sum_loss_main = 0.0;
    bool aborted = false;
    try {
      for (std::size_t step = 0; step < steps_per_epoch; ++step) {
        for (std::size_t t = 0; t < cfg.n_critic; ++t) {
          builder.sample_all_domains(&all_batch, &source_view);
          const double loss_d = discriminator_loss(model, all_batch, source_view, true);
          if (!std::isfinite(loss_d)) throw_numeric("discriminator loss diverged");
          adam_d.step(model.discriminator_params());
          sum_loss_d += loss_d;
        }
        const std::vector<LabeledBatch> source_batches = builder.sample_source_batches();
        builder.sample_all_domains(&all_batch_main, &source_view);
        const double loss_main =
            main_phase_loss(model, source_batches, all_batch_main, cfg.lambda,
                            cfg.include_private_coop_term, true);
        if (!std::isfinite(loss_main)) throw_numeric("main-phase loss diverged");
        adam_main.step(model.main_params());
        sum_loss_main += loss_main;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric) throw;
      log_warn(std::string("aborting training: ") + e.what());
      aborted = true;
    }
    if (aborted) {
      result.status = TrainStatus::NanAbort;
      restore_values(model, last_good);
      break;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.loss_d = sum_loss_d / static_cast<double>(steps_per_epoch * cfg.n_critic);
    m.loss_main = sum_loss_main / static_cast<double>(steps_per_epoch);
    m.shared_dom_acc = domain_accuracy_shared(model, data, kMetricsEvalCap);
    m.private_dom_acc = domain_accuracy_private(model, data, kMetricsEvalCap);
    m.val_acc = has_val ? validation_accuracy(model, val, cfg.weight_mode) : 0.0;
    result.history.push_back(m);
    if (sink) sink(m);

    last_good = snapshot_values(model);
    if (has_val) {
      val_history.push_back(m.val_acc);
      if (m.val_acc > best_val) {
        best_val = m.val_acc;
        best = last_good;
      }
      const StopDecision decision = early_stop(val_history, cfg.patience);
      result.best_epoch = decision.best_epoch;
      if (decision.stop) {
        result.status = TrainStatus::Converged;
        break;
      }
    }
  }

  if (result.status != TrainStatus::NanAbort) {
    if (has_val && best_val >= 0.0) restore_values(model, best);
    // without a validation set the final parameters stand
  }
  result.model = std::move(model);
  return result;
}

TwoStageResult train_2studa(SharedPrivateModel model, const DatasetBundle& data,
                            const ValidationSet& val, const TrainConfig& cfg,
                            const PseudoLabelConfig& pl, const MetricsSink& sink) {
  cfg.validate();
  pl.validate();
  check_bundle(model, data);
  model.add_target_extractor(mix_seed(cfg.seed, 0xE7));

  Rng rng(mix_seed(cfg.seed, 0x2577));
  AdamState adam_t(model.target_params(), cfg.lr);

  const bool has_val = !val.empty();
  TwoStageResult result;

  // Frozen-path metrics do not change while only E_t trains.
  const double shared_acc = domain_accuracy_shared(model, data, kMetricsEvalCap);
  const double private_acc = domain_accuracy_private(model, data, kMetricsEvalCap);

  std::vector<std::size_t> pool(data.target.items.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;

  struct Labeled {
    const FeatureVector* x;
    int label;
  };
  std::vector<Labeled> accumulated;
  std::deque<std::size_t> tau;  // sizes of the last two selection rounds
  std::size_t round = 0;
  std::size_t metrics_epoch = 0;

  auto train_target_steps = [&](const std::vector<Labeled>& set, std::size_t steps) {
    double loss_sum = 0.0;
    Cycler cycler(set.size(), &rng);
    for (std::size_t it = 0; it < steps; ++it) {
      SparseBatch bx;
      bx.dim = data.input_dim;
      std::vector<int> by;
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        const Labeled& ex = set[cycler.next()];
        bx.rows.push_back(ex.x);
        by.push_back(ex.label);
      }
      const double loss =
          classifier_loss(model, kTargetPath, bx, by, ClassifierGrad::TargetExtractorOnly);
      if (!std::isfinite(loss)) throw_numeric("target-path loss diverged");
      adam_t.step(model.target_params());
      loss_sum += loss;
    }
    return loss_sum / static_cast<double>(steps);
  };

  auto emit = [&](double loss_main) {
    EpochMetrics m;
    m.epoch = metrics_epoch++;
    m.loss_d = 0.0;
    m.loss_main = loss_main;
    m.shared_dom_acc = shared_acc;
    m.private_dom_acc = private_acc;
    m.val_acc = has_val ? target_path_accuracy(model, val.batch(), val.labels) : 0.0;
    result.history.push_back(m);
    if (sink) sink(m);
    return m.val_acc;
  };

  try {
    while (true) {
      const double delta = pl.delta0 - static_cast<double>(round) * pl.eta;
      if (!(delta > 0.5)) break;

      SparseBatch pool_batch;
      pool_batch.dim = data.input_dim;
      for (std::size_t i : pool) pool_batch.rows.push_back(&data.target.items[i].features);

      const bool bootstrap = round == 0 && pl.bootstrap_first_round;
      const auto selected =
          pseudo_label_select(model, pool_batch, delta, bootstrap, cfg.weight_mode);

      if (selected.empty() && accumulated.empty()) {
        log_warn("no pseudo-labels accepted at threshold " + std::to_string(delta) +
                 "; lowering the threshold and retrying");
        result.rounds.push_back({round, delta, 0, accumulated.size()});
        ++round;
        continue;
      }

      double round_loss = 0.0;
      if (!selected.empty()) {
        std::vector<Labeled> fresh;
        fresh.reserve(selected.size());
        for (const PseudoLabel& s : selected)
          fresh.push_back({&data.target.items[pool[s.index]].features, s.label});
        const std::size_t steps =
            std::max(pl.iter_min, (fresh.size() + cfg.batch_size - 1) / cfg.batch_size);
        round_loss = train_target_steps(fresh, steps);
        // Move the selected instances from the pool into the accumulated set.
        std::vector<bool> taken(pool.size(), false);
        for (const PseudoLabel& s : selected) taken[s.index] = true;
        std::vector<std::size_t> remaining;
        remaining.reserve(pool.size() - selected.size());
        for (std::size_t i = 0; i < pool.size(); ++i)
          if (!taken[i]) remaining.push_back(pool[i]);
        pool = std::move(remaining);
        accumulated.insert(accumulated.end(), fresh.begin(), fresh.end());
      }

      tau.push_back(selected.size());
      if (tau.size() > 2) tau.pop_front();
      result.rounds.push_back({round, delta, selected.size(), accumulated.size()});
      emit(round_loss);
      ++round;

      if (tau.size() == 2 && tau[0] + tau[1] <= pl.min_new) break;
      if (pool.empty()) break;
    }

    // Finetune on everything accumulated, early stopping on validation.
    if (!accumulated.empty()) {
      ValueSnapshot best = snapshot_values(model);
      double best_val = -1.0;
      std::vector<double> val_history;
      const std::size_t steps_per_epoch =
          (accumulated.size() + cfg.batch_size - 1) / cfg.batch_size;
      result.status = TrainStatus::MaxEpochs;
      for (std::size_t epoch = 0; epoch < pl.finetune_max_epochs; ++epoch) {
        const double loss = train_target_steps(accumulated, steps_per_epoch);
        const double val_acc = emit(loss);
        if (has_val) {
          val_history.push_back(val_acc);
          if (val_acc > best_val) {
            best_val = val_acc;
            best = snapshot_values(model);
          }
          const StopDecision decision = early_stop(val_history, cfg.patience);
          result.best_epoch = result.rounds.size() + decision.best_epoch;
          if (decision.stop) {
            result.status = TrainStatus::Converged;
            break;
          }
        }
      }
      if (has_val && best_val >= 0.0) restore_values(model, best);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Numeric) throw;
    log_warn(std::string("aborting two-stage training: ") + e.what());
    result.status = TrainStatus::NanAbort;
  }

  result.model = std::move(model);
  return result;
}

}  // namespace msuda

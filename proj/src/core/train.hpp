#pragma once

#include <functional>

#include "core/losses.hpp"
#include "core/weighting.hpp"

namespace msuda {

struct TrainConfig {
  std::size_t batch_size = 8;
  double lr = 1e-4;
  double lambda = 1.0;
  std::size_t n_critic = 5;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  bool include_private_coop_term = false;
  WeightMode weight_mode = WeightMode::SharedPath;

  void validate() const;
};

struct PseudoLabelConfig {
  double delta0 = 0.98;
  double eta = 0.02;
  std::size_t min_new = 10;   // stop once two successive rounds add this few
  std::size_t iter_min = 50;  // lower bound on inner steps per round
  std::size_t finetune_max_epochs = 50;
  bool bootstrap_first_round = true;

  void validate() const;
};

// One record per epoch; field names match the metrics stream.
struct EpochMetrics {
  std::size_t epoch = 0;
  double loss_d = 0.0;
  double loss_main = 0.0;
  double shared_dom_acc = 0.0;
  double private_dom_acc = 0.0;
  double val_acc = 0.0;
};

enum class ValKind { TargetTransductive, SourceHeldOut };

// Self-contained held-out set; features own their storage.
struct ValidationSet {
  ValKind kind = ValKind::TargetTransductive;
  std::vector<FeatureVector> features;
  std::vector<int> labels;
  std::vector<int> domains;  // per-instance source routing for SourceHeldOut
  std::size_t input_dim = 0;

  bool empty() const { return features.empty(); }
  SparseBatch batch() const;
};

struct StopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;
};

// Stops once validation accuracy has not improved for `patience` consecutive
// epochs; best is the argmax with ties resolved to the earliest epoch.
StopDecision early_stop(const std::vector<double>& val_history, std::size_t patience);

enum class TrainStatus { Converged, MaxEpochs, NanAbort };

struct TrainResult {
  SharedPrivateModel model;  // best-validation parameters
  std::vector<EpochMetrics> history;
  TrainStatus status = TrainStatus::MaxEpochs;
  std::size_t best_epoch = 0;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

// Alternating adversarial training: n_critic discriminator updates then one
// main update per outer step, one epoch being a pass over the largest source
// corpus. Returns the best-validation parameters.
TrainResult train_wsuda(SharedPrivateModel model, const DatasetBundle& data,
                        const ValidationSet& val, const TrainConfig& cfg,
                        const MetricsSink& sink = nullptr);

struct PseudoRound {
  std::size_t round = 0;
  double delta = 0.0;
  std::size_t selected = 0;
  std::size_t accumulated = 0;
};

struct TwoStageResult {
  SharedPrivateModel model;
  std::vector<PseudoRound> rounds;
  std::vector<EpochMetrics> history;  // pseudo-label rounds, then finetune epochs
  TrainStatus status = TrainStatus::MaxEpochs;
  std::size_t best_epoch = 0;
};

// Pseudo-label curriculum over the target pool: threshold decays by eta per
// round, each round trains only the freshly added target extractor on the
// newly selected set, and the accumulated set drives a final finetune with
// early stopping. Everything except the target extractor stays frozen.
TwoStageResult train_2studa(SharedPrivateModel model, const DatasetBundle& data,
                            const ValidationSet& val, const TrainConfig& cfg,
                            const PseudoLabelConfig& pl, const MetricsSink& sink = nullptr);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& reference);

// Ensemble (weighted source combination) accuracy for TargetTransductive
// sets; own-path classifier accuracy for SourceHeldOut sets.
double validation_accuracy(const SharedPrivateModel& model, const ValidationSet& val,
                           WeightMode mode);

// Accuracy of the target-path classifier C(E_s, E_t).
double target_path_accuracy(const SharedPrivateModel& model, const SparseBatch& x,
                            const std::vector<int>& labels);
std::vector<int> target_path_predictions(const SharedPrivateModel& model, const SparseBatch& x);

// Discriminator accuracy on shared features over the domain-labeled union,
// and on private features over source instances. max_instances = 0 means no
// cap; otherwise a deterministic stride subsample is used.
double domain_accuracy_shared(const SharedPrivateModel& model, const DatasetBundle& data,
                              std::size_t max_instances = 0);
double domain_accuracy_private(const SharedPrivateModel& model, const DatasetBundle& data,
                               std::size_t max_instances = 0);

}  // namespace msuda

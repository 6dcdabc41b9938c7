#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "core/synth.hpp"
#include "core/train.hpp"

namespace msuda {

// Declarative run configuration: defaults, deep-merge of user values over
// them, and validation. Unknown keys are rejected.
nlohmann::json default_config();
nlohmann::json resolve_config(const nlohmann::json& user);
nlohmann::json parse_config_text(const std::string& text);

SynthSpec synth_spec_from_config(const nlohmann::json& resolved);
TrainConfig train_config_from_config(const nlohmann::json& resolved);
PseudoLabelConfig pseudo_config_from_config(const nlohmann::json& resolved);

// Everything a training run needs, assembled from a resolved configuration:
// vectorized bundle (target reduced to its pool split), the validation set,
// and the held-back target test split.
struct LoadedDataset {
  nlohmann::json config;  // resolved
  std::vector<std::string> domain_names;  // sources in corpus order, target last
  Vocabulary vocab;
  DatasetBundle bundle;
  std::vector<int> pool_labels;  // sealed target-pool labels; empty when unknown
  ValidationSet val;
  std::vector<FeatureVector> test_features;
  std::vector<int> test_labels;  // empty when unknown
  std::vector<std::string> val_lines;  // raw lines for re-emission
  std::vector<std::string> test_lines;

  SparseBatch test_batch() const;
  SparseBatch pool_batch() const;
};

LoadedDataset load_dataset(const nlohmann::json& resolved);

// In-memory assembly used by the generator path and by tests.
LoadedDataset assemble_dataset(const std::vector<std::pair<std::string, RawCorpus>>& sources,
                               const std::string& target_name, const RawCorpus& target,
                               const std::vector<int>& target_labels,
                               const nlohmann::json& resolved);

// Generates corpora and writes one file per domain plus the sealed target
// labels and a configuration echo into out_dir.
void run_synth(const nlohmann::json& resolved, const std::string& out_dir);

struct TrainedModel {
  SharedPrivateModel model;
  ModelManifest manifest;
};

// Trains, writes metrics_<framework>.jsonl, checkpoint_<framework>.msuda,
// config.json and the held-back target splits into out_dir (when non-empty).
TrainedModel run_train_ws(const LoadedDataset& data, const std::string& out_dir,
                          TrainStatus* status_out = nullptr);
void run_train_2st(TrainedModel& trained, const LoadedDataset& data, const std::string& out_dir,
                   TrainStatus* status_out = nullptr);

// Accuracy report against a corpus + labels file pair, vectorized through the
// checkpoint's own vocabulary. options: {"predictor": "auto|ensemble|target",
// "weight_mode": "shared|private"}.
nlohmann::json run_eval(const TrainedModel& trained, const std::string& corpus_path,
                        const std::string& labels_path, const nlohmann::json& options);

// Per-instance weight dump in delimited text.
void run_weights_dump(const TrainedModel& trained, const std::string& corpus_path,
                      const nlohmann::json& options, const std::string& out_path);

}  // namespace msuda

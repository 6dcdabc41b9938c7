#include "core/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace msuda {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json default_config() {
  return json{
      {"seed", 0},
      {"framework", "ws"},
      {"out_dir", ""},
      {"checkpoint", ""},
      {"weight_mode", "shared"},
      {"model",
       {{"input_dim", 0},  // 0 derives the width from the vocabulary
        {"hidden_dim", 1000},
        {"feature_dim", 128},
        {"num_classes", 2}}},
      {"train",
       {{"batch_size", 8},
        {"lr", 1e-4},
        {"lambda", 1.0},
        {"n_critic", 5},
        {"max_epochs", 50},
        {"patience", 5},
        {"include_private_coop_term", false}}},
      {"pseudo",
       {{"delta", 0.98},
        {"eta", 0.02},
        {"min_new", 10},
        {"iter_min", 50},
        {"finetune_max_epochs", 50},
        {"bootstrap_first_round", true}}},
      {"data",
       {{"domains", json::array()},
        {"target", ""},
        {"target_labels", ""},
        {"vocab_size", 5000},
        {"split",
         {{"pool_fraction", 0.8},
          {"val_fraction", 0.1},
          {"test_fraction", 0.1},
          {"pool_count", -1},
          {"val_count", -1}}},
        {"validation", "target"},
        {"source_val_fraction", 0.1}}},
      {"synth",
       {{"vocab_size", 200},
        {"shared_block", 50},
        {"private_block", 30},
        {"num_sources", 3},
        {"signs", json::array()},
        {"docs_per_domain", 1000},
        {"mean_tokens", 30.0},
        {"noise_rate", 0.2},
        {"private_weight", 0.5}}},
  };
}

namespace {

void merge_into(json& base, const json& user, const std::string& path) {
  if (!user.is_object())
    throw_config("config: expected an object at '" + (path.empty() ? "." : path) + "'");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw_config("config: unknown key '" + key_path + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && !it.value().is_null()) {
      merge_into(slot, it.value(), key_path);
    } else if (!it.value().is_null()) {
      slot = it.value();
    }
  }
}

void validate_domains(const json& domains) {
  if (!domains.is_array()) throw_config("config: data.domains must be an array");
  for (const json& d : domains) {
    if (!d.is_object() || !d.contains("name") || !d["name"].is_string())
      throw_config("config: each data.domains entry needs a string 'name'");
    for (auto it = d.begin(); it != d.end(); ++it) {
      const std::string& k = it.key();
      if (k != "name" && k != "labeled" && k != "unlabeled")
        throw_config("config: unknown key 'data.domains[]." + k + "'");
      if ((k == "labeled" || k == "unlabeled") && !it.value().is_array())
        throw_config("config: data.domains[]." + k + " must be a list of paths");
    }
  }
}

std::string framework_of(const json& cfg) {
  const std::string fw = cfg["framework"].get<std::string>();
  if (fw != "ws" && fw != "2st") throw_config("config: framework must be 'ws' or '2st'");
  return fw;
}

}  // namespace

nlohmann::json resolve_config(const json& user) {
  json cfg = default_config();
  if (!user.is_null()) merge_into(cfg, user, "");
  validate_domains(cfg["data"]["domains"]);
  framework_of(cfg);
  weight_mode_from_string(cfg["weight_mode"].get<std::string>());
  train_config_from_config(cfg).validate();
  pseudo_config_from_config(cfg).validate();
  const std::string validation = cfg["data"]["validation"].get<std::string>();
  if (validation != "target" && validation != "source")
    throw_config("config: data.validation must be 'target' or 'source'");
  return cfg;
}

nlohmann::json parse_config_text(const std::string& text) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) throw_config("config: invalid JSON");
  return parsed;
}

SynthSpec synth_spec_from_config(const json& cfg) {
  const json& s = cfg["synth"];
  SynthSpec spec;
  spec.vocab_size = s["vocab_size"].get<std::size_t>();
  spec.shared_block = s["shared_block"].get<std::size_t>();
  spec.private_block = s["private_block"].get<std::size_t>();
  spec.num_sources = s["num_sources"].get<std::size_t>();
  spec.signs = s["signs"].get<std::vector<int>>();
  spec.docs_per_domain = s["docs_per_domain"].get<std::size_t>();
  spec.mean_tokens = s["mean_tokens"].get<double>();
  spec.noise_rate = s["noise_rate"].get<double>();
  spec.private_weight = s["private_weight"].get<double>();
  spec.seed = cfg["seed"].get<std::uint64_t>();
  return spec;
}

TrainConfig train_config_from_config(const json& cfg) {
  const json& t = cfg["train"];
  TrainConfig out;
  out.batch_size = t["batch_size"].get<std::size_t>();
  out.lr = t["lr"].get<double>();
  out.lambda = t["lambda"].get<double>();
  out.n_critic = t["n_critic"].get<std::size_t>();
  out.max_epochs = t["max_epochs"].get<std::size_t>();
  out.patience = t["patience"].get<std::size_t>();
  out.seed = cfg["seed"].get<std::uint64_t>();
  out.include_private_coop_term = t["include_private_coop_term"].get<bool>();
  out.weight_mode = weight_mode_from_string(cfg["weight_mode"].get<std::string>());
  return out;
}

PseudoLabelConfig pseudo_config_from_config(const json& cfg) {
  const json& p = cfg["pseudo"];
  PseudoLabelConfig out;
  out.delta0 = p["delta"].get<double>();
  out.eta = p["eta"].get<double>();
  out.min_new = p["min_new"].get<std::size_t>();
  out.iter_min = p["iter_min"].get<std::size_t>();
  out.finetune_max_epochs = p["finetune_max_epochs"].get<std::size_t>();
  out.bootstrap_first_round = p["bootstrap_first_round"].get<bool>();
  return out;
}

SparseBatch LoadedDataset::test_batch() const {
  SparseBatch b;
  b.dim = bundle.input_dim;
  for (const FeatureVector& f : test_features) b.rows.push_back(&f);
  return b;
}

SparseBatch LoadedDataset::pool_batch() const {
  SparseBatch b;
  b.dim = bundle.input_dim;
  for (const Example& e : bundle.target.items) b.rows.push_back(&e.features);
  return b;
}

namespace {

std::uint64_t split_seed(const json& cfg) {
  return cfg["seed"].get<std::uint64_t>() ^ 0x5eedu;
}

std::string raw_or_serialized(const RawExample& ex) {
  if (!ex.raw_line.empty()) return ex.raw_line;
  std::string line;
  bool first = true;
  for (const auto& [tok, cnt] : ex.token_counts) {
    if (!first) line += ' ';
    line += tok + ":" + std::to_string(cnt);
    first = false;
  }
  return line;
}

}  // namespace

LoadedDataset assemble_dataset(const std::vector<std::pair<std::string, RawCorpus>>& sources,
                               const std::string& target_name, const RawCorpus& target,
                               const std::vector<int>& target_labels, const json& cfg) {
  if (sources.empty()) throw_config("dataset: at least one source domain is required");
  if (!target_labels.empty() && target_labels.size() != target.size())
    throw_data("dataset: " + std::to_string(target_labels.size()) + " target labels for " +
               std::to_string(target.size()) + " target documents");

  LoadedDataset ds;
  ds.config = cfg;
  for (const auto& [name, corpus] : sources) {
    (void)corpus;
    ds.domain_names.push_back(name);
  }
  ds.domain_names.push_back(target_name);

  // Vocabulary over every corpus, target included: its unlabeled text is
  // available in this setting.
  std::vector<const RawCorpus*> all;
  for (const auto& [name, corpus] : sources) all.push_back(&corpus);
  all.push_back(&target);
  ds.vocab = build_vocabulary(all, cfg["data"]["vocab_size"].get<std::size_t>());
  ds.bundle.input_dim = ds.vocab.size();

  const std::string validation = cfg["data"]["validation"].get<std::string>();
  const double source_val_fraction = cfg["data"]["source_val_fraction"].get<double>();
  if (validation == "target" && target_labels.empty())
    throw_config(
        "dataset: target-side validation needs data.target_labels; "
        "switch data.validation to 'source' for a fully unsupervised run");

  // Sources; in source-validation mode a labeled slice of each corpus is held
  // out for model selection.
  ds.val.kind = validation == "target" ? ValKind::TargetTransductive : ValKind::SourceHeldOut;
  ds.val.input_dim = ds.vocab.size();
  for (std::size_t j = 0; j < sources.size(); ++j) {
    Corpus corpus;
    corpus.name = sources[j].first;
    const RawCorpus& raw = sources[j].second;
    std::vector<std::size_t> held;
    if (validation == "source") {
      std::vector<std::size_t> labeled_idx;
      for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i].label) labeled_idx.push_back(i);
      const std::size_t n_hold = static_cast<std::size_t>(
          std::floor(source_val_fraction * static_cast<double>(labeled_idx.size())));
      Rng rng(split_seed(cfg) + j + 1);
      rng.shuffle(labeled_idx);
      held.assign(labeled_idx.begin(), labeled_idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
      std::sort(held.begin(), held.end());
    }
    std::size_t h = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      FeatureVector fv = vectorize(raw[i], ds.vocab);
      if (h < held.size() && held[h] == i) {
        ++h;
        ds.val.features.push_back(std::move(fv));
        ds.val.labels.push_back(*raw[i].label);
        ds.val.domains.push_back(static_cast<int>(j));
        continue;
      }
      Example ex;
      ex.features = std::move(fv);
      ex.class_label = raw[i].label;
      ex.domain = static_cast<int>(j);
      corpus.items.push_back(std::move(ex));
    }
    if (corpus.items.empty()) throw_config("dataset: source corpus '" + corpus.name + "' is empty");
    ds.bundle.sources.push_back(std::move(corpus));
  }

  // Target split into pool / val / test.
  const json& split_cfg = cfg["data"]["split"];
  SplitIndices parts;
  const long long pool_count = split_cfg["pool_count"].get<long long>();
  if (pool_count >= 0) {
    const long long val_count = split_cfg["val_count"].get<long long>();
    parts = split_counts(target.size(), static_cast<std::size_t>(pool_count),
                         val_count >= 0 ? static_cast<std::size_t>(val_count) : 0,
                         split_seed(cfg));
  } else {
    parts = split(target.size(),
                  {split_cfg["pool_fraction"].get<double>(),
                   split_cfg["val_fraction"].get<double>(),
                   split_cfg["test_fraction"].get<double>()},
                  split_seed(cfg));
  }

  ds.bundle.target.name = target_name;
  const int target_domain = static_cast<int>(sources.size());
  for (std::size_t i : parts.train) {
    Example ex;
    ex.features = vectorize(target[i], ds.vocab);
    ex.domain = target_domain;
    ds.bundle.target.items.push_back(std::move(ex));
    if (!target_labels.empty()) ds.pool_labels.push_back(target_labels[i]);
  }
  for (std::size_t i : parts.val) {
    if (validation == "target") {
      ds.val.features.push_back(vectorize(target[i], ds.vocab));
      ds.val.labels.push_back(target_labels[i]);
    }
    ds.val_lines.push_back(raw_or_serialized(target[i]));
  }
  for (std::size_t i : parts.test) {
    ds.test_features.push_back(vectorize(target[i], ds.vocab));
    if (!target_labels.empty()) ds.test_labels.push_back(target_labels[i]);
    ds.test_lines.push_back(raw_or_serialized(target[i]));
  }
  if (ds.bundle.target.items.empty()) throw_config("dataset: target pool is empty");
  return ds;
}

LoadedDataset load_dataset(const json& cfg) {
  const json& domains = cfg["data"]["domains"];
  if (domains.empty()) throw_config("config: data.domains is empty");
  const std::string target_name = cfg["data"]["target"].get<std::string>();
  if (target_name.empty()) throw_config("config: data.target is not set");

  std::vector<std::pair<std::string, RawCorpus>> sources;
  RawCorpus target;
  bool target_seen = false;
  for (const json& d : domains) {
    const std::string name = d["name"].get<std::string>();
    RawCorpus corpus;
    if (d.contains("labeled"))
      for (const json& p : d["labeled"]) {
        RawCorpus part = parse_blitzer(p.get<std::string>());
        for (RawExample& ex : part) {
          if (!ex.label)
            throw_data(p.get<std::string>() + ": unlabeled document in a labeled file");
          corpus.push_back(std::move(ex));
        }
      }
    if (d.contains("unlabeled"))
      for (const json& p : d["unlabeled"]) {
        RawCorpus part = parse_blitzer(p.get<std::string>());
        for (RawExample& ex : part) {
          ex.label.reset();  // domain data only
          corpus.push_back(std::move(ex));
        }
      }
    if (name == target_name) {
      if (target_seen) throw_config("config: duplicate target domain '" + name + "'");
      target_seen = true;
      for (RawExample& ex : corpus) ex.label.reset();
      target = std::move(corpus);
    } else {
      sources.emplace_back(name, std::move(corpus));
    }
  }
  if (!target_seen)
    throw_config("config: target domain '" + target_name + "' is not listed in data.domains");

  std::vector<int> target_labels;
  const std::string labels_path = cfg["data"]["target_labels"].get<std::string>();
  if (!labels_path.empty()) target_labels = read_labels(labels_path);
  return assemble_dataset(sources, target_name, target, target_labels, cfg);
}

void run_synth(const json& cfg, const std::string& out_dir) {
  const SynthSpec spec = synth_spec_from_config(cfg);
  spec.validate();
  const SynthCorpora corpora = synth_generate(spec);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw_io("cannot create output directory: " + out_dir);
  for (std::size_t j = 0; j < corpora.sources.size(); ++j)
    write_corpus(corpora.sources[j], out_dir + "/" + corpora.domain_names[j] + ".txt", true);
  write_corpus(corpora.target, out_dir + "/target.txt", false);
  write_labels(corpora.target_labels, out_dir + "/target.labels");
  std::ofstream echo(out_dir + "/synth_config.json");
  echo << cfg.dump(2) << '\n';
  if (!echo) throw_io("cannot write configuration echo in " + out_dir);
}

namespace {

void write_metrics_line(std::ofstream& out, const EpochMetrics& m) {
  json rec{{"epoch", m.epoch},          {"loss_d", m.loss_d},
           {"loss_main", m.loss_main},  {"shared_dom_acc", m.shared_dom_acc},
           {"private_dom_acc", m.private_dom_acc}, {"val_acc", m.val_acc}};
  out << rec.dump() << '\n';
}

void write_target_splits(const LoadedDataset& data, const std::string& out_dir) {
  auto dump_lines = [](const std::vector<std::string>& lines, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    for (const std::string& l : lines) out << l << '\n';
    if (!out) throw_io("cannot write " + path);
  };
  if (!data.val_lines.empty()) dump_lines(data.val_lines, out_dir + "/val.txt");
  if (!data.test_lines.empty()) dump_lines(data.test_lines, out_dir + "/test.txt");
  if (!data.test_labels.empty()) write_labels(data.test_labels, out_dir + "/test.labels");
}

void write_config_echo(const json& cfg, const std::string& out_dir) {
  std::ofstream echo(out_dir + "/config.json");
  echo << cfg.dump(2) << '\n';
  if (!echo) throw_io("cannot write configuration echo in " + out_dir);
}

ModelManifest make_manifest(const LoadedDataset& data, const std::string& framework) {
  ModelManifest manifest;
  manifest.domain_names = data.domain_names;
  manifest.vocabulary = data.vocab.id_to_token;
  manifest.vocab_hash = data.vocab.hash();
  manifest.framework = framework;
  manifest.config_json = data.config.dump();
  return manifest;
}

ModelConfig model_config_from(const LoadedDataset& data) {
  const json& m = data.config["model"];
  ModelConfig cfg;
  cfg.input_dim = m["input_dim"].get<std::size_t>();
  if (cfg.input_dim == 0) cfg.input_dim = data.vocab.size();
  if (cfg.input_dim != data.vocab.size())
    throw_config("config: model.input_dim does not match the vocabulary size");
  cfg.hidden_dim = m["hidden_dim"].get<std::size_t>();
  cfg.feature_dim = m["feature_dim"].get<std::size_t>();
  cfg.num_sources = data.bundle.num_sources();
  cfg.num_classes = m["num_classes"].get<std::size_t>();
  return cfg;
}

}  // namespace

TrainedModel run_train_ws(const LoadedDataset& data, const std::string& out_dir,
                          TrainStatus* status_out) {
  const TrainConfig cfg = train_config_from_config(data.config);
  SharedPrivateModel model =
      SharedPrivateModel::create(model_config_from(data), cfg.seed);

  std::ofstream metrics;
  MetricsSink sink;
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    metrics.open(out_dir + "/metrics_ws.jsonl", std::ios::binary);
    if (!metrics) throw_io("cannot write metrics in " + out_dir);
    sink = [&metrics](const EpochMetrics& m) { write_metrics_line(metrics, m); };
  }

  TrainResult result = train_wsuda(std::move(model), data.bundle, data.val, cfg, sink);
  if (status_out) *status_out = result.status;

  TrainedModel trained{std::move(result.model), make_manifest(data, "ws")};
  if (!out_dir.empty()) {
    save_checkpoint(trained.model, trained.manifest, out_dir + "/checkpoint_ws.msuda");
    write_config_echo(data.config, out_dir);
    write_target_splits(data, out_dir);
  }
  if (result.status == TrainStatus::NanAbort)
    throw_numeric("training aborted on non-finite loss; last good checkpoint kept");
  return trained;
}

void run_train_2st(TrainedModel& trained, const LoadedDataset& data, const std::string& out_dir,
                   TrainStatus* status_out) {
  if (trained.manifest.vocab_hash != data.vocab.hash())
    throw_config(
        "vocabulary mismatch: the checkpoint was trained on a different vectorization space");
  const TrainConfig cfg = train_config_from_config(data.config);
  const PseudoLabelConfig pl = pseudo_config_from_config(data.config);

  std::ofstream metrics;
  MetricsSink sink;
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    metrics.open(out_dir + "/metrics_2st.jsonl", std::ios::binary);
    if (!metrics) throw_io("cannot write metrics in " + out_dir);
    sink = [&metrics](const EpochMetrics& m) { write_metrics_line(metrics, m); };
  }

  TwoStageResult result = train_2studa(std::move(trained.model), data.bundle, data.val, cfg, pl, sink);
  if (status_out) *status_out = result.status;
  trained.model = std::move(result.model);
  trained.manifest.framework = "2st";
  trained.manifest.config_json = data.config.dump();

  if (!out_dir.empty()) {
    save_checkpoint(trained.model, trained.manifest, out_dir + "/checkpoint_2st.msuda");
    write_config_echo(data.config, out_dir);
    write_target_splits(data, out_dir);
  }
  if (result.status == TrainStatus::NanAbort)
    throw_numeric("two-stage training aborted on non-finite loss; last good checkpoint kept");
}

namespace {

struct EvalCorpus {
  std::vector<FeatureVector> features;
  SparseBatch batch;
};

EvalCorpus vectorize_for_model(const TrainedModel& trained, const std::string& corpus_path) {
  const Vocabulary vocab = vocabulary_from_tokens(trained.manifest.vocabulary);
  const RawCorpus raw = parse_blitzer(corpus_path);
  EvalCorpus out;
  out.features.reserve(raw.size());
  for (const RawExample& ex : raw) out.features.push_back(vectorize(ex, vocab));
  out.batch.dim = vocab.size();
  for (const FeatureVector& f : out.features) out.batch.rows.push_back(&f);
  return out;
}

}  // namespace

nlohmann::json run_eval(const TrainedModel& trained, const std::string& corpus_path,
                        const std::string& labels_path, const json& options) {
  std::string predictor = options.value("predictor", "auto");
  const WeightMode mode = weight_mode_from_string(options.value(
      "weight_mode", json::parse(trained.manifest.config_json).value("weight_mode", "shared")));
  if (predictor == "auto")
    predictor = trained.model.target_extractor ? "target" : "ensemble";
  if (predictor != "ensemble" && predictor != "target")
    throw_config("eval: predictor must be 'auto', 'ensemble' or 'target'");
  if (predictor == "target" && !trained.model.target_extractor)
    throw_config("eval: this checkpoint has no target extractor; use the ensemble predictor");

  const EvalCorpus corpus = vectorize_for_model(trained, corpus_path);
  const std::vector<int> labels = read_labels(labels_path);
  if (labels.size() != corpus.batch.size())
    throw_data("eval: " + std::to_string(labels.size()) + " labels for " +
               std::to_string(corpus.batch.size()) + " documents");

  const auto ensemble = predict_target(trained.model, corpus.batch, mode);
  const std::size_t k = trained.model.config.num_sources;
  std::vector<int> weighted_pred(ensemble.size());
  std::vector<std::vector<int>> per_source_pred(k, std::vector<int>(ensemble.size()));
  std::vector<int> uniform_pred(ensemble.size());
  const std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    weighted_pred[i] = ensemble[i].label;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& p = ensemble[i].per_source[j];
      per_source_pred[j][i] =
          static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    const auto u = combine_predictions(ensemble[i].per_source, uniform);
    uniform_pred[i] = static_cast<int>(std::max_element(u.begin(), u.end()) - u.begin());
  }

  json report;
  report["n"] = labels.size();
  report["predictor"] = predictor;
  report["weight_mode"] = to_string(mode);
  report["ensemble_accuracy"] = accuracy(weighted_pred, labels);
  report["uniform_accuracy"] = accuracy(uniform_pred, labels);
  json per_source = json::array();
  for (std::size_t j = 0; j < k; ++j)
    per_source.push_back({{"domain", trained.manifest.domain_names[j]},
                          {"accuracy", accuracy(per_source_pred[j], labels)}});
  report["per_source"] = per_source;
  if (predictor == "target") {
    report["accuracy"] = target_path_accuracy(trained.model, corpus.batch, labels);
  } else {
    report["accuracy"] = report["ensemble_accuracy"];
  }
  return report;
}

void run_weights_dump(const TrainedModel& trained, const std::string& corpus_path,
                      const json& options, const std::string& out_path) {
  const WeightMode mode = weight_mode_from_string(options.value(
      "weight_mode", json::parse(trained.manifest.config_json).value("weight_mode", "shared")));
  const EvalCorpus corpus = vectorize_for_model(trained, corpus_path);
  const auto preds = predict_target(trained.model, corpus.batch, mode);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw_io("cannot write weight dump: " + out_path);
  out << "instance_id";
  for (std::size_t j = 1; j <= trained.model.config.num_sources; ++j) out << "\tw_" << j;
  out << "\tpredicted_label\tconfidence\n";
  out.precision(9);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << i;
    for (double w : preds[i].weights) out << '\t' << w;
    out << '\t' << (preds[i].label == kPositive ? "positive" : "negative") << '\t'
        << preds[i].confidence << '\n';
  }
  if (!out) throw_io("write failed: " + out_path);
}

}  // namespace msuda

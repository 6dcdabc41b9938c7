// Command-line front end. Talks to the core exclusively through the C API in
// msuda/msuda.h; configuration handling (file + environment + flags) happens
// here, with flags taking precedence over environment over file.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "msuda/msuda.h"

using nlohmann::json;

namespace {

constexpr const char* kEnvPrefix = "MSUDA_";

int fail(int32_t code) {
  std::fprintf(stderr, "error: %s\n", msuda_last_error());
  return static_cast<int>(code);
}

std::string owned(char* s) {
  std::string out = s ? s : "";
  msuda_string_free(s);
  return out;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error: cannot open config file: %s\n", path.c_str());
    std::exit(MSUDA_ERR_IO);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  json parsed = json::parse(buf.str(), nullptr, false);
  if (parsed.is_discarded()) {
    std::fprintf(stderr, "error: config file is not valid JSON: %s\n", path.c_str());
    std::exit(MSUDA_ERR_CONFIG);
  }
  return parsed;
}

void collect_paths(const json& node, const std::string& prefix, std::vector<std::string>* out) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it)
      collect_paths(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else {
    out->push_back(prefix);
  }
}

std::string env_name(const std::string& path) {
  std::string name = kEnvPrefix;
  for (char c : path) name += c == '.' ? '_' : static_cast<char>(std::toupper(c));
  return name;
}

void set_path(json& root, const std::string& path, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

// Every leaf of the default configuration can be overridden through the
// environment: data.vocab_size becomes MSUDA_DATA_VOCAB_SIZE.
void apply_env_overrides(json& user) {
  char* defaults_raw = nullptr;
  if (int32_t rc = msuda_config_resolve("{}", &defaults_raw)) std::exit(fail(rc));
  const json defaults = json::parse(owned(defaults_raw));
  std::vector<std::string> paths;
  collect_paths(defaults, "", &paths);
  for (const std::string& path : paths) {
    const char* value = std::getenv(env_name(path).c_str());
    if (!value) continue;
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = std::string(value);
    set_path(user, path, parsed);
  }
}

struct CommonFlags {
  std::string config_path;
  std::string target;
  std::string weight_mode;
  std::string out_dir;
  long long seed = -1;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "JSON run configuration");
  cmd->add_option("--seed", flags->seed, "random seed")->each([flags](const std::string&) {
    flags->seed_set = true;
  });
  cmd->add_option("--weight-mode", flags->weight_mode, "instance weighting: shared|private")
      ->check(CLI::IsMember({"shared", "private"}));
  cmd->add_option("--out", flags->out_dir, "output directory");
}

json build_config(const CommonFlags& flags) {
  json user = flags.config_path.empty() ? json::object() : load_config_file(flags.config_path);
  apply_env_overrides(user);
  if (flags.seed_set) user["seed"] = flags.seed;
  if (!flags.target.empty()) user["data"]["target"] = flags.target;
  if (!flags.weight_mode.empty()) user["weight_mode"] = flags.weight_mode;
  if (!flags.out_dir.empty()) user["out_dir"] = flags.out_dir;
  return user;
}

std::unique_ptr<msuda_model, void (*)(msuda_model*)> open_model(const std::string& path) {
  msuda_model* model = nullptr;
  if (int32_t rc = msuda_model_open(path.c_str(), &model)) std::exit(fail(rc));
  return {model, msuda_model_free};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-source unsupervised domain adaptation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", msuda_version());

  // synth
  CommonFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "generate the synthetic multi-domain benchmark");
  add_common(synth, &synth_flags);
  long long docs = -1, vocab = -1, num_sources = -1, shared_block = -1, private_block = -1;
  double mean_tokens = -1.0, noise_rate = -1.0, private_weight = -1.0;
  std::string signs;
  synth->add_option("--docs-per-domain", docs, "documents per domain");
  synth->add_option("--vocab-size", vocab, "vocabulary size");
  synth->add_option("--num-sources", num_sources, "number of source domains");
  synth->add_option("--shared-block", shared_block, "globally polar token block size");
  synth->add_option("--private-block", private_block, "per-domain token block size");
  synth->add_option("--mean-tokens", mean_tokens, "mean tokens per document");
  synth->add_option("--noise-rate", noise_rate, "fraction of uniformly random tokens");
  synth->add_option("--private-weight", private_weight, "private share of signal tokens");
  synth->add_option("--signs", signs, "per-domain polarity signs, e.g. +1,-1,-1,+1 (target last)");

  // train
  CommonFlags train_flags;
  std::string framework = "ws";
  std::string train_checkpoint;
  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, &train_flags);
  train->add_option("--target", train_flags.target, "target domain name");
  train->add_option("--framework", framework, "ws|2st")
      ->check(CLI::IsMember({"ws", "2st"}));
  train->add_option("--checkpoint", train_checkpoint,
                    "existing checkpoint to start the 2st stage from");

  // eval
  CommonFlags eval_flags;
  std::string eval_checkpoint, eval_corpus, eval_labels, predictor = "auto";
  auto* eval = app.add_subcommand("eval", "accuracy report for a corpus/labels pair");
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval->add_option("--corpus", eval_corpus, "corpus file")->required();
  eval->add_option("--labels", eval_labels, "labels file, one per document")->required();
  eval->add_option("--predictor", predictor, "auto|ensemble|target")
      ->check(CLI::IsMember({"auto", "ensemble", "target"}));
  eval->add_option("--weight-mode", eval_flags.weight_mode, "shared|private")
      ->check(CLI::IsMember({"shared", "private"}));
  eval->add_option("--out", eval_flags.out_dir, "directory for the written report");

  // weights
  CommonFlags weights_flags;
  std::string weights_checkpoint, weights_corpus, weights_out;
  auto* weights = app.add_subcommand("weights", "dump per-instance source weights");
  weights->add_option("--checkpoint", weights_checkpoint, "model checkpoint")->required();
  weights->add_option("--corpus", weights_corpus, "corpus file")->required();
  weights->add_option("--weight-mode", weights_flags.weight_mode, "shared|private")
      ->check(CLI::IsMember({"shared", "private"}));
  weights->add_option("--out", weights_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    json user = build_config(synth_flags);
    if (docs >= 0) user["synth"]["docs_per_domain"] = docs;
    if (vocab >= 0) user["synth"]["vocab_size"] = vocab;
    if (num_sources >= 0) user["synth"]["num_sources"] = num_sources;
    if (shared_block >= 0) user["synth"]["shared_block"] = shared_block;
    if (private_block >= 0) user["synth"]["private_block"] = private_block;
    if (mean_tokens >= 0.0) user["synth"]["mean_tokens"] = mean_tokens;
    if (noise_rate >= 0.0) user["synth"]["noise_rate"] = noise_rate;
    if (private_weight >= 0.0) user["synth"]["private_weight"] = private_weight;
    if (!signs.empty()) {
      json arr = json::array();
      std::stringstream ss(signs);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(std::atoi(item.c_str()));
      user["synth"]["signs"] = arr;
    }
    const std::string out_dir = user.value("out_dir", "");
    if (out_dir.empty()) {
      std::fprintf(stderr, "error: synth needs --out\n");
      return MSUDA_ERR_CONFIG;
    }
    if (int32_t rc = msuda_synth_write(user.dump().c_str(), out_dir.c_str())) return fail(rc);
    std::printf("wrote synthetic corpora to %s\n", out_dir.c_str());
    return 0;
  }

  if (train->parsed()) {
    json user = build_config(train_flags);
    user["framework"] = framework;
    if (!train_checkpoint.empty()) user["checkpoint"] = train_checkpoint;
    const std::string out_dir = user.value("out_dir", "");
    const std::string checkpoint = user.value("checkpoint", "");
    if (out_dir.empty()) {
      std::fprintf(stderr, "error: train needs --out (or out_dir in the config)\n");
      return MSUDA_ERR_CONFIG;
    }

    msuda_dataset* ds = nullptr;
    if (int32_t rc = msuda_dataset_open(user.dump().c_str(), &ds)) return fail(rc);
    std::unique_ptr<msuda_dataset, void (*)(msuda_dataset*)> ds_guard(ds, msuda_dataset_free);
    {
      char* info = nullptr;
      if (msuda_dataset_info(ds, &info) == MSUDA_OK)
        std::printf("dataset: %s\n", owned(info).c_str());
    }

    msuda_model* model = nullptr;
    if (framework == "2st" && !checkpoint.empty()) {
      if (int32_t rc = msuda_model_open(checkpoint.c_str(), &model)) return fail(rc);
    } else {
      std::printf("training ws model...\n");
      if (int32_t rc = msuda_train_ws(ds, out_dir.c_str(), &model)) return fail(rc);
      std::printf("wrote %s/checkpoint_ws.msuda\n", out_dir.c_str());
    }
    std::unique_ptr<msuda_model, void (*)(msuda_model*)> model_guard(model, msuda_model_free);

    if (framework == "2st") {
      std::printf("training target extractor...\n");
      if (int32_t rc = msuda_train_2st(model, ds, out_dir.c_str())) return fail(rc);
      std::printf("wrote %s/checkpoint_2st.msuda\n", out_dir.c_str());
    }
    return 0;
  }

  if (eval->parsed()) {
    auto model = open_model(eval_checkpoint);
    json opts;
    opts["predictor"] = predictor;
    if (!eval_flags.weight_mode.empty()) opts["weight_mode"] = eval_flags.weight_mode;
    char* report_raw = nullptr;
    if (int32_t rc = msuda_eval(model.get(), eval_corpus.c_str(), eval_labels.c_str(),
                                opts.dump().c_str(), &report_raw))
      return fail(rc);
    const std::string report = owned(report_raw);
    std::printf("%s\n", report.c_str());
    if (!eval_flags.out_dir.empty()) {
      std::ofstream out(eval_flags.out_dir + "/eval_report.json");
      out << report << '\n';
      if (!out) {
        std::fprintf(stderr, "error: cannot write report in %s\n", eval_flags.out_dir.c_str());
        return MSUDA_ERR_IO;
      }
    }
    return 0;
  }

  if (weights->parsed()) {
    auto model = open_model(weights_checkpoint);
    json opts = json::object();
    if (!weights_flags.weight_mode.empty()) opts["weight_mode"] = weights_flags.weight_mode;
    if (int32_t rc = msuda_weights_dump(model.get(), weights_corpus.c_str(), opts.dump().c_str(),
                                        weights_out.c_str()))
      return fail(rc);
    std::printf("wrote %s\n", weights_out.c_str());
    return 0;
  }

  return 0;
}

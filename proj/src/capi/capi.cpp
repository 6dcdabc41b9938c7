#include "msuda/msuda.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/driver.hpp"
#include "core/error.hpp"

using nlohmann::json;

struct msuda_dataset {
  msuda::LoadedDataset data;
};

struct msuda_model {
  msuda::TrainedModel trained;
};

namespace {

thread_local std::string tl_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int32_t code_of(msuda::ErrorKind kind) {
  switch (kind) {
    case msuda::ErrorKind::Config: return MSUDA_ERR_CONFIG;
    case msuda::ErrorKind::Data: return MSUDA_ERR_DATA;
    case msuda::ErrorKind::Dimension: return MSUDA_ERR_DATA;
    case msuda::ErrorKind::Numeric: return MSUDA_ERR_NUMERIC;
    case msuda::ErrorKind::Io: return MSUDA_ERR_IO;
  }
  return MSUDA_ERR_INTERNAL;
}

template <typename Fn>
int32_t guarded(Fn&& fn) {
  try {
    fn();
    tl_error.clear();
    return MSUDA_OK;
  } catch (const msuda::Error& e) {
    tl_error = e.what();
    return code_of(e.kind());
  } catch (const std::exception& e) {
    tl_error = e.what();
    return MSUDA_ERR_INTERNAL;
  } catch (...) {
    tl_error = "unknown failure";
    return MSUDA_ERR_INTERNAL;
  }
}

int32_t require(const void* p, const char* name) {
  if (p) return MSUDA_OK;
  tl_error = std::string("null pointer: ") + name;
  return MSUDA_ERR_NULL;
}

json parse_options(const char* options_json) {
  if (!options_json || !*options_json) return json::object();
  json opts = json::parse(options_json, nullptr, false);
  if (opts.is_discarded()) msuda::throw_config("options: invalid JSON");
  return opts;
}

}  // namespace

extern "C" {

const char* msuda_version(void) { return "0.1.0"; }

const char* msuda_last_error(void) { return tl_error.c_str(); }

void msuda_string_free(char* s) { std::free(s); }

int32_t msuda_config_resolve(const char* config_json, char** resolved_json) {
  if (int32_t rc = require(config_json, "config_json")) return rc;
  if (int32_t rc = require(resolved_json, "resolved_json")) return rc;
  return guarded([&] {
    const json resolved = msuda::resolve_config(msuda::parse_config_text(config_json));
    *resolved_json = dup_string(resolved.dump(2));
  });
}

int32_t msuda_synth_write(const char* config_json, const char* out_dir) {
  if (int32_t rc = require(config_json, "config_json")) return rc;
  if (int32_t rc = require(out_dir, "out_dir")) return rc;
  return guarded([&] {
    const json resolved = msuda::resolve_config(msuda::parse_config_text(config_json));
    msuda::run_synth(resolved, out_dir);
  });
}

int32_t msuda_dataset_open(const char* config_json, msuda_dataset** out) {
  if (int32_t rc = require(config_json, "config_json")) return rc;
  if (int32_t rc = require(out, "out")) return rc;
  *out = nullptr;
  return guarded([&] {
    const json resolved = msuda::resolve_config(msuda::parse_config_text(config_json));
    auto ds = new msuda_dataset{msuda::load_dataset(resolved)};
    *out = ds;
  });
}

int32_t msuda_dataset_info(const msuda_dataset* ds, char** info_json) {
  if (int32_t rc = require(ds, "ds")) return rc;
  if (int32_t rc = require(info_json, "info_json")) return rc;
  return guarded([&] {
    json info;
    info["domains"] = ds->data.domain_names;
    info["num_sources"] = ds->data.bundle.num_sources();
    info["vocab_size"] = ds->data.vocab.size();
    info["vocab_hash"] = std::to_string(ds->data.vocab.hash());
    info["n_source_examples"] = ds->data.bundle.n_source_examples();
    info["n_target_pool"] = ds->data.bundle.n_target_examples();
    info["n_val"] = ds->data.val.features.size();
    info["n_test"] = ds->data.test_features.size();
    *info_json = dup_string(info.dump(2));
  });
}

void msuda_dataset_free(msuda_dataset* ds) { delete ds; }

int32_t msuda_train_ws(msuda_dataset* ds, const char* out_dir, msuda_model** out_model) {
  if (int32_t rc = require(ds, "ds")) return rc;
  if (int32_t rc = require(out_model, "out_model")) return rc;
  *out_model = nullptr;
  return guarded([&] {
    auto trained = msuda::run_train_ws(ds->data, out_dir ? out_dir : "");
    *out_model = new msuda_model{std::move(trained)};
  });
}

int32_t msuda_train_2st(msuda_model* model, msuda_dataset* ds, const char* out_dir) {
  if (int32_t rc = require(model, "model")) return rc;
  if (int32_t rc = require(ds, "ds")) return rc;
  return guarded([&] {
    msuda::run_train_2st(model->trained, ds->data, out_dir ? out_dir : "");
  });
}

int32_t msuda_model_open(const char* checkpoint_path, msuda_model** out) {
  if (int32_t rc = require(checkpoint_path, "checkpoint_path")) return rc;
  if (int32_t rc = require(out, "out")) return rc;
  *out = nullptr;
  return guarded([&] {
    auto [m, manifest] = msuda::load_checkpoint(checkpoint_path);
    *out = new msuda_model{msuda::TrainedModel{std::move(m), std::move(manifest)}};
  });
}

int32_t msuda_model_save(const msuda_model* model, const char* checkpoint_path) {
  if (int32_t rc = require(model, "model")) return rc;
  if (int32_t rc = require(checkpoint_path, "checkpoint_path")) return rc;
  return guarded([&] {
    msuda::save_checkpoint(model->trained.model, model->trained.manifest, checkpoint_path);
  });
}

int32_t msuda_model_info(const msuda_model* model, char** info_json) {
  if (int32_t rc = require(model, "model")) return rc;
  if (int32_t rc = require(info_json, "info_json")) return rc;
  return guarded([&] {
    const auto& t = model->trained;
    json info;
    info["framework"] = t.manifest.framework;
    info["domains"] = t.manifest.domain_names;
    info["vocab_size"] = t.manifest.vocabulary.size();
    info["vocab_hash"] = std::to_string(t.manifest.vocab_hash);
    info["num_sources"] = t.model.config.num_sources;
    info["input_dim"] = t.model.config.input_dim;
    info["hidden_dim"] = t.model.config.hidden_dim;
    info["feature_dim"] = t.model.config.feature_dim;
    info["has_target_extractor"] = t.model.target_extractor.has_value();
    *info_json = dup_string(info.dump(2));
  });
}

void msuda_model_free(msuda_model* model) { delete model; }

int32_t msuda_eval(const msuda_model* model, const char* corpus_path, const char* labels_path,
                   const char* options_json, char** report_json) {
  if (int32_t rc = require(model, "model")) return rc;
  if (int32_t rc = require(corpus_path, "corpus_path")) return rc;
  if (int32_t rc = require(labels_path, "labels_path")) return rc;
  if (int32_t rc = require(report_json, "report_json")) return rc;
  return guarded([&] {
    const json report =
        msuda::run_eval(model->trained, corpus_path, labels_path, parse_options(options_json));
    *report_json = dup_string(report.dump(2));
  });
}

int32_t msuda_weights_dump(const msuda_model* model, const char* corpus_path,
                           const char* options_json, const char* out_path) {
  if (int32_t rc = require(model, "model")) return rc;
  if (int32_t rc = require(corpus_path, "corpus_path")) return rc;
  if (int32_t rc = require(out_path, "out_path")) return rc;
  return guarded([&] {
    msuda::run_weights_dump(model->trained, corpus_path, parse_options(options_json), out_path);
  });
}

}  // extern "C"

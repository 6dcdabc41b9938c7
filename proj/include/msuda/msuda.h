/*
 * msuda — multi-source unsupervised domain adaptation for polarity
 * classification. C interface over the C++ core: opaque handles, integer
 * status codes, JSON strings for structured data.
 *
 * Every function returning int32_t yields MSUDA_OK on success; on failure the
 * thread-local message from msuda_last_error() describes what went wrong.
 * Strings returned through char** are heap-allocated; release them with
 * msuda_string_free().
 */

#ifndef MSUDA_H
#define MSUDA_H

#include <stdint.h>

#if defined(_WIN32)
#define MSUDA_API __declspec(dllexport)
#else
#define MSUDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  MSUDA_OK = 0,
  MSUDA_ERR_CONFIG = 2,   /* invalid configuration or precondition */
  MSUDA_ERR_DATA = 3,     /* malformed or inconsistent input data */
  MSUDA_ERR_NUMERIC = 4,  /* training aborted on non-finite values */
  MSUDA_ERR_IO = 5,       /* filesystem failure */
  MSUDA_ERR_NULL = 6,     /* required pointer argument was NULL */
  MSUDA_ERR_INTERNAL = 7
};

/* A loaded, vectorized dataset: sources, target pool and held-out splits. */
typedef struct msuda_dataset msuda_dataset;
/* A trained (or loaded) model together with its manifest. */
typedef struct msuda_model msuda_model;

MSUDA_API const char* msuda_version(void);
MSUDA_API const char* msuda_last_error(void);
MSUDA_API void msuda_string_free(char* s);

/* Merges the given JSON over the built-in defaults, validates it and returns
 * the fully materialized configuration. Pass "{}" for the defaults alone. */
MSUDA_API int32_t msuda_config_resolve(const char* config_json, char** resolved_json);

/* Generates the synthetic multi-domain benchmark configured under "synth":
 * one labeled corpus file per source, the unlabeled target corpus and its
 * sealed label sidecar, plus a configuration echo. */
MSUDA_API int32_t msuda_synth_write(const char* config_json, const char* out_dir);

/* Loads and vectorizes the corpora configured under "data". */
MSUDA_API int32_t msuda_dataset_open(const char* config_json, msuda_dataset** out);
MSUDA_API int32_t msuda_dataset_info(const msuda_dataset* ds, char** info_json);
MSUDA_API void msuda_dataset_free(msuda_dataset* ds);

/* Adversarial training of the shared-private model. Writes
 * metrics_ws.jsonl, checkpoint_ws.msuda, the configuration echo and the
 * held-back target splits into out_dir (pass NULL or "" to skip writing).
 * On MSUDA_ERR_NUMERIC the last good checkpoint has still been written. */
MSUDA_API int32_t msuda_train_ws(msuda_dataset* ds, const char* out_dir, msuda_model** out_model);

/* Pseudo-label curriculum for the target extractor on top of a trained
 * model; the model handle is updated in place. Refuses datasets whose
 * vocabulary differs from the checkpoint's. */
MSUDA_API int32_t msuda_train_2st(msuda_model* model, msuda_dataset* ds, const char* out_dir);

MSUDA_API int32_t msuda_model_open(const char* checkpoint_path, msuda_model** out);
MSUDA_API int32_t msuda_model_save(const msuda_model* model, const char* checkpoint_path);
MSUDA_API int32_t msuda_model_info(const msuda_model* model, char** info_json);
MSUDA_API void msuda_model_free(msuda_model* model);

/* Accuracy report for a corpus/labels file pair, vectorized through the
 * checkpoint's own vocabulary. options_json: {"predictor": "auto|ensemble|
 * target", "weight_mode": "shared|private"}; NULL means all defaults. */
MSUDA_API int32_t msuda_eval(const msuda_model* model, const char* corpus_path,
                             const char* labels_path, const char* options_json,
                             char** report_json);

/* Per-instance source weights as delimited text:
 * instance_id, w_1..w_K, predicted_label, confidence. */
MSUDA_API int32_t msuda_weights_dump(const msuda_model* model, const char* corpus_path,
                                     const char* options_json, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* MSUDA_H */

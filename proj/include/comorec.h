/*
 * comorec: subject-disease co-occurrence prediction.
 *
 * C interface to the training/evaluation pipelines and to loaded models.
 * Every function returns a comorec_status (0 on success); on failure the
 * calling thread's message is available via comorec_last_error().
 */
#ifndef COMOREC_H
#define COMOREC_H

#include <stddef.h>

#if defined(_WIN32)
#define COMOREC_API __declspec(dllexport)
#else
#define COMOREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  COMOREC_OK = 0,
  COMOREC_ERROR_USAGE = 1,   /* bad arguments or configuration */
  COMOREC_ERROR_DATA = 2,    /* unreadable or inconsistent input files */
  COMOREC_ERROR_NUMERIC = 3  /* numeric failure (e.g. diverged training) */
} comorec_status;

/* Opaque handle to a loaded model. */
typedef struct comorec_model comorec_model;

/* Library version as "major.minor.patch". */
COMOREC_API const char* comorec_version(void);

/*
 * Message for the calling thread's most recent failure; valid until the
 * next failing call on the same thread. Never NULL.
 */
COMOREC_API const char* comorec_last_error(void);

/*
 * Generate a synthetic planted-cluster dataset into out_dir (diagnoses.csv,
 * notes.csv, truth.json, lexicon.tsv). config_json uses the same keys as
 * the CLI synth --config file; pass "{}" for the defaults.
 */
COMOREC_API int comorec_synth(const char* config_json, const char* out_dir);

/*
 * Train a model end to end (ingest, negative sampling, split, fit) and
 * write the model JSON plus a .history.json sidecar. config_json uses the
 * CLI train --config keys; "diagnoses" and "out" are required.
 */
COMOREC_API int comorec_train(const char* config_json);

/*
 * Evaluate a saved model: accuracy/F1 per split, test AUC, hit ratio.
 * config_json uses the CLI eval --config keys; "model" and "diagnoses" are
 * required. On success *report_json receives the report document; release
 * it with comorec_string_free. Pass NULL to skip the copy.
 */
COMOREC_API int comorec_eval(const char* config_json, char** report_json);

/* Load a model written by comorec_train / the CLI. */
COMOREC_API int comorec_model_load(const char* path, comorec_model** out_model);

COMOREC_API void comorec_model_free(comorec_model* model);

/* Model kind ("ncf" or "dhf") copied into buffer (NUL-terminated). */
COMOREC_API int comorec_model_kind(const comorec_model* model, char* buffer,
                                   size_t buffer_size);

/*
 * Probability that subject_id co-occurs with icd9_code, identifiers as they
 * appeared in the training data. Unknown identifiers are data errors. A
 * "dhf" model requires symptom_term; an "ncf" model ignores it (NULL ok).
 */
COMOREC_API int comorec_model_score(const comorec_model* model, const char* subject_id,
                                    const char* icd9_code, const char* symptom_term,
                                    double* out_probability);

/* Release a string returned by this library. */
COMOREC_API void comorec_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* COMOREC_H */

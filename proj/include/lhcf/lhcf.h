/*
 * Copyright 2026 The LHCF Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C API of the LHCF library: label-free hidden-cohort fairness.
 *
 * The pipeline is: discover latent cohorts in embedding space (GMM/EM with
 * BIC model selection), train a classifier head with a cohort-fairness
 * objective, evaluate AUC-family fairness metrics over visible partitions,
 * and compare methods with the Friedman/Nemenyi procedure.
 *
 * All functions return LHCF_OK on success; on failure they return an error
 * code and lhcf_last_error() carries a human-readable message for the
 * calling thread. Objects are opaque handles released with the matching
 * *_free function.
 */

#ifndef LHCF_LHCF_H_
#define LHCF_LHCF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LHCF_API __declspec(dllexport)
#else
#define LHCF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lhcf_status {
  LHCF_OK = 0,
  LHCF_E_INVALID_ARGUMENT = 1,
  LHCF_E_PARSE = 2,
  LHCF_E_SCHEMA = 3,
  LHCF_E_DIMENSION = 4,
  LHCF_E_NOT_POSITIVE_DEFINITE = 5,
  LHCF_E_EMPTY_INPUT = 6,
  LHCF_E_TOO_FEW_SAMPLES = 7,
  LHCF_E_UNKNOWN_ATTRIBUTE = 8,
  LHCF_E_MISSING_ATTRIBUTE = 9,
  LHCF_E_DEGENERATE_COMPONENT = 10,
  LHCF_E_SINGLE_CLASS = 11,
  LHCF_E_INVALID_SPEC = 12,
  LHCF_E_NO_GROUPS = 13,
  LHCF_E_UNSUPPORTED_K = 14,
  LHCF_E_TOO_MANY_CLUSTERS = 15,
  LHCF_E_IO = 16,
  LHCF_E_INTERNAL = 17
} lhcf_status;

/* Tool/format version string, e.g. "0.1.0". Static storage; do not free. */
LHCF_API const char* lhcf_version(void);

/* Message for the last failure on this thread. Static storage; do not free. */
LHCF_API const char* lhcf_last_error(void);

/* Releases strings returned through char** out-parameters. */
LHCF_API void lhcf_string_free(char* s);

/* 1 when the status denotes a user/input problem (CLI exit code 1),
 * 0 for internal errors (exit code 2). */
LHCF_API int lhcf_status_is_validation(lhcf_status status);

/* ---- datasets ---------------------------------------------------------- */

typedef struct lhcf_dataset lhcf_dataset;

LHCF_API lhcf_status lhcf_dataset_open(const char* manifest_path,
                                       lhcf_dataset** out);
LHCF_API void lhcf_dataset_free(lhcf_dataset* ds);
LHCF_API size_t lhcf_dataset_size(const lhcf_dataset* ds);
LHCF_API size_t lhcf_dataset_dim(const lhcf_dataset* ds);
LHCF_API int lhcf_dataset_has_splits(const lhcf_dataset* ds);

/* Label-stratified split assignment (largest-remainder rounding). */
LHCF_API lhcf_status lhcf_dataset_make_splits(lhcf_dataset* ds, double train,
                                              double val, double test,
                                              uint64_t seed);

/* Rewrites the TSV + manifest (canonical formatting, splits included). */
LHCF_API lhcf_status lhcf_dataset_save(const lhcf_dataset* ds,
                                       const char* tsv_path,
                                       const char* manifest_path);

/* Patches only the "splits" entry of an existing manifest, leaving the TSV
 * untouched; used to persist CLI-generated splits. */
LHCF_API lhcf_status lhcf_dataset_write_splits(const lhcf_dataset* ds,
                                               const char* manifest_path);

/* ---- clustering (step i) ----------------------------------------------- */

typedef struct lhcf_cluster_options {
  int k_min;
  int k_max;
  int restarts;
  uint64_t seed;
  int diag_cov;           /* nonzero: diagonal covariances */
  double pca_variance;    /* in (0,1]: PCA-whitening preprocessor; <=0 off */
  const char* dac_attrs;  /* comma-separated attribute list or NULL */
  double dac_weight;
  double tol;
  int max_iter;
} lhcf_cluster_options;

LHCF_API void lhcf_cluster_options_init(lhcf_cluster_options* opt);

typedef struct lhcf_cohorts lhcf_cohorts;

LHCF_API lhcf_status lhcf_cluster_fit(const lhcf_dataset* ds,
                                      const lhcf_cluster_options* opt,
                                      lhcf_cohorts** out);
LHCF_API lhcf_status lhcf_cohorts_save(const lhcf_cohorts* cohorts,
                                       const char* path);
LHCF_API lhcf_status lhcf_cohorts_open(const char* path, lhcf_cohorts** out);
LHCF_API int lhcf_cohorts_k(const lhcf_cohorts* cohorts);
LHCF_API void lhcf_cohorts_free(lhcf_cohorts* cohorts);

/* ---- training (step ii) ------------------------------------------------ */

typedef struct lhcf_train_options {
  const char* fair;   /* "none" | "worst" | "gap" */
  double lambda;
  const char* arch;   /* "linear" | "mlp" */
  int hidden;
  double lr;
  double momentum;
  int epochs;
  int batch_size;
  int patience;
  uint64_t seed;
} lhcf_train_options;

LHCF_API void lhcf_train_options_init(lhcf_train_options* opt);

typedef struct lhcf_model lhcf_model;

/* Group labels come from discovered cohorts, from a visible partition
 * (comma-separated attribute names), or neither for plain ERM. Passing both
 * is an error. */
LHCF_API lhcf_status lhcf_train(const lhcf_dataset* ds,
                                const lhcf_cohorts* cohorts,
                                const char* visible_attrs,
                                const lhcf_train_options* opt,
                                lhcf_model** out);
LHCF_API lhcf_status lhcf_model_save(const lhcf_model* model,
                                     const char* path);
LHCF_API lhcf_status lhcf_model_open(const char* path, lhcf_model** out);
/* Per-epoch training report as a JSON string (objective, losses, group
 * risks, validation AUC, best epoch). Free with lhcf_string_free. */
LHCF_API lhcf_status lhcf_model_report_json(const lhcf_model* model,
                                            char** out);
LHCF_API void lhcf_model_free(lhcf_model* model);

/* ---- evaluation --------------------------------------------------------- */

/* Evaluates the model on one split ("train" | "val" | "test"); the grouping
 * mirrors lhcf_train. Writes the evaluation report JSON to out_path and, if
 * report_json is non-NULL, also returns it as a string. */
LHCF_API lhcf_status lhcf_evaluate(const lhcf_dataset* ds,
                                   const lhcf_model* model,
                                   const lhcf_cohorts* cohorts,
                                   const char* visible_attrs,
                                   const char* split, const char* out_path,
                                   char** report_json);

/* ---- statistical comparison -------------------------------------------- */

/* scores_path: TSV with header "setting<TAB>method1<TAB>..." (one row per
 * setting) or a directory of evaluation reports carrying "setting"/"method"
 * fields, in which case `metric` selects the compared value. `direction` is
 * "higher" or "lower"; alpha is 0.05 or 0.10. svg_path may be NULL. */
LHCF_API lhcf_status lhcf_compare(const char* scores_path, const char* metric,
                                  const char* direction, double alpha,
                                  const char* svg_path,
                                  const char* ranks_json_path);

/* ---- synthetic benchmark ------------------------------------------------ */

LHCF_API lhcf_status lhcf_synth_generate(const char* spec_json_path,
                                         const char* out_tsv,
                                         const char* out_manifest);

/* risks_json_path: {"risks": [...], "counts": [...]} . Result JSON reports
 * the maximal union-risk violation and whether the bound holds. */
LHCF_API lhcf_status lhcf_lemma_check_risks(const char* risks_json_path,
                                            char** result_json);
/* Same check against the per-cohort risks of an evaluation report. */
LHCF_API lhcf_status lhcf_lemma_check_eval(const char* report_json_path,
                                           char** result_json);

/* ---- experiment grid ---------------------------------------------------- */

LHCF_API lhcf_status lhcf_experiment_run(const char* config_json_path,
                                         const char* out_dir, int jobs);

/* ---- run manifests ------------------------------------------------------ */

typedef struct lhcf_runmeta lhcf_runmeta;

/* flags_json: JSON object string with the fully resolved flag set. */
LHCF_API lhcf_runmeta* lhcf_runmeta_new(const char* command,
                                        const char* flags_json, uint64_t seed);
LHCF_API lhcf_status lhcf_runmeta_add_input(lhcf_runmeta* meta,
                                            const char* path);
/* Writes <artifact_path>.run.json atomically. */
LHCF_API lhcf_status lhcf_runmeta_write(const lhcf_runmeta* meta,
                                        const char* artifact_path);
LHCF_API void lhcf_runmeta_free(lhcf_runmeta* meta);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LHCF_LHCF_H_ */

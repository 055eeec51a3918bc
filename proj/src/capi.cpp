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

#include "lhcf/lhcf.h"

#include <cstring>
#include <filesystem>
#include <optional>
#include <string>

#include "dataset.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "jsonio.hpp"
#include "pipeline.hpp"
#include "runmeta.hpp"
#include "synth.hpp"

using nlohmann::json;

/* Opaque handle definitions. */
struct lhcf_dataset {
  lhcf::EmbeddingDataset ds;
};
struct lhcf_cohorts {
  lhcf::CohortFile file;
  std::optional<lhcf::ClusterResult> fitted;  // present right after a fit
};
struct lhcf_model {
  lhcf::ClassifierModel model;
  lhcf::TrainStageOptions options;
  std::optional<lhcf::TrainReport> report;
};
struct lhcf_runmeta {
  lhcf::RunManifest meta;
};

namespace {

thread_local std::string g_last_error;

lhcf_status map_code(lhcf::ErrorCode code) {
  using lhcf::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return LHCF_E_INVALID_ARGUMENT;
    case ErrorCode::Parse: return LHCF_E_PARSE;
    case ErrorCode::Schema: return LHCF_E_SCHEMA;
    case ErrorCode::Dimension: return LHCF_E_DIMENSION;
    case ErrorCode::NotPositiveDefinite: return LHCF_E_NOT_POSITIVE_DEFINITE;
    case ErrorCode::EmptyInput: return LHCF_E_EMPTY_INPUT;
    case ErrorCode::TooFewSamples: return LHCF_E_TOO_FEW_SAMPLES;
    case ErrorCode::UnknownAttribute: return LHCF_E_UNKNOWN_ATTRIBUTE;
    case ErrorCode::MissingAttribute: return LHCF_E_MISSING_ATTRIBUTE;
    case ErrorCode::DegenerateComponent: return LHCF_E_DEGENERATE_COMPONENT;
    case ErrorCode::SingleClass: return LHCF_E_SINGLE_CLASS;
    case ErrorCode::InvalidSpec: return LHCF_E_INVALID_SPEC;
    case ErrorCode::NoGroups: return LHCF_E_NO_GROUPS;
    case ErrorCode::UnsupportedK: return LHCF_E_UNSUPPORTED_K;
    case ErrorCode::TooManyClusters: return LHCF_E_TOO_MANY_CLUSTERS;
    case ErrorCode::Io: return LHCF_E_IO;
    default: return LHCF_E_INTERNAL;
  }
}

template <typename Fn>
lhcf_status wrap(Fn&& fn) noexcept {
  try {
    fn();
    return LHCF_OK;
  } catch (const lhcf::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LHCF_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LHCF_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

std::vector<std::string> split_csv(const char* csv) {
  std::vector<std::string> out;
  if (csv == nullptr || *csv == '\0') return out;
  std::string s(csv);
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) lhcf::fail(lhcf::ErrorCode::InvalidArgument, what);
}

lhcf::TrainStageOptions to_train_options(const lhcf_train_options* opt) {
  lhcf::TrainStageOptions o;
  o.fair.kind = lhcf::parse_fair_kind(opt->fair ? opt->fair : "none");
  o.fair.lambda = opt->lambda;
  o.hyper.arch = lhcf::parse_arch(opt->arch ? opt->arch : "linear");
  o.hyper.hidden = opt->hidden;
  o.hyper.lr = opt->lr;
  o.hyper.momentum = opt->momentum;
  o.hyper.epochs = opt->epochs;
  o.hyper.batch_size = opt->batch_size;
  o.hyper.patience = opt->patience;
  o.hyper.seed = opt->seed;
  return o;
}

lhcf::GroupSource to_group_source(const lhcf_cohorts* cohorts,
                                  const char* visible_attrs) {
  lhcf::GroupSource src;
  if (cohorts != nullptr) src.cohorts = cohorts->file;
  src.visible_attrs = split_csv(visible_attrs);
  return src;
}

}  // namespace

extern "C" {

const char* lhcf_version(void) { return lhcf::kToolVersion; }

const char* lhcf_last_error(void) { return g_last_error.c_str(); }

void lhcf_string_free(char* s) { delete[] s; }

int lhcf_status_is_validation(lhcf_status status) {
  return status != LHCF_OK && status != LHCF_E_INTERNAL ? 1 : 0;
}

/* ---- datasets ---------------------------------------------------------- */

lhcf_status lhcf_dataset_open(const char* manifest_path, lhcf_dataset** out) {
  return wrap([&] {
    require(manifest_path && out, "dataset_open: null argument");
    auto handle = new lhcf_dataset{lhcf::load_dataset(manifest_path)};
    *out = handle;
  });
}

void lhcf_dataset_free(lhcf_dataset* ds) { delete ds; }

size_t lhcf_dataset_size(const lhcf_dataset* ds) {
  return ds ? ds->ds.records.size() : 0;
}

size_t lhcf_dataset_dim(const lhcf_dataset* ds) { return ds ? ds->ds.d : 0; }

int lhcf_dataset_has_splits(const lhcf_dataset* ds) {
  return ds && ds->ds.has_splits() ? 1 : 0;
}

lhcf_status lhcf_dataset_make_splits(lhcf_dataset* ds, double train,
                                     double val, double test, uint64_t seed) {
  return wrap([&] {
    require(ds != nullptr, "make_splits: null dataset");
    ds->ds = lhcf::make_splits(ds->ds, {train, val, test}, lhcf::Rng(seed));
  });
}

lhcf_status lhcf_dataset_save(const lhcf_dataset* ds, const char* tsv_path,
                              const char* manifest_path) {
  return wrap([&] {
    require(ds && tsv_path && manifest_path, "dataset_save: null argument");
    lhcf::save_dataset(ds->ds, tsv_path, manifest_path);
  });
}

lhcf_status lhcf_dataset_write_splits(const lhcf_dataset* ds,
                                      const char* manifest_path) {
  return wrap([&] {
    require(ds && manifest_path, "dataset_write_splits: null argument");
    lhcf::write_splits_to_manifest(ds->ds, manifest_path);
  });
}

/* ---- clustering --------------------------------------------------------- */

void lhcf_cluster_options_init(lhcf_cluster_options* opt) {
  if (!opt) return;
  opt->k_min = 1;
  opt->k_max = 12;
  opt->restarts = 5;
  opt->seed = 0;
  opt->diag_cov = 0;
  opt->pca_variance = 0.0;
  opt->dac_attrs = nullptr;
  opt->dac_weight = 1.0;
  opt->tol = 1e-6;
  opt->max_iter = 300;
}

lhcf_status lhcf_cluster_fit(const lhcf_dataset* ds,
                             const lhcf_cluster_options* opt,
                             lhcf_cohorts** out) {
  return wrap([&] {
    require(ds && opt && out, "cluster_fit: null argument");
    lhcf::ClusterOptions options;
    options.k_min = opt->k_min;
    options.k_max = opt->k_max;
    options.restarts = opt->restarts;
    options.seed = opt->seed;
    options.diag_cov = opt->diag_cov != 0;
    options.pca_variance = opt->pca_variance;
    options.dac_attrs = split_csv(opt->dac_attrs);
    options.dac_weight = opt->dac_weight;
    options.tol = opt->tol;
    options.max_iter = opt->max_iter;
    lhcf::ClusterResult result = lhcf::cluster_dataset(ds->ds, options);
    auto handle = new lhcf_cohorts;
    handle->file.k_star = result.k_star;
    for (size_t i = 0; i < result.ids.size(); ++i)
      handle->file.label_of[result.ids[i]] = result.labels[i];
    handle->fitted = std::move(result);
    *out = handle;
  });
}

lhcf_status lhcf_cohorts_save(const lhcf_cohorts* cohorts, const char* path) {
  return wrap([&] {
    require(cohorts && path, "cohorts_save: null argument");
    require(cohorts->fitted.has_value(),
            "cohorts_save: handle was loaded from a file, nothing new to save");
    lhcf::save_cohorts(*cohorts->fitted, path);
  });
}

lhcf_status lhcf_cohorts_open(const char* path, lhcf_cohorts** out) {
  return wrap([&] {
    require(path && out, "cohorts_open: null argument");
    auto handle = new lhcf_cohorts;
    handle->file = lhcf::load_cohorts(path);
    *out = handle;
  });
}

int lhcf_cohorts_k(const lhcf_cohorts* cohorts) {
  return cohorts ? cohorts->file.k_star : 0;
}

void lhcf_cohorts_free(lhcf_cohorts* cohorts) { delete cohorts; }

/* ---- training ----------------------------------------------------------- */

void lhcf_train_options_init(lhcf_train_options* opt) {
  if (!opt) return;
  opt->fair = "none";
  opt->lambda = 0.0;
  opt->arch = "linear";
  opt->hidden = 64;
  opt->lr = 0.05;
  opt->momentum = 0.0;
  opt->epochs = 100;
  opt->batch_size = 64;
  opt->patience = 10;
  opt->seed = 0;
}

lhcf_status lhcf_train(const lhcf_dataset* ds, const lhcf_cohorts* cohorts,
                       const char* visible_attrs,
                       const lhcf_train_options* opt, lhcf_model** out) {
  return wrap([&] {
    require(ds && opt && out, "train: null argument");
    const lhcf::TrainStageOptions options = to_train_options(opt);
    const lhcf::GroupSource groups = to_group_source(cohorts, visible_attrs);
    lhcf::TrainStageResult r = lhcf::train_stage(ds->ds, groups, options);
    auto handle = new lhcf_model;
    handle->model = std::move(r.model);
    handle->options = options;
    handle->report = std::move(r.report);
    *out = handle;
  });
}

lhcf_status lhcf_model_save(const lhcf_model* model, const char* path) {
  return wrap([&] {
    require(model && path, "model_save: null argument");
    lhcf::save_model(model->model, model->options, path);
  });
}

lhcf_status lhcf_model_open(const char* path, lhcf_model** out) {
  return wrap([&] {
    require(path && out, "model_open: null argument");
    auto handle = new lhcf_model;
    handle->model = lhcf::load_model(path);
    *out = handle;
  });
}

lhcf_status lhcf_model_report_json(const lhcf_model* model, char** out) {
  return wrap([&] {
    require(model && out, "model_report_json: null argument");
    require(model->report.has_value(),
            "model_report_json: model was loaded from a file; no report");
    *out = dup_string(lhcf::train_report_json(*model->report).dump(2));
  });
}

void lhcf_model_free(lhcf_model* model) { delete model; }

/* ---- evaluation --------------------------------------------------------- */

lhcf_status lhcf_evaluate(const lhcf_dataset* ds, const lhcf_model* model,
                          const lhcf_cohorts* cohorts,
                          const char* visible_attrs, const char* split,
                          const char* out_path, char** report_json) {
  return wrap([&] {
    require(ds && model, "evaluate: null argument");
    const lhcf::GroupSource groups = to_group_source(cohorts, visible_attrs);
    const lhcf::Split sp = lhcf::parse_split(split ? split : "test");
    const json report = lhcf::eval_stage(ds->ds, model->model, groups, sp);
    if (out_path != nullptr) lhcf::save_json_file(out_path, report);
    if (report_json != nullptr) *report_json = dup_string(report.dump(2));
  });
}

/* ---- comparison --------------------------------------------------------- */

lhcf_status lhcf_compare(const char* scores_path, const char* metric,
                         const char* direction, double alpha,
                         const char* svg_path, const char* ranks_json_path) {
  return wrap([&] {
    require(scores_path && ranks_json_path, "compare: null argument");
    const std::string dir = direction ? direction : "higher";
    bool higher;
    if (dir == "higher")
      higher = true;
    else if (dir == "lower")
      higher = false;
    else
      lhcf::fail(lhcf::ErrorCode::InvalidArgument,
                 "compare: direction must be 'higher' or 'lower'");
    namespace fs = std::filesystem;
    lhcf::ScoreTable table;
    if (fs::is_directory(scores_path)) {
      require(metric && *metric, "compare: directory input needs a metric");
      table = lhcf::score_table_from_reports(scores_path, metric, higher);
    } else {
      table = lhcf::load_score_tsv(scores_path, higher);
    }
    const lhcf::RankResult ranks = lhcf::friedman(table, alpha);
    json rj = lhcf::rank_result_json(ranks);
    if (metric && *metric) rj["metric"] = metric;
    rj["direction"] = dir;
    lhcf::save_json_file(ranks_json_path, rj);
    if (svg_path != nullptr)
      lhcf::atomic_write_file(svg_path, lhcf::cd_diagram(ranks));
  });
}

/* ---- synthetic benchmark ------------------------------------------------- */

lhcf_status lhcf_synth_generate(const char* spec_json_path,
                                const char* out_tsv,
                                const char* out_manifest) {
  return wrap([&] {
    require(spec_json_path && out_tsv && out_manifest,
            "synth_generate: null argument");
    const lhcf::SynthSpec spec =
        lhcf::parse_synth_spec(lhcf::load_json_file(spec_json_path));
    const lhcf::SynthResult result = lhcf::generate(spec);
    lhcf::save_dataset(result.dataset, out_tsv, out_manifest);
  });
}

lhcf_status lhcf_lemma_check_risks(const char* risks_json_path,
                                   char** result_json) {
  return wrap([&] {
    require(risks_json_path && result_json, "lemma_check: null argument");
    const lhcf::LemmaCheckResult r =
        lhcf::lemma_check_from_json(lhcf::load_json_file(risks_json_path));
    *result_json = dup_string(lhcf::lemma_result_json(r).dump(2));
  });
}

lhcf_status lhcf_lemma_check_eval(const char* report_json_path,
                                  char** result_json) {
  return wrap([&] {
    require(report_json_path && result_json, "lemma_check: null argument");
    const lhcf::LemmaCheckResult r =
        lhcf::lemma_check_from_eval(lhcf::load_json_file(report_json_path));
    *result_json = dup_string(lhcf::lemma_result_json(r).dump(2));
  });
}

/* ---- experiments --------------------------------------------------------- */

lhcf_status lhcf_experiment_run(const char* config_json_path,
                                const char* out_dir, int jobs) {
  return wrap([&] {
    require(config_json_path && out_dir, "experiment_run: null argument");
    lhcf::run_experiment(config_json_path, out_dir, jobs);
  });
}

/* ---- run manifests -------------------------------------------------------- */

lhcf_runmeta* lhcf_runmeta_new(const char* command, const char* flags_json,
                               uint64_t seed) {
  try {
    json flags = json::object();
    if (flags_json != nullptr && *flags_json != '\0')
      flags = json::parse(flags_json);
    return new lhcf_runmeta{
        lhcf::RunManifest(command ? command : "", std::move(flags), seed)};
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
}

lhcf_status lhcf_runmeta_add_input(lhcf_runmeta* meta, const char* path) {
  return wrap([&] {
    require(meta && path, "runmeta_add_input: null argument");
    meta->meta.add_input(path);
  });
}

lhcf_status lhcf_runmeta_write(const lhcf_runmeta* meta,
                               const char* artifact_path) {
  return wrap([&] {
    require(meta && artifact_path, "runmeta_write: null argument");
    meta->meta.write_for(artifact_path);
  });
}

void lhcf_runmeta_free(lhcf_runmeta* meta) { delete meta; }

} /* extern "C" */

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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "gmm.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "stats.hpp"
#include "synth.hpp"
#include "trainer.hpp"

namespace lhcf {

// ---- clustering stage -----------------------------------------------------

struct ClusterOptions {
  int k_min = 1;
  int k_max = 12;
  int restarts = 5;
  uint64_t seed = 0;
  bool diag_cov = false;
  double pca_variance = 0.0;  // <= 0 disables PCA whitening
  std::vector<std::string> dac_attrs;
  double dac_weight = 1.0;
  double tol = 1e-6;
  int max_iter = 300;
};

// The model is fit on the training split only; validation and test records
// are assigned through the posterior of the selected model.
struct ClusterResult {
  int k_star = 0;
  std::vector<std::string> ids;  // record order
  std::vector<int> labels;       // hard cohort per record
  Matrix responsibilities;
  GmmModel model;
  struct BicRow {
    int k;
    double bic;
    double log_likelihood;
    bool converged;
    int iterations;
  };
  std::vector<BicRow> bic_table;
  nlohmann::json preprocess;  // none / pca / dac descriptor
};

ClusterResult cluster_dataset(const EmbeddingDataset& ds,
                              const ClusterOptions& opt);
void save_cohorts(const ClusterResult& result, const std::string& path);

struct CohortFile {
  int k_star = 0;
  std::map<std::string, int> label_of;  // record id -> cohort
};
CohortFile load_cohorts(const std::string& path);

// ---- training stage ---------------------------------------------------------

// Group labels for a training/eval run; exactly one source.
struct GroupSource {
  std::optional<CohortFile> cohorts;
  std::vector<std::string> visible_attrs;
  bool empty() const { return !cohorts && visible_attrs.empty(); }
};

GroupLabels resolve_groups(const EmbeddingDataset& ds, const GroupSource& src);

struct TrainStageOptions {
  FairnessConfig fair;
  TrainHyper hyper;
};

struct TrainStageResult {
  ClassifierModel model;
  TrainReport report;
};

TrainStageResult train_stage(const EmbeddingDataset& ds,
                             const GroupSource& groups,
                             const TrainStageOptions& opt);

void save_model(const ClassifierModel& model, const TrainStageOptions& opt,
                const std::string& path);
ClassifierModel load_model(const std::string& path);
nlohmann::json train_report_json(const TrainReport& report);

// ---- evaluation stage -------------------------------------------------------

// Fairness/quality report over one split; grouping comes from cohorts or a
// visible partition. Cohort groupings additionally produce the per-cohort
// quality block (risk, Brier, AUC where defined, purity per visible
// attribute).
nlohmann::json eval_stage(const EmbeddingDataset& ds,
                          const ClassifierModel& model,
                          const GroupSource& groups, Split split);

// ---- statistical comparison -------------------------------------------------

ScoreTable load_score_tsv(const std::string& path, bool higher_better);
ScoreTable score_table_from_reports(const std::string& dir,
                                    const std::string& metric,
                                    bool higher_better);
nlohmann::json rank_result_json(const RankResult& r);

// ---- synthetic data ----------------------------------------------------------

SynthSpec parse_synth_spec(const nlohmann::json& j);
nlohmann::json lemma_result_json(const LemmaCheckResult& r);
LemmaCheckResult lemma_check_from_json(const nlohmann::json& risks_json);
LemmaCheckResult lemma_check_from_eval(const nlohmann::json& report);

// Metric accessor shared by `compare` and the experiment runner.
double report_metric(const nlohmann::json& report, const std::string& metric);
bool metric_higher_better(const std::string& metric);
const std::vector<std::string>& known_metrics();

}  // namespace lhcf

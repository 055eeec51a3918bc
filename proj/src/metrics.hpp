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

#include <map>
#include <span>
#include <string>
#include <vector>

namespace lhcf {

// Mann-Whitney AUC with ties counted 1/2, computed from mid-ranks in
// O(n log n). Equals the pairwise count exactly, ties included.
// Throws Error(SingleClass) unless both classes are present.
double auc(std::span<const double> score, std::span<const int> label);

// Mean squared error between scores and binary outcomes.
double brier(std::span<const double> score, std::span<const int> label);

struct FairnessReport {
  double overall_auc = 0.0;
  // Groups with both classes present, in partition order.
  std::vector<std::pair<std::string, double>> per_group_auc;
  // Groups excluded from the AUC family, with the reason.
  std::vector<std::pair<std::string, std::string>> exclusions;
  double min_auc = 0.0;
  double auc_gap = 0.0;
  double es_auc = 0.0;
  double mean_psd = 0.0;
  double max_psd = 0.0;
};

// Per-group AUC plus the disparity summary:
//   es_auc   = overall / (1 + sum_g |overall - auc_g|)
//   mean_psd = mean_g |auc_g - overall| / overall
//   max_psd  = (max_g auc_g - min_g auc_g) / overall
// `group` holds a group index per sample, -1 for samples outside the
// partition (they still count toward the overall metrics).
FairnessReport fairness_report(std::span<const double> score,
                               std::span<const int> label,
                               std::span<const int> group,
                               const std::vector<std::string>& group_names);

// Cluster-size-weighted majority purity between a cohort assignment and a
// visible partition; samples with either id < 0 are skipped.
double average_purity(std::span<const int> cohort, std::span<const int> group);

struct CohortStats {
  long long count = 0;
  double risk = 0.0;   // mean binary cross-entropy
  double brier = 0.0;
  bool has_auc = false;
  double auc = 0.0;    // absent for single-class cohorts
};

struct CohortQualityReport {
  std::vector<CohortStats> per_cohort;
  std::map<std::string, double> average_purity;  // partition name -> AP
};

// Per-cohort calibration/risk/AUC plus purity against each given partition
// (pairs of partition name and per-sample group index).
CohortQualityReport cohort_quality(
    std::span<const double> score, std::span<const int> label,
    std::span<const int> cohort, int n_cohorts,
    const std::vector<std::pair<std::string, std::vector<int>>>& partitions);

}  // namespace lhcf

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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace lhcf {

// Controls for the synthetic embedding population: cohort means sit on a
// scaled regular simplex with unit isotropic within-cohort covariance;
// per-cohort positive rates and label flip rates set each cohort's intrinsic
// difficulty; attributes align with the cohort identity with the given
// probability (0 = independent, 1 = deterministic function of the cohort).
struct SynthAttribute {
  std::string name;
  int cardinality = 2;
  double alignment = 0.0;
};

struct SynthSpec {
  int k_true = 1;
  size_t d = 1;
  size_t n = 0;
  double separation = 6.0;
  std::vector<double> flip_rate;      // one per cohort, in [0, 0.5)
  std::vector<double> positive_rate;  // one per cohort, in (0, 1)
  // Relative cohort sizes; empty means uniform. Rare cohorts are what make
  // average-loss training under-serve a subpopulation.
  std::vector<double> cohort_weights;
  std::vector<SynthAttribute> attributes;
  uint64_t seed = 0;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
};

struct SynthResult {
  EmbeddingDataset dataset;
  std::vector<int> true_cohort;  // per record
};

// Deterministic for a given seed. The ground-truth cohort is also written
// into the dataset as a non-visible attribute named "__true_cohort" (for
// k_true >= 2, since single-valued attributes are not representable).
SynthResult generate(const SynthSpec& spec);

// Cohort means used by generate(); exposed for tests.
std::vector<std::vector<double>> simplex_means(int k, size_t d,
                                               double separation);

struct LemmaCheckResult {
  int k = 0;
  std::vector<double> risks;
  std::vector<long long> counts;
  double max_violation = 0.0;  // max over subsets of L(union) - max_k R_k
  double worst_union_risk = 0.0;
  unsigned long long worst_subset_mask = 0;
  unsigned long long subsets_checked = 0;
  bool holds = false;  // max_violation <= 1e-12
};

// Exhaustively verifies that the count-weighted risk of every non-empty
// union of clusters is bounded by the worst per-cluster risk. K <= 20
// (Error(TooManyClusters) beyond that).
LemmaCheckResult lemma1_check(const std::vector<double>& risks,
                              const std::vector<long long>& counts);

}  // namespace lhcf

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

#include <string>
#include <vector>

#include "matrix.hpp"

namespace lhcf {

// Scores for k methods across N settings. `higher_better` decides the rank
// direction (rank 1 = best).
struct ScoreTable {
  std::vector<std::string> methods;
  std::vector<std::string> settings;
  Matrix scores;  // N x k
  bool higher_better = true;
};

struct RankResult {
  std::vector<std::string> methods;
  Matrix ranks;                  // N x k, mid-ranks within each row
  std::vector<double> avg_rank;  // R_j per method
  double statistic = 0.0;        // Friedman chi-square
  double critical = 0.0;         // chi-square critical value, df = k-1
  bool significant = false;
  bool degenerate = false;  // every row fully tied
  double alpha = 0.05;
  double cd = 0.0;  // Nemenyi critical difference (NaN when k > table range)
  int n_settings = 0;
  // Maximal runs of rank-adjacent methods whose span is below cd
  // (indices into `methods`); only runs of length >= 2 are listed.
  std::vector<std::vector<int>> groups;
};

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Inverse chi-square CDF by bisection, |error| < 1e-8.
double chi2_quantile(double p, int df);

// Friedman rank test with mid-ranks for ties:
//   chi2_F = 12N / (k(k+1)) * (sum_j R_j^2 - k(k+1)^2 / 4)
// compared against the chi-square critical value with k-1 degrees of freedom.
// A fully tied table is flagged degenerate (statistic 0, not significant).
RankResult friedman(const ScoreTable& table, double alpha = 0.05);

// Nemenyi critical difference q_alpha(k) * sqrt(k(k+1) / (6N)) for
// alpha in {0.05, 0.10} and 2 <= k <= 20 (Error(UnsupportedK) beyond).
double nemenyi_cd(int k, int n_settings, double alpha);

// Deterministic SVG critical-difference diagram: a rank axis, one tick per
// method at its average rank, and bars joining groups within the CD.
// Byte-identical output for identical inputs.
std::string cd_diagram(const RankResult& result);

}  // namespace lhcf

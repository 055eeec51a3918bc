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

#include "dataset.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lhcf {

struct EmConfig {
  int max_iter = 300;
  double tol = 1e-6;      // relative log-likelihood improvement
  bool diag_cov = false;  // diagonal covariances for high-d inputs
};

struct GmmModel {
  int k = 0;
  std::vector<double> weights;             // simplex, k entries
  std::vector<std::vector<double>> means;  // k vectors of dim d
  std::vector<Matrix> covariances;         // stored already regularized
  double log_likelihood = 0.0;
  double bic = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diag_cov = false;
  // log-likelihood at the start of each EM iteration, for monotonicity checks
  std::vector<double> loglik_history;
};

// Free-parameter count: (K-1) + K*d + K*d(d+1)/2 for full covariances,
// (K-1) + 2*K*d for diagonal ones.
long long gmm_param_count(int k, size_t d, bool diag_cov);

// p_K * log(N) - 2 * log_likelihood.
double gmm_bic(const GmmModel& model, size_t n);

// EM fit with k-means++-style seeding. Each iteration records the
// log-likelihood, the covariances carry the standard ridge, and a component
// whose responsibility mass drops below d+1 is reseeded once before
// Error(DegenerateComponent) is raised.
GmmModel fit_gmm(const Matrix& z, int k, Rng rng, const EmConfig& cfg = {});

// Posterior responsibilities gamma_ik, computed in log space; rows sum to 1.
Matrix e_step(const Matrix& z, const GmmModel& model);

// One plain EM iteration (E then M, no reseeding); the returned weights are
// exactly the responsibility masses over N. Exposed for verification.
GmmModel em_iteration(const Matrix& z, const GmmModel& model);

struct BicSweep {
  struct Candidate {
    int k;
    GmmModel model;
    double bic;
  };
  std::vector<Candidate> candidates;  // sorted by k
  int selected_k = 0;
  const GmmModel& selected_model() const;
};

// Best-of-`restarts` fit per K (by log-likelihood), then argmin BIC with ties
// to the smallest K. A K whose restarts all degenerate is dropped; the error
// propagates only when nothing survives.
BicSweep select_k(const Matrix& z, int k_min, int k_max, int restarts, Rng rng,
                  const EmConfig& cfg = {});

struct CohortAssignment {
  int k_star = 0;
  Matrix responsibilities;      // N x k_star
  std::vector<int> hard_labels; // argmax per row, ties to the lowest index
  GmmModel source_model;
};

CohortAssignment assign_cohorts(const Matrix& z, const BicSweep& sweep);

// Standardized embeddings concatenated with one-hot encodings of the named
// attributes scaled by `weight` (the demographic-aware clustering input).
Matrix dac_augment(const EmbeddingDataset& ds,
                   const std::vector<std::string>& attr_names, double weight);

// PCA whitening preprocessor; keeps the smallest component count explaining
// `variance_to_keep` of the total variance.
struct PcaTransform {
  std::vector<double> mean;
  Matrix components;          // d x m, columns are principal axes
  std::vector<double> scale;  // 1/sqrt(eigenvalue) per kept component
  Matrix apply(const Matrix& z) const;
};
PcaTransform fit_pca(const Matrix& z, double variance_to_keep);

}  // namespace lhcf

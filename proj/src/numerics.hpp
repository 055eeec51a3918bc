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

#include <span>
#include <vector>

#include "matrix.hpp"

namespace lhcf {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// log(sum_i exp(v_i)) without overflow; values up to |v| ~ 1e6 are fine.
double log_sum_exp(std::span<const double> values);

// Adds eps * I with eps = 1e-6 * mean(diag) (absolute 1e-6 when the diagonal
// is all zero, e.g. a point-mass covariance). Applied before every Cholesky
// of an estimated covariance.
Matrix regularize_covariance(Matrix sigma);

// Multivariate normal log-density with a cached Cholesky factor, for repeated
// evaluation against one component.
class MvnDensity {
 public:
  MvnDensity(std::vector<double> mean, const Matrix& sigma);

  double log_density(std::span<const double> z) const;
  size_t dim() const { return mean_.size(); }

 private:
  std::vector<double> mean_;
  Matrix chol_;
  double log_norm_;  // -(d/2) log(2*pi) - (1/2) log det(sigma)
};

// One-shot convenience wrapper over MvnDensity.
double mvn_log_density(std::span<const double> z, std::span<const double> mean,
                       const Matrix& sigma);

}  // namespace lhcf

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

#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace lhcf {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "log_sum_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;  // all -inf (or a stray +inf/nan)
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

Matrix regularize_covariance(Matrix sigma) {
  const size_t d = sigma.rows();
  double mean_diag = 0.0;
  for (size_t i = 0; i < d; ++i) mean_diag += sigma(i, i);
  mean_diag /= static_cast<double>(d);
  const double eps = mean_diag > 0.0 ? 1e-6 * mean_diag : 1e-6;
  for (size_t i = 0; i < d; ++i) sigma(i, i) += eps;
  return sigma;
}

MvnDensity::MvnDensity(std::vector<double> mean, const Matrix& sigma)
    : mean_(std::move(mean)) {
  const size_t d = mean_.size();
  if (sigma.rows() != d || sigma.cols() != d)
    fail(ErrorCode::Dimension, "mvn: mean/covariance dimensions disagree");
  chol_ = cholesky(sigma);
  double log_det = 0.0;
  for (size_t i = 0; i < d; ++i) log_det += std::log(chol_(i, i));
  log_det *= 2.0;
  log_norm_ = -0.5 * (static_cast<double>(d) * kLogTwoPi + log_det);
}

double MvnDensity::log_density(std::span<const double> z) const {
  const size_t d = mean_.size();
  if (z.size() != d)
    fail(ErrorCode::Dimension, "mvn: point dimension mismatch");
  std::vector<double> w(d);
  for (size_t i = 0; i < d; ++i) w[i] = z[i] - mean_[i];
  solve_lower(chol_, w);
  double quad = 0.0;
  for (size_t i = 0; i < d; ++i) quad += w[i] * w[i];
  return log_norm_ - 0.5 * quad;
}

double mvn_log_density(std::span<const double> z, std::span<const double> mean,
                       const Matrix& sigma) {
  MvnDensity density(std::vector<double>(mean.begin(), mean.end()), sigma);
  return density.log_density(z);
}

}  // namespace lhcf

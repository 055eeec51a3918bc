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

#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace lhcf {

Matrix cholesky(const Matrix& m) {
  const size_t n = m.rows();
  if (n == 0 || m.cols() != n)
    fail(ErrorCode::Dimension, "cholesky: matrix must be square and non-empty");

  double max_diag = 0.0;
  for (size_t i = 0; i < n; ++i)
    max_diag = std::max(max_diag, std::abs(m(i, i)));
  const double sym_tol = 1e-10 * std::max(1.0, max_diag);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > sym_tol)
        fail(ErrorCode::InvalidArgument, "cholesky: matrix is not symmetric");

  Matrix lower(n, n);
  for (size_t j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (size_t k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0))
      fail(ErrorCode::NotPositiveDefinite,
           "cholesky: non-positive pivot at column " + std::to_string(j));
    const double ljj = std::sqrt(pivot);
    lower(j, j) = ljj;
    for (size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  return lower;
}

void solve_lower(const Matrix& lower, std::span<double> b) {
  const size_t n = lower.rows();
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= lower(i, k) * b[k];
    b[i] = s / lower(i, i);
  }
}

SymEigen sym_eigen(const Matrix& m) {
  const size_t n = m.rows();
  if (n == 0 || m.cols() != n)
    fail(ErrorCode::Dimension, "sym_eigen: matrix must be square");

  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24 * std::max(1.0, n * n * 1.0)) break;

    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t i, size_t j) { return a(i, i) > a(j, j); });

  SymEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (size_t c = 0; c < n; ++c) {
    const size_t src = order[c];
    out.values[c] = a(src, src);
    size_t arg = 0;
    double best = 0.0;
    for (size_t r = 0; r < n; ++r) {
      if (std::abs(v(r, src)) > best) {
        best = std::abs(v(r, src));
        arg = r;
      }
    }
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (size_t r = 0; r < n; ++r) out.vectors(r, c) = sign * v(r, src);
  }
  return out;
}

std::vector<double> column_means(const Matrix& z) {
  std::vector<double> mu(z.cols(), 0.0);
  for (size_t i = 0; i < z.rows(); ++i)
    for (size_t j = 0; j < z.cols(); ++j) mu[j] += z(i, j);
  const double inv = z.rows() > 0 ? 1.0 / static_cast<double>(z.rows()) : 0.0;
  for (double& m : mu) m *= inv;
  return mu;
}

Matrix covariance(const Matrix& z, const std::vector<double>& means) {
  const size_t n = z.rows(), d = z.cols();
  Matrix cov(d, d);
  if (n == 0) return cov;
  std::vector<double> centered(d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) centered[j] = z(i, j) - means[j];
    for (size_t a = 0; a < d; ++a)
      for (size_t b = a; b < d; ++b) cov(a, b) += centered[a] * centered[b];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (size_t a = 0; a < d; ++a)
    for (size_t b = a; b < d; ++b) {
      cov(a, b) *= inv;
      cov(b, a) = cov(a, b);
    }
  return cov;
}

}  // namespace lhcf

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

#include <cstddef>
#include <span>
#include <vector>

namespace lhcf {

// Dense row-major matrix of doubles. Deliberately small: the library needs
// deterministic left-to-right reductions more than it needs BLAS coverage,
// so no external linear-algebra backend is used.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(size_t n) {
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  double& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }
  double operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  size_t rows_, cols_;
  std::vector<double> data_;
};

// Lower-triangular Cholesky factor L with L * L^T = m.
// Throws Error(NotPositiveDefinite) when a pivot is <= 0; callers are
// expected to regularize and retry.
Matrix cholesky(const Matrix& m);

// Solves L * x = b in place for lower-triangular L.
void solve_lower(const Matrix& lower, std::span<double> b);

// Symmetric eigendecomposition by cyclic Jacobi rotations. Eigenpairs are
// returned sorted by descending eigenvalue; eigenvector signs are fixed so
// that the largest-magnitude coordinate is positive.
struct SymEigen {
  std::vector<double> values;
  Matrix vectors;  // columns are eigenvectors
};
SymEigen sym_eigen(const Matrix& m);

// Column means and the (population) covariance of the rows of z.
std::vector<double> column_means(const Matrix& z);
Matrix covariance(const Matrix& z, const std::vector<double>& means);

}  // namespace lhcf

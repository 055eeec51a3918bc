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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "errors.hpp"
#include "gmm.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "testutil.hpp"

using namespace lhcf;

namespace {

Matrix gaussian_blob(size_t n, const std::vector<double>& mean, double sd,
                     Rng& rng) {
  Matrix z(n, mean.size());
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < mean.size(); ++j)
      z(i, j) = mean[j] + sd * rng.normal();
  return z;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  for (size_t i = 0; i < a.rows(); ++i)
    for (size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (size_t i = 0; i < b.rows(); ++i)
    for (size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, j) = b(i, j);
  return out;
}

}  // namespace

TEST_CASE("K=1 on identical points: mean at the point, regularized sigma") {
  Matrix z(10, 2);
  for (size_t i = 0; i < 10; ++i) {
    z(i, 0) = 1.5;
    z(i, 1) = -2.0;
  }
  const GmmModel m = fit_gmm(z, 1, Rng(0));
  CHECK(m.means[0][0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(m.means[0][1] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(m.weights[0] == 1.0);
  CHECK_NOTHROW(cholesky(m.covariances[0]));
  CHECK(std::isfinite(m.log_likelihood));
}

TEST_CASE("K=1 equals moment matching") {
  Rng rng(21);
  const Matrix z = gaussian_blob(500, {2.0, -1.0, 0.5}, 1.7, rng);
  const GmmModel m = fit_gmm(z, 1, Rng(4));
  const std::vector<double> mu = column_means(z);
  const Matrix cov = regularize_covariance(covariance(z, mu));
  for (size_t j = 0; j < 3; ++j)
    CHECK(m.means[0][j] == doctest::Approx(mu[j]).epsilon(1e-9));
  for (size_t a = 0; a < 3; ++a)
    for (size_t b = 0; b < 3; ++b)
      CHECK(m.covariances[0](a, b) ==
            doctest::Approx(cov(a, b)).epsilon(1e-6));
}

TEST_CASE("two well-separated 1-d gaussians recover their means") {
  Rng rng(8);
  const Matrix z = vstack(gaussian_blob(500, {-5.0}, 1.0, rng),
                          gaussian_blob(500, {5.0}, 1.0, rng));
  const GmmModel m = fit_gmm(z, 2, Rng(13));
  std::vector<double> centers = {m.means[0][0], m.means[1][0]};
  std::sort(centers.begin(), centers.end());
  CHECK(std::abs(centers[0] + 5.0) < 0.2);
  CHECK(std::abs(centers[1] - 5.0) < 0.2);
  CHECK(m.converged);
}

TEST_CASE("EM log-likelihood is non-decreasing") {
  Rng rng(31);
  const Matrix z = vstack(gaussian_blob(300, {0.0, 0.0}, 1.0, rng),
                          gaussian_blob(300, {4.0, 4.0}, 1.5, rng));
  const GmmModel m = fit_gmm(z, 3, Rng(77));
  REQUIRE(m.loglik_history.size() >= 2);
  for (size_t i = 1; i < m.loglik_history.size(); ++i)
    CHECK(m.loglik_history[i] >= m.loglik_history[i - 1] - 1e-9);
}

TEST_CASE("e_step: single component, symmetry, and prior-only posteriors") {
  Rng rng(3);
  const Matrix z = gaussian_blob(50, {0.0}, 1.0, rng);
  GmmModel one = fit_gmm(z, 1, Rng(2));
  const Matrix g1 = e_step(z, one);
  for (size_t i = 0; i < z.rows(); ++i) CHECK(g1(i, 0) == 1.0);

  // Equidistant point between identical-shape equal-weight components.
  GmmModel two;
  two.k = 2;
  two.diag_cov = false;
  two.weights = {0.5, 0.5};
  two.means = {{-1.0}, {1.0}};
  two.covariances = {Matrix::identity(1), Matrix::identity(1)};
  Matrix mid(1, 1);
  mid(0, 0) = 0.0;
  const Matrix g2 = e_step(mid, two);
  CHECK(g2(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g2(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  // Equal densities, unequal priors: posterior equals the prior.
  two.weights = {0.9, 0.1};
  const Matrix g3 = e_step(mid, two);
  CHECK(g3(0, 0) == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(g3(0, 1) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("responsibility rows sum to 1") {
  Rng rng(12);
  const Matrix z = vstack(gaussian_blob(200, {0.0, 0.0}, 1.0, rng),
                          gaussian_blob(200, {3.0, -2.0}, 0.7, rng));
  const GmmModel m = fit_gmm(z, 4, Rng(5));
  const Matrix g = e_step(z, m);
  for (size_t i = 0; i < g.rows(); ++i) {
    double row = 0.0;
    for (size_t c = 0; c < g.cols(); ++c) {
      CHECK(g(i, c) >= 0.0);
      CHECK(g(i, c) <= 1.0);
      row += g(i, c);
    }
    CHECK(std::abs(row - 1.0) < 1e-9);
  }
}

TEST_CASE("weights equal responsibility mass over N exactly after an M-step") {
  Rng rng(17);
  const Matrix z = vstack(gaussian_blob(150, {0.0}, 1.0, rng),
                          gaussian_blob(350, {6.0}, 1.0, rng));
  const GmmModel m = fit_gmm(z, 2, Rng(9));
  const Matrix gamma = e_step(z, m);       // gammas the next M-step consumes
  const GmmModel next = em_iteration(z, m);
  for (int c = 0; c < 2; ++c) {
    double mass = 0.0;
    for (size_t i = 0; i < z.rows(); ++i)
      mass += gamma(i, static_cast<size_t>(c));
    // identical accumulation order makes this bitwise, not approximate
    CHECK(next.weights[static_cast<size_t>(c)] ==
          mass / static_cast<double>(z.rows()));
  }
}

TEST_CASE("parameter counts and BIC arithmetic") {
  CHECK(gmm_param_count(1, 1, false) == 2);
  CHECK(gmm_param_count(7, 16, false) == 1070);  // 6 + 112 + 7*136
  CHECK(gmm_param_count(2, 2, false) == 11);     // 1 + 4 + 6
  CHECK(gmm_param_count(3, 4, true) == 26);      // (3-1) + 2*3*4

  GmmModel m;
  m.k = 2;
  m.diag_cov = false;
  m.means = {{0.0, 0.0}, {1.0, 1.0}};
  m.log_likelihood = -350.0;
  CHECK(gmm_bic(m, 100) ==
        doctest::Approx(11.0 * std::log(100.0) + 700.0).epsilon(1e-12));

  GmmModel m1;
  m1.k = 1;
  m1.diag_cov = false;
  m1.means = {{0.0}};
  m1.log_likelihood = -42.0;
  CHECK(gmm_bic(m1, 50) ==
        doctest::Approx(2.0 * std::log(50.0) + 84.0).epsilon(1e-12));
}

TEST_CASE("select_k: one blob selects K*=1, ties resolve to the smallest K") {
  Rng rng(1);
  const Matrix z = gaussian_blob(2000, {0.0, 0.0, 0.0, 0.0}, 1.0, rng);
  const BicSweep sweep = select_k(z, 1, 4, 2, Rng(66));
  CHECK(sweep.selected_k == 1);
  for (size_t i = 1; i < sweep.candidates.size(); ++i)
    CHECK(sweep.candidates[i].k > sweep.candidates[i - 1].k);
}

TEST_CASE("select_k recovers three well-separated blobs") {
  const SynthSpec spec = [] {
    SynthSpec s;
    s.k_true = 3;
    s.d = 4;
    s.n = 2000;
    s.separation = 8.0;
    s.flip_rate = {0.0, 0.0, 0.0};
    s.positive_rate = {0.5, 0.5, 0.5};
    s.seed = 123;
    return s;
  }();
  const SynthResult data = generate(spec);
  const Matrix z = embeddings_matrix(data.dataset);
  const BicSweep sweep = select_k(z, 1, 6, 3, Rng(9));
  CHECK(sweep.selected_k == 3);
}

TEST_CASE("select_k validates the K range") {
  Rng rng(2);
  const Matrix z = gaussian_blob(10, {0.0}, 1.0, rng);
  CHECK_THROWS_AS(select_k(z, 1, 11, 1, Rng(0)), Error);
  CHECK_THROWS_AS(select_k(z, 0, 2, 1, Rng(0)), Error);
}

TEST_CASE("assign_cohorts: argmax with ties to the lowest index") {
  GmmModel m;
  m.k = 2;
  m.weights = {0.5, 0.5};
  m.means = {{-1.0}, {1.0}};
  m.covariances = {Matrix::identity(1), Matrix::identity(1)};
  m.log_likelihood = 0.0;
  BicSweep sweep;
  sweep.candidates.push_back({2, m, 0.0});
  sweep.selected_k = 2;

  Matrix z(3, 1);
  z(0, 0) = -2.0;  // closer to component 0
  z(1, 0) = 2.0;   // closer to component 1
  z(2, 0) = 0.0;   // exact tie -> lowest index
  const CohortAssignment a = assign_cohorts(z, sweep);
  CHECK(a.hard_labels[0] == 0);
  CHECK(a.hard_labels[1] == 1);
  CHECK(a.hard_labels[2] == 0);
  CHECK(a.k_star == 2);
  CHECK(a.responsibilities.rows() == 3);
}

TEST_CASE("degenerate fit raises after the one reseed") {
  // Two points, three components: some component must starve (d+1 = 2).
  Matrix z(3, 1);
  z(0, 0) = 0.0;
  z(1, 0) = 0.0;
  z(2, 0) = 100.0;
  CHECK_THROWS_AS(fit_gmm(z, 3, Rng(1)), Error);
}

TEST_CASE("dac_augment: shapes, one-hot placement, zero weight") {
  EmbeddingDataset ds;
  ds.d = 3;
  ds.schema.push_back({"gender", {"F", "M"}, true});
  ds.schema.push_back({"age", {"a", "b", "c", "d"}, true});
  Rng rng(3);
  for (size_t i = 0; i < 40; ++i) {
    SampleRecord rec;
    rec.id = "x" + std::to_string(i);
    rec.z = {rng.normal() * 2.0 + 1.0, rng.normal(), rng.normal() - 3.0};
    rec.y = static_cast<int>(i % 2);
    rec.attrs = {static_cast<int>(rng.below(2)),
                 static_cast<int>(rng.below(4))};
    ds.records.push_back(rec);
  }

  const Matrix aug = dac_augment(ds, {"gender", "age"}, 1.0);
  CHECK(aug.rows() == 40);
  CHECK(aug.cols() == 9);  // 3 + 2 + 4
  for (size_t i = 0; i < aug.rows(); ++i) {
    int nz_gender = 0, nz_age = 0;
    for (size_t j = 3; j < 5; ++j) nz_gender += aug(i, j) != 0.0;
    for (size_t j = 5; j < 9; ++j) nz_age += aug(i, j) != 0.0;
    CHECK(nz_gender == 1);
    CHECK(nz_age == 1);
  }
  // standardized embedding block: zero mean, unit variance per column
  for (size_t j = 0; j < 3; ++j) {
    double mean = 0.0, var = 0.0;
    for (size_t i = 0; i < aug.rows(); ++i) mean += aug(i, j);
    mean /= static_cast<double>(aug.rows());
    for (size_t i = 0; i < aug.rows(); ++i)
      var += (aug(i, j) - mean) * (aug(i, j) - mean);
    var /= static_cast<double>(aug.rows());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }

  const Matrix zero_w = dac_augment(ds, {"gender", "age"}, 0.0);
  for (size_t i = 0; i < zero_w.rows(); ++i) {
    for (size_t j = 0; j < 3; ++j) CHECK(zero_w(i, j) == aug(i, j));
    for (size_t j = 3; j < 9; ++j) CHECK(zero_w(i, j) == 0.0);
  }

  CHECK_THROWS_AS(dac_augment(ds, {"nope"}, 1.0), Error);
  ds.records[7].attrs[1] = -1;
  CHECK_THROWS_WITH_AS(dac_augment(ds, {"gender", "age"}, 1.0),
                       doctest::Contains("x7"), Error);
}

TEST_CASE("pca whitening keeps the requested variance") {
  Rng rng(44);
  // Strongly anisotropic data: one dominant direction.
  Matrix z(500, 3);
  for (size_t i = 0; i < 500; ++i) {
    const double t = rng.normal();
    z(i, 0) = 10.0 * t + 0.1 * rng.normal();
    z(i, 1) = -10.0 * t + 0.1 * rng.normal();
    z(i, 2) = 0.1 * rng.normal();
  }
  const PcaTransform pca = fit_pca(z, 0.95);
  CHECK(pca.scale.size() == 1);
  const Matrix projected = pca.apply(z);
  CHECK(projected.cols() == 1);
  double mean = 0.0, var = 0.0;
  for (size_t i = 0; i < projected.rows(); ++i) mean += projected(i, 0);
  mean /= static_cast<double>(projected.rows());
  for (size_t i = 0; i < projected.rows(); ++i)
    var += (projected(i, 0) - mean) * (projected(i, 0) - mean);
  var /= static_cast<double>(projected.rows());
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));  // whitened
}

TEST_CASE("diag_cov mode produces diagonal covariances") {
  Rng rng(10);
  const Matrix z = vstack(gaussian_blob(200, {0.0, 0.0}, 1.0, rng),
                          gaussian_blob(200, {5.0, 5.0}, 1.0, rng));
  EmConfig cfg;
  cfg.diag_cov = true;
  const GmmModel m = fit_gmm(z, 2, Rng(3), cfg);
  for (const Matrix& cov : m.covariances) {
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 0) == 0.0);
  }
}

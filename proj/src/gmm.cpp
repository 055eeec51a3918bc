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

#include "gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "errors.hpp"
#include "numerics.hpp"

namespace lhcf {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

// k-means++ style seeding: each new mean is a data point drawn with
// probability proportional to its squared distance to the chosen set.
std::vector<std::vector<double>> seed_means(const Matrix& z, int k, Rng& rng) {
  const size_t n = z.rows();
  std::vector<std::vector<double>> means;
  means.reserve(static_cast<size_t>(k));
  size_t first = rng.below(n);
  means.emplace_back(z.row(first).begin(), z.row(first).end());
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) d2[i] = sq_dist(z.row(i), means[0]);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    size_t pick;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);  // all residual distances zero (duplicate data)
    }
    means.emplace_back(z.row(pick).begin(), z.row(pick).end());
    for (size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq_dist(z.row(i), means.back()));
  }
  return means;
}

Matrix diagonal_only(Matrix m) {
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < m.cols(); ++j)
      if (i != j) m(i, j) = 0.0;
  return m;
}

struct EStepResult {
  Matrix gamma;                // N x K
  double log_likelihood = 0.0;
  std::vector<double> row_ll;  // per-sample mixture log-density
  std::vector<double> mass;    // responsibility mass per component
};

void m_step(const Matrix& z, const EStepResult& e, GmmModel& model);

EStepResult run_e_step(const Matrix& z, const std::vector<double>& weights,
                       const std::vector<std::vector<double>>& means,
                       const std::vector<Matrix>& covs) {
  const size_t n = z.rows();
  const size_t k = weights.size();
  std::vector<MvnDensity> comps;
  comps.reserve(k);
  std::vector<double> log_w(k);
  for (size_t c = 0; c < k; ++c) {
    comps.emplace_back(means[c], covs[c]);
    log_w[c] = std::log(weights[c]);
  }
  EStepResult out;
  out.gamma = Matrix(n, k);
  out.row_ll.resize(n);
  out.mass.assign(k, 0.0);
  std::vector<double> logp(k);
  for (size_t i = 0; i < n; ++i) {
    for (size_t c = 0; c < k; ++c)
      logp[c] = log_w[c] + comps[c].log_density(z.row(i));
    const double lse = log_sum_exp(logp);
    out.row_ll[i] = lse;
    out.log_likelihood += lse;
    for (size_t c = 0; c < k; ++c) {
      const double g = std::exp(logp[c] - lse);
      out.gamma(i, c) = g;
      out.mass[c] += g;
    }
  }
  return out;
}

void m_step(const Matrix& z, const EStepResult& e, GmmModel& model) {
  const size_t n = z.rows();
  const size_t d = z.cols();
  for (int c = 0; c < model.k; ++c) {
    const size_t ci = static_cast<size_t>(c);
    const double mass = e.mass[ci];
    model.weights[ci] = mass / static_cast<double>(n);
    std::vector<double>& mu = model.means[ci];
    std::fill(mu.begin(), mu.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      const double g = e.gamma(i, ci);
      for (size_t j = 0; j < d; ++j) mu[j] += g * z(i, j);
    }
    for (size_t j = 0; j < d; ++j) mu[j] /= mass;

    Matrix cov(d, d);
    std::vector<double> centered(d);
    for (size_t i = 0; i < n; ++i) {
      const double g = e.gamma(i, ci);
      for (size_t j = 0; j < d; ++j) centered[j] = z(i, j) - mu[j];
      if (model.diag_cov) {
        for (size_t j = 0; j < d; ++j)
          cov(j, j) += g * centered[j] * centered[j];
      } else {
        for (size_t a = 0; a < d; ++a)
          for (size_t b = a; b < d; ++b)
            cov(a, b) += g * centered[a] * centered[b];
      }
    }
    for (size_t a = 0; a < d; ++a)
      for (size_t b = a; b < d; ++b) {
        cov(a, b) /= mass;
        cov(b, a) = cov(a, b);
      }
    model.covariances[ci] = regularize_covariance(std::move(cov));
  }
}

}  // namespace

long long gmm_param_count(int k, size_t d, bool diag_cov) {
  const long long kk = k, dd = static_cast<long long>(d);
  if (diag_cov) return (kk - 1) + 2 * kk * dd;
  return (kk - 1) + kk * dd + kk * dd * (dd + 1) / 2;
}

double gmm_bic(const GmmModel& model, size_t n) {
  const size_t d = model.means.empty() ? 0 : model.means[0].size();
  const double p =
      static_cast<double>(gmm_param_count(model.k, d, model.diag_cov));
  return p * std::log(static_cast<double>(n)) - 2.0 * model.log_likelihood;
}

GmmModel fit_gmm(const Matrix& z, int k, Rng rng, const EmConfig& cfg) {
  const size_t n = z.rows();
  const size_t d = z.cols();
  if (k < 1) fail(ErrorCode::InvalidArgument, "fit_gmm: k must be >= 1");
  if (d < 1) fail(ErrorCode::InvalidArgument, "fit_gmm: d must be >= 1");
  if (n < static_cast<size_t>(k))
    fail(ErrorCode::InvalidArgument, "fit_gmm: need at least k samples");

  GmmModel model;
  model.k = k;
  model.diag_cov = cfg.diag_cov;
  model.means = seed_means(z, k, rng);
  Matrix global_cov = covariance(z, column_means(z));
  if (cfg.diag_cov) global_cov = diagonal_only(global_cov);
  global_cov = regularize_covariance(std::move(global_cov));
  model.covariances.assign(static_cast<size_t>(k), global_cov);
  model.weights.assign(static_cast<size_t>(k),
                       1.0 / static_cast<double>(k));

  bool reseeded = false;
  double prev_ll = -std::numeric_limits<double>::infinity();
  int m_steps = 0;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    EStepResult e = run_e_step(z, model.weights, model.means,
                               model.covariances);
    model.loglik_history.push_back(e.log_likelihood);

    // A collapsed component gets one fresh start at the worst-fit point.
    int weak = -1;
    for (int c = 0; c < k; ++c)
      if (e.mass[static_cast<size_t>(c)] < static_cast<double>(d) + 1.0) {
        weak = c;
        break;
      }
    if (weak >= 0) {
      if (reseeded)
        fail(ErrorCode::DegenerateComponent,
             "fit_gmm: component " + std::to_string(weak) +
                 " has responsibility mass below d+1");
      reseeded = true;
      size_t worst = 0;
      for (size_t i = 1; i < n; ++i)
        if (e.row_ll[i] < e.row_ll[worst]) worst = i;
      model.means[static_cast<size_t>(weak)]
          .assign(z.row(worst).begin(), z.row(worst).end());
      model.covariances[static_cast<size_t>(weak)] = global_cov;
      model.weights[static_cast<size_t>(weak)] =
          1.0 / static_cast<double>(k);
      double wsum = 0.0;
      for (double w : model.weights) wsum += w;
      for (double& w : model.weights) w /= wsum;
      prev_ll = -std::numeric_limits<double>::infinity();
      continue;
    }

    if (iter > 0 &&
        e.log_likelihood - prev_ll <=
            cfg.tol * (1.0 + std::abs(e.log_likelihood))) {
      model.converged = true;
      model.log_likelihood = e.log_likelihood;
      model.iterations = m_steps;
      model.bic = gmm_bic(model, n);
      return model;
    }
    prev_ll = e.log_likelihood;
    m_step(z, e, model);
    ++m_steps;
  }

  // Iteration budget exhausted: refresh the likelihood for the final x
  // parameters so model state and reported likelihood agree.
  EStepResult e = run_e_step(z, model.weights, model.means,
                             model.covariances);
  model.loglik_history.push_back(e.log_likelihood);
  model.log_likelihood = e.log_likelihood;
  model.iterations = m_steps;
  model.converged = false;
  model.bic = gmm_bic(model, n);
  return model;
}

Matrix e_step(const Matrix& z, const GmmModel& model) {
  return run_e_step(z, model.weights, model.means, model.covariances).gamma;
}

GmmModel em_iteration(const Matrix& z, const GmmModel& model) {
  GmmModel next = model;
  const EStepResult e =
      run_e_step(z, next.weights, next.means, next.covariances);
  m_step(z, e, next);
  next.log_likelihood = e.log_likelihood;
  next.loglik_history.push_back(e.log_likelihood);
  ++next.iterations;
  return next;
}

const GmmModel& BicSweep::selected_model() const {
  for (const auto& c : candidates)
    if (c.k == selected_k) return c.model;
  fail(ErrorCode::Internal, "BicSweep: selected model missing");
}

BicSweep select_k(const Matrix& z, int k_min, int k_max, int restarts, Rng rng,
                  const EmConfig& cfg) {
  const size_t n = z.rows();
  if (k_min < 1 || k_max < k_min || static_cast<size_t>(k_max) > n)
    fail(ErrorCode::InvalidArgument,
         "select_k: k range must lie within [1, N]");
  if (restarts < 1)
    fail(ErrorCode::InvalidArgument, "select_k: restarts must be >= 1");

  BicSweep sweep;
  std::optional<Error> last_degenerate;
  for (int k = k_min; k <= k_max; ++k) {
    std::optional<GmmModel> best;
    for (int r = 0; r < restarts; ++r) {
      const uint64_t stream =
          (static_cast<uint64_t>(k) << 20) | static_cast<uint64_t>(r);
      try {
        GmmModel m = fit_gmm(z, k, rng.derive(stream), cfg);
        if (!best || m.log_likelihood > best->log_likelihood)
          best = std::move(m);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateComponent) throw;
        last_degenerate = e;
      }
    }
    if (best) {
      const double bic = gmm_bic(*best, n);
      sweep.candidates.push_back({k, std::move(*best), bic});
    }
  }
  if (sweep.candidates.empty()) {
    if (last_degenerate) throw *last_degenerate;
    fail(ErrorCode::Internal, "select_k: no candidates");
  }
  const BicSweep::Candidate* chosen = &sweep.candidates.front();
  for (const auto& c : sweep.candidates)
    if (c.bic < chosen->bic) chosen = &c;
  sweep.selected_k = chosen->k;
  return sweep;
}

CohortAssignment assign_cohorts(const Matrix& z, const BicSweep& sweep) {
  CohortAssignment out;
  out.source_model = sweep.selected_model();
  out.k_star = out.source_model.k;
  out.responsibilities = e_step(z, out.source_model);
  out.hard_labels.resize(z.rows());
  for (size_t i = 0; i < z.rows(); ++i) {
    int arg = 0;
    for (int c = 1; c < out.k_star; ++c)
      if (out.responsibilities(i, static_cast<size_t>(c)) >
          out.responsibilities(i, static_cast<size_t>(arg)))
        arg = c;
    out.hard_labels[i] = arg;
  }
  return out;
}

Matrix dac_augment(const EmbeddingDataset& ds,
                   const std::vector<std::string>& attr_names, double weight) {
  std::vector<size_t> attr_idx;
  size_t extra = 0;
  for (const auto& name : attr_names) {
    auto idx = ds.attr_index(name);
    if (!idx)
      fail(ErrorCode::UnknownAttribute, "unknown attribute '" + name + "'");
    attr_idx.push_back(*idx);
    extra += ds.schema[*idx].values.size();
  }
  for (const auto& rec : ds.records)
    for (size_t a : attr_idx)
      if (rec.attrs[a] < 0)
        fail(ErrorCode::MissingAttribute,
             "record '" + rec.id + "' is missing attribute '" +
                 ds.schema[a].name + "'");

  const size_t n = ds.records.size();
  const size_t d = ds.d;
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& rec : ds.records)
    for (size_t j = 0; j < d; ++j) mean[j] += rec.z[j];
  for (size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  for (const auto& rec : ds.records)
    for (size_t j = 0; j < d; ++j) {
      const double c = rec.z[j] - mean[j];
      sd[j] += c * c;
    }
  for (size_t j = 0; j < d; ++j)
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));

  Matrix out(n, d + extra);
  for (size_t i = 0; i < n; ++i) {
    const auto& rec = ds.records[i];
    for (size_t j = 0; j < d; ++j) {
      const double c = rec.z[j] - mean[j];
      out(i, j) = sd[j] > 0.0 ? c / sd[j] : c;
    }
    size_t col = d;
    for (size_t a : attr_idx) {
      out(i, col + static_cast<size_t>(rec.attrs[a])) = weight;
      col += ds.schema[a].values.size();
    }
  }
  return out;
}

Matrix PcaTransform::apply(const Matrix& z) const {
  const size_t n = z.rows();
  const size_t d = mean.size();
  const size_t m = scale.size();
  if (z.cols() != d)
    fail(ErrorCode::Dimension, "pca: input dimension mismatch");
  Matrix out(n, m);
  std::vector<double> centered(d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) centered[j] = z(i, j) - mean[j];
    for (size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (size_t j = 0; j < d; ++j) s += centered[j] * components(j, c);
      out(i, c) = s * scale[c];
    }
  }
  return out;
}

PcaTransform fit_pca(const Matrix& z, double variance_to_keep) {
  if (!(variance_to_keep > 0.0) || variance_to_keep > 1.0)
    fail(ErrorCode::InvalidArgument, "pca: variance fraction must be in (0,1]");
  PcaTransform t;
  t.mean = column_means(z);
  const SymEigen eig = sym_eigen(covariance(z, t.mean));
  double total = 0.0;
  for (double v : eig.values) total += std::max(v, 0.0);
  if (total <= 0.0)
    fail(ErrorCode::InvalidArgument, "pca: input has zero variance");
  size_t keep = 0;
  double cum = 0.0;
  while (keep < eig.values.size() &&
         (keep == 0 || cum < variance_to_keep * total - 1e-15)) {
    cum += std::max(eig.values[keep], 0.0);
    ++keep;
  }
  const size_t d = z.cols();
  t.components = Matrix(d, keep);
  t.scale.resize(keep);
  for (size_t c = 0; c < keep; ++c) {
    for (size_t j = 0; j < d; ++j) t.components(j, c) = eig.vectors(j, c);
    const double lam = std::max(eig.values[c], 1e-12 * total);
    t.scale[c] = 1.0 / std::sqrt(lam);
  }
  return t;
}

}  // namespace lhcf

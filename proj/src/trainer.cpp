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

#include "trainer.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "metrics.hpp"

namespace lhcf {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

const char* fair_kind_name(FairKind k) {
  switch (k) {
    case FairKind::None: return "none";
    case FairKind::Worst: return "worst";
    default: return "gap";
  }
}

FairKind parse_fair_kind(const std::string& name) {
  if (name == "none") return FairKind::None;
  if (name == "worst") return FairKind::Worst;
  if (name == "gap") return FairKind::Gap;
  fail(ErrorCode::InvalidArgument, "unknown fairness loss '" + name + "'");
}

const char* arch_name(Arch a) {
  return a == Arch::Linear ? "linear" : "mlp";
}

Arch parse_arch(const std::string& name) {
  if (name == "linear") return Arch::Linear;
  if (name == "mlp") return Arch::Mlp;
  fail(ErrorCode::InvalidArgument, "unknown architecture '" + name + "'");
}

size_t ClassifierModel::param_count() const {
  if (arch == Arch::Linear) return d_in + 1;
  const size_t h = static_cast<size_t>(hidden);
  return h * d_in + 2 * h + 1;
}

double ClassifierModel::predict_one(std::span<const double> z) const {
  if (z.size() != d_in)
    fail(ErrorCode::Dimension, "predict: input dimension mismatch");
  if (arch == Arch::Linear) {
    double t = theta[d_in];
    for (size_t j = 0; j < d_in; ++j) t += theta[j] * z[j];
    return sigmoid(t);
  }
  const size_t h = static_cast<size_t>(hidden);
  const double* w1 = theta.data();
  const double* b1 = theta.data() + h * d_in;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  double t = b2;
  for (size_t u = 0; u < h; ++u) {
    double a = b1[u];
    for (size_t j = 0; j < d_in; ++j) a += w1[u * d_in + j] * z[j];
    t += w2[u] * std::tanh(a);
  }
  return sigmoid(t);
}

std::vector<double> ClassifierModel::predict(const Matrix& z) const {
  if (z.cols() != d_in)
    fail(ErrorCode::Dimension, "predict: input dimension mismatch");
  std::vector<double> p(z.rows());
  for (size_t i = 0; i < z.rows(); ++i) p[i] = predict_one(z.row(i));
  return p;
}

ClassifierModel make_model(Arch arch, size_t d_in, int hidden, Rng rng) {
  ClassifierModel m;
  m.arch = arch;
  m.d_in = d_in;
  m.hidden = arch == Arch::Mlp ? hidden : 0;
  m.theta.assign(m.param_count(), 0.0);
  if (arch == Arch::Mlp) {
    // Hidden layer needs symmetry breaking; output layer starts at zero.
    const size_t h = static_cast<size_t>(hidden);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    for (size_t i = 0; i < h * d_in; ++i) m.theta[i] = scale * rng.normal();
  }
  return m;
}

double clss_loss(int y, double p) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

namespace {

// Forward pass caching hidden activations, plus backprop of d(loss)/d(logit).
struct Forward {
  double p = 0.0;
  std::vector<double> hidden_act;
};

Forward forward(const ClassifierModel& m, std::span<const double> z) {
  Forward f;
  if (m.arch == Arch::Linear) {
    double t = m.theta[m.d_in];
    for (size_t j = 0; j < m.d_in; ++j) t += m.theta[j] * z[j];
    f.p = sigmoid(t);
    return f;
  }
  const size_t h = static_cast<size_t>(m.hidden);
  const double* w1 = m.theta.data();
  const double* b1 = m.theta.data() + h * m.d_in;
  const double* w2 = b1 + h;
  f.hidden_act.resize(h);
  double t = w2[h];  // b2
  for (size_t u = 0; u < h; ++u) {
    double a = b1[u];
    for (size_t j = 0; j < m.d_in; ++j) a += w1[u * m.d_in + j] * z[j];
    f.hidden_act[u] = std::tanh(a);
    t += w2[u] * f.hidden_act[u];
  }
  f.p = sigmoid(t);
  return f;
}

void accumulate_grad(const ClassifierModel& m, std::span<const double> z,
                     const Forward& f, double dlogit,
                     std::span<double> grad) {
  if (m.arch == Arch::Linear) {
    for (size_t j = 0; j < m.d_in; ++j) grad[j] += dlogit * z[j];
    grad[m.d_in] += dlogit;
    return;
  }
  const size_t h = static_cast<size_t>(m.hidden);
  const double* w2 = m.theta.data() + h * m.d_in + h;
  double* g_w1 = grad.data();
  double* g_b1 = grad.data() + h * m.d_in;
  double* g_w2 = g_b1 + h;
  for (size_t u = 0; u < h; ++u) {
    const double act = f.hidden_act[u];
    g_w2[u] += dlogit * act;
    const double da = dlogit * w2[u] * (1.0 - act * act);
    g_b1[u] += da;
    for (size_t j = 0; j < m.d_in; ++j) g_w1[u * m.d_in + j] += da * z[j];
  }
  g_w2[h] += dlogit;  // b2
}

int argmax_risk(const GroupRisks& r) {
  int best = -1;
  for (size_t g = 0; g < r.risk.size(); ++g)
    if (r.count[g] > 0 && (best < 0 || r.risk[g] > r.risk[static_cast<size_t>(best)]))
      best = static_cast<int>(g);
  return best;
}

int argmin_risk(const GroupRisks& r) {
  int best = -1;
  for (size_t g = 0; g < r.risk.size(); ++g)
    if (r.count[g] > 0 && (best < 0 || r.risk[g] < r.risk[static_cast<size_t>(best)]))
      best = static_cast<int>(g);
  return best;
}

}  // namespace

GroupRisks group_risks(const Matrix& x, std::span<const int> y,
                       std::span<const int> group, int n_groups,
                       std::span<const size_t> rows,
                       const ClassifierModel& model) {
  GroupRisks r;
  r.risk.assign(static_cast<size_t>(n_groups), 0.0);
  r.count.assign(static_cast<size_t>(n_groups), 0);
  for (size_t i : rows) {
    const int g = group[i];
    const double p = model.predict_one(x.row(i));
    r.risk[static_cast<size_t>(g)] += clss_loss(y[i], p);
    ++r.count[static_cast<size_t>(g)];
  }
  for (size_t g = 0; g < r.risk.size(); ++g)
    if (r.count[g] > 0) r.risk[g] /= static_cast<double>(r.count[g]);
  return r;
}

double fair_loss(const GroupRisks& risks, FairKind kind) {
  if (kind == FairKind::None) return 0.0;
  const int hi = argmax_risk(risks);
  if (hi < 0) fail(ErrorCode::NoGroups, "fair_loss: no non-empty group");
  if (kind == FairKind::Worst) return risks.risk[static_cast<size_t>(hi)];
  const int lo = argmin_risk(risks);
  return risks.risk[static_cast<size_t>(hi)] -
         risks.risk[static_cast<size_t>(lo)];
}

ObjectiveOut objective(const Matrix& x, std::span<const int> y,
                       std::span<const int> group, int n_groups,
                       std::span<const size_t> rows,
                       const ClassifierModel& model,
                       const FairnessConfig& cfg, bool want_grad) {
  if (rows.empty()) fail(ErrorCode::EmptyInput, "objective: empty batch");
  const bool fair_active = cfg.kind != FairKind::None && cfg.lambda != 0.0;
  const bool track_groups = cfg.kind != FairKind::None && n_groups > 0;

  ObjectiveOut out;
  const size_t n_params = model.param_count();
  if (want_grad) out.grad.assign(n_params, 0.0);
  if (track_groups) {
    out.risks.risk.assign(static_cast<size_t>(n_groups), 0.0);
    out.risks.count.assign(static_cast<size_t>(n_groups), 0);
  }

  // Per-group gradient sums for the fairness subgradient; the mean gradient
  // is accumulated separately in sample order so that the ERM path is
  // arithmetically identical whether or not groups are tracked.
  std::vector<std::vector<double>> group_grad;
  if (fair_active && want_grad)
    group_grad.assign(static_cast<size_t>(n_groups),
                      std::vector<double>(n_params, 0.0));

  double loss_sum = 0.0;
  std::vector<double> sample_grad(want_grad ? n_params : 0, 0.0);
  for (size_t i : rows) {
    const Forward f = forward(model, x.row(i));
    loss_sum += clss_loss(y[i], f.p);
    const double dlogit = f.p - static_cast<double>(y[i]);
    if (want_grad) accumulate_grad(model, x.row(i), f, dlogit, out.grad);
    if (track_groups) {
      const int g = group[i];
      if (g < 0)
        fail(ErrorCode::NoGroups, "objective: sample without group label");
      out.risks.risk[static_cast<size_t>(g)] += clss_loss(y[i], f.p);
      ++out.risks.count[static_cast<size_t>(g)];
      if (fair_active && want_grad) {
        std::fill(sample_grad.begin(), sample_grad.end(), 0.0);
        accumulate_grad(model, x.row(i), f, dlogit, sample_grad);
        auto& gg = group_grad[static_cast<size_t>(g)];
        for (size_t p = 0; p < n_params; ++p) gg[p] += sample_grad[p];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  out.mean_loss = loss_sum * inv_n;
  if (want_grad)
    for (double& g : out.grad) g *= inv_n;

  if (track_groups) {
    for (size_t g = 0; g < out.risks.risk.size(); ++g)
      if (out.risks.count[g] > 0)
        out.risks.risk[g] /= static_cast<double>(out.risks.count[g]);
    out.fair = fair_loss(out.risks, cfg.kind);
  }

  out.value = out.mean_loss;
  if (fair_active) {
    out.value += cfg.lambda * out.fair;
    if (want_grad) {
      const int hi = argmax_risk(out.risks);
      const double inv_hi =
          1.0 / static_cast<double>(out.risks.count[static_cast<size_t>(hi)]);
      for (size_t p = 0; p < n_params; ++p)
        out.grad[p] +=
            cfg.lambda * group_grad[static_cast<size_t>(hi)][p] * inv_hi;
      if (cfg.kind == FairKind::Gap) {
        const int lo = argmin_risk(out.risks);
        const double inv_lo = 1.0 / static_cast<double>(
                                        out.risks.count[static_cast<size_t>(lo)]);
        for (size_t p = 0; p < n_params; ++p)
          out.grad[p] -=
              cfg.lambda * group_grad[static_cast<size_t>(lo)][p] * inv_lo;
      }
    }
  }
  return out;
}

namespace {

// Stratified batches: every group's samples are spread across the batches as
// evenly as possible, so each batch sees every group whenever the group has
// at least as many samples as there are batches.
std::vector<std::vector<size_t>> make_batches(
    const std::vector<size_t>& rows, const std::vector<int>& group,
    int n_groups, int batch_size, Rng& rng) {
  const size_t n = rows.size();
  const size_t nb =
      (n + static_cast<size_t>(batch_size) - 1) / static_cast<size_t>(batch_size);
  std::vector<std::vector<size_t>> per_group(static_cast<size_t>(n_groups));
  for (size_t r : rows) {
    const int g = group.empty() ? 0 : std::max(group[r], 0);
    per_group[static_cast<size_t>(g)].push_back(r);
  }
  std::vector<std::vector<size_t>> batches(nb);
  for (auto& members : per_group) {
    for (size_t i = members.size(); i > 1; --i) {
      const size_t j = rng.below(i);
      std::swap(members[i - 1], members[j]);
    }
    const size_t base = members.size() / nb;
    const size_t rem = members.size() % nb;
    size_t pos = 0;
    for (size_t b = 0; b < nb; ++b) {
      const size_t take = base + (b < rem ? 1 : 0);
      for (size_t t = 0; t < take; ++t) batches[b].push_back(members[pos++]);
    }
  }
  return batches;
}

}  // namespace

TrainResult train(const EmbeddingDataset& ds, const GroupLabels* groups,
                  const FairnessConfig& cfg, const TrainHyper& hyper) {
  if (!ds.has_splits())
    fail(ErrorCode::InvalidArgument, "train: dataset has no splits");
  if (cfg.kind != FairKind::None && (groups == nullptr || groups->n_groups == 0))
    fail(ErrorCode::NoGroups,
         "train: fairness loss requires group labels");
  if (cfg.lambda < 0.0)
    fail(ErrorCode::InvalidArgument, "train: lambda must be >= 0");
  if (hyper.epochs < 1 || hyper.batch_size < 1 || !(hyper.lr > 0.0) ||
      hyper.patience < 0 ||
      (hyper.arch == Arch::Mlp && hyper.hidden < 1))
    fail(ErrorCode::InvalidArgument, "train: invalid hyperparameters");

  const std::vector<size_t> train_rows = ds.split_indices(Split::Train);
  const std::vector<size_t> val_rows = ds.split_indices(Split::Val);
  if (train_rows.empty() || val_rows.empty())
    fail(ErrorCode::TooFewSamples, "train: train/val splits must be non-empty");

  const Matrix x = embeddings_matrix(ds);
  std::vector<int> y(ds.records.size());
  for (size_t i = 0; i < ds.records.size(); ++i) y[i] = ds.records[i].y;

  std::vector<int> group_of;
  int n_groups = 0;
  if (groups != nullptr && groups->n_groups > 0) {
    group_of = groups->label;
    n_groups = groups->n_groups;
    for (size_t i : train_rows)
      if (group_of[i] < 0)
        fail(ErrorCode::NoGroups, "train: no group label for record '" +
                                      ds.records[i].id + "'");
  }

  Rng rng(hyper.seed);
  ClassifierModel model =
      make_model(hyper.arch, ds.d, hyper.hidden, rng.derive(1));
  Rng batch_rng = rng.derive(2);

  std::vector<double> velocity;
  if (hyper.momentum > 0.0) velocity.assign(model.param_count(), 0.0);

  std::vector<int> val_y;
  val_y.reserve(val_rows.size());
  for (size_t i : val_rows) val_y.push_back(y[i]);

  TrainResult out;
  TrainReport& rep = out.report;
  std::vector<double> best_theta = model.theta;
  double best_val = -1.0;
  int best_epoch = 0;
  int stale = 0;

  const int groups_for_batching = n_groups > 0 ? n_groups : 1;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto batches = make_batches(train_rows, group_of,
                                      groups_for_batching, hyper.batch_size,
                                      batch_rng);
    for (const auto& batch : batches) {
      if (batch.empty()) continue;
      ObjectiveOut obj =
          objective(x, y, group_of, n_groups, batch, model, cfg, true);
      if (hyper.momentum > 0.0) {
        for (size_t p = 0; p < model.theta.size(); ++p) {
          velocity[p] = hyper.momentum * velocity[p] + obj.grad[p];
          model.theta[p] -= hyper.lr * velocity[p];
        }
      } else {
        for (size_t p = 0; p < model.theta.size(); ++p)
          model.theta[p] -= hyper.lr * obj.grad[p];
      }
    }

    // Epoch diagnostics on the full train split plus validation AUC.
    ObjectiveOut full =
        objective(x, y, group_of, n_groups, train_rows, model, cfg, false);
    std::vector<double> val_p;
    val_p.reserve(val_rows.size());
    for (size_t i : val_rows) val_p.push_back(model.predict_one(x.row(i)));
    const double vauc = auc(val_p, val_y);

    rep.objective_value.push_back(full.value);
    rep.mean_clss.push_back(full.mean_loss);
    rep.fair.push_back(full.fair);
    rep.group_risk.push_back(full.risks.risk);
    rep.val_auc.push_back(vauc);

    if (vauc > best_val) {
      best_val = vauc;
      best_theta = model.theta;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale > hyper.patience) {
      break;
    }
  }

  rep.best_epoch = best_epoch;
  rep.best_val_auc = best_val;
  rep.epochs_run = static_cast<int>(rep.val_auc.size());
  model.theta = std::move(best_theta);
  out.model = std::move(model);
  return out;
}

}  // namespace lhcf

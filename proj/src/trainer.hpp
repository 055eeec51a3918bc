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
#include <string>
#include <vector>

#include "dataset.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lhcf {

enum class FairKind { None, Worst, Gap };
enum class Arch { Linear, Mlp };

const char* fair_kind_name(FairKind k);
FairKind parse_fair_kind(const std::string& name);
const char* arch_name(Arch a);
Arch parse_arch(const std::string& name);

struct FairnessConfig {
  FairKind kind = FairKind::None;
  double lambda = 0.0;
};

// Classifier head over frozen embeddings: logistic regression or a single
// tanh hidden layer, both ending in a sigmoid unit. Parameters live in one
// flat vector so gradient checks can treat the model generically.
//
// Layouts:
//   Linear: [w(d), b]
//   Mlp:    [W1(h x d, row-major), b1(h), w2(h), b2]
struct ClassifierModel {
  Arch arch = Arch::Linear;
  size_t d_in = 0;
  int hidden = 0;
  std::vector<double> theta;

  size_t param_count() const;
  double predict_one(std::span<const double> z) const;
  std::vector<double> predict(const Matrix& z) const;  // DimensionMismatch
};

ClassifierModel make_model(Arch arch, size_t d_in, int hidden, Rng rng);

// Binary cross-entropy with scores clamped to [1e-7, 1 - 1e-7].
double clss_loss(int y, double p);

struct GroupRisks {
  std::vector<double> risk;      // mean loss per group present
  std::vector<long long> count;  // batch members per group
};

// Mean classification loss per group over the given rows; groups with no
// members keep count 0 and are excluded from max/min selection.
GroupRisks group_risks(const Matrix& x, std::span<const int> y,
                       std::span<const int> group, int n_groups,
                       std::span<const size_t> rows,
                       const ClassifierModel& model);

// worst -> max_k R_k; gap -> max_k R_k - min_k R_k (0 with a single group).
double fair_loss(const GroupRisks& risks, FairKind kind);

struct ObjectiveOut {
  double value = 0.0;
  double mean_loss = 0.0;
  double fair = 0.0;
  std::vector<double> grad;
  GroupRisks risks;
};

// Mean loss + lambda * fairness loss and its (sub)gradient. The fairness
// term contributes the gradient of the arg-max group risk (minus the arg-min
// one for `gap`); ties resolve to the lowest group index. With kind == None
// or lambda == 0 the fairness path is skipped entirely so such runs are
// bit-identical to plain ERM.
ObjectiveOut objective(const Matrix& x, std::span<const int> y,
                       std::span<const int> group, int n_groups,
                       std::span<const size_t> rows,
                       const ClassifierModel& model,
                       const FairnessConfig& cfg, bool want_grad = true);

// Group labels a trainer run optimizes over; the trainer does not care
// whether they came from discovered cohorts or a visible partition.
struct GroupLabels {
  std::string source;
  int n_groups = 0;
  std::vector<std::string> names;
  std::vector<int> label;  // per dataset record, -1 = absent
};

struct TrainHyper {
  Arch arch = Arch::Linear;
  int hidden = 64;
  double lr = 0.05;
  double momentum = 0.0;
  int epochs = 100;
  int batch_size = 64;
  int patience = 10;
  uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> objective_value;  // full train split, per epoch
  std::vector<double> mean_clss;
  std::vector<double> fair;
  std::vector<std::vector<double>> group_risk;
  std::vector<double> val_auc;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  int epochs_run = 0;
};

struct TrainResult {
  ClassifierModel model;
  TrainReport report;
};

// Mini-batch SGD on the combined objective with group-stratified batches,
// early stopping and model selection on validation AUC. Deterministic for a
// given seed. `groups` may be null only when cfg.kind == None.
TrainResult train(const EmbeddingDataset& ds, const GroupLabels* groups,
                  const FairnessConfig& cfg, const TrainHyper& hyper);

}  // namespace lhcf

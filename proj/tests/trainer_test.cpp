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
#include <cmath>
#include <numeric>

#include "dataset.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "trainer.hpp"

using namespace lhcf;

namespace {

// Random batch with group labels; risks get a forced gap so the arg-max /
// arg-min groups are unique (ties are non-differentiable by construction).
struct FdCase {
  Matrix x;
  std::vector<int> y;
  std::vector<int> group;
  int n_groups;
  std::vector<size_t> rows;
};

FdCase make_case(size_t n, size_t d, int n_groups, Rng& rng) {
  FdCase c;
  c.x = Matrix(n, d);
  c.n_groups = n_groups;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) c.x(i, j) = rng.normal();
    c.y.push_back(static_cast<int>(rng.below(2)));
    c.group.push_back(static_cast<int>(i % static_cast<size_t>(n_groups)));
    c.rows.push_back(i);
  }
  return c;
}

ClassifierModel random_model(Arch arch, size_t d, Rng& rng) {
  ClassifierModel m = make_model(arch, d, 8, rng.derive(1));
  for (double& t : m.theta) t = 0.5 * rng.normal();
  return m;
}

bool risks_untied(const GroupRisks& risks, double margin) {
  std::vector<double> present;
  for (size_t g = 0; g < risks.risk.size(); ++g)
    if (risks.count[g] > 0) present.push_back(risks.risk[g]);
  std::sort(present.begin(), present.end());
  if (present.size() < 2) return true;
  return (present[1] - present[0]) > margin &&
         (present.back() - present[present.size() - 2]) > margin;
}

// Norm-relative error between the analytic gradient and central differences.
double fd_gradient_error(const FdCase& c, ClassifierModel model,
                         const FairnessConfig& cfg) {
  const ObjectiveOut base =
      objective(c.x, c.y, c.group, c.n_groups, c.rows, model, cfg, true);
  const double h = 1e-5;
  double num = 0.0, den = 0.0;
  for (size_t p = 0; p < model.theta.size(); ++p) {
    const double saved = model.theta[p];
    model.theta[p] = saved + h;
    const double up =
        objective(c.x, c.y, c.group, c.n_groups, c.rows, model, cfg, false)
            .value;
    model.theta[p] = saved - h;
    const double down =
        objective(c.x, c.y, c.group, c.n_groups, c.rows, model, cfg, false)
            .value;
    model.theta[p] = saved;
    const double fd = (up - down) / (2.0 * h);
    num += (fd - base.grad[p]) * (fd - base.grad[p]);
    den += std::max(fd * fd, base.grad[p] * base.grad[p]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

EmbeddingDataset separable_dataset(size_t n, uint64_t seed) {
  EmbeddingDataset ds;
  ds.d = 2;
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    SampleRecord rec;
    rec.id = "x" + std::to_string(i);
    const int y = static_cast<int>(i % 2);
    const double cx = y ? 2.0 : -2.0;
    rec.z = {cx + 0.5 * rng.normal(), cx + 0.5 * rng.normal()};
    rec.y = y;
    ds.records.push_back(rec);
  }
  return make_splits(ds, {0.7, 0.15, 0.15}, Rng(seed + 1));
}

}  // namespace

TEST_CASE("binary cross-entropy values") {
  CHECK(clss_loss(1, 1.0 - 1e-7) == doctest::Approx(1e-7).epsilon(1e-3));
  CHECK(clss_loss(1, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(clss_loss(0, 0.9) ==
        doctest::Approx(-std::log(0.1)).epsilon(1e-12));
  // clamping keeps the loss finite at the boundaries
  CHECK(std::isfinite(clss_loss(1, 0.0)));
  CHECK(std::isfinite(clss_loss(0, 1.0)));
}

TEST_CASE("predict: zero weights give 0.5, scaling saturates") {
  Rng rng(4);
  ClassifierModel m = make_model(Arch::Linear, 2, 0, rng);
  Matrix z(1, 2);
  z(0, 0) = 0.7;
  z(0, 1) = -0.3;
  CHECK(m.predict(z)[0] == 0.5);

  m.theta = {100.0, 100.0, 0.0};  // strong separator direction
  Matrix pos(1, 2), neg(1, 2);
  pos(0, 0) = 1.0;
  pos(0, 1) = 1.0;
  neg(0, 0) = -1.0;
  neg(0, 1) = -1.0;
  CHECK(m.predict(pos)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.predict(neg)[0] == doctest::Approx(0.0).epsilon(1e-12));

  Matrix bad(1, 3);
  CHECK_THROWS_AS(m.predict(bad), Error);
}

TEST_CASE("predict matches hand-computed sigmoid on a 2-d fixture") {
  ClassifierModel m;
  m.arch = Arch::Linear;
  m.d_in = 2;
  m.theta = {0.5, -1.25, 0.25};
  Matrix z(1, 2);
  z(0, 0) = 2.0;
  z(0, 1) = 1.0;
  // logit = 0.5*2 - 1.25*1 + 0.25 = 0
  CHECK(m.predict(z)[0] == doctest::Approx(0.5).epsilon(1e-15));
  z(0, 0) = 1.0;
  z(0, 1) = -1.0;
  // logit = 0.5 + 1.25 + 0.25 = 2
  CHECK(m.predict(z)[0] ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("group risks: single group, symmetry, arithmetic") {
  Rng rng(6);
  FdCase c = make_case(12, 3, 1, rng);
  const ClassifierModel m = random_model(Arch::Linear, 3, rng);
  const GroupRisks one = group_risks(c.x, c.y, c.group, 1, c.rows, m);
  double mean = 0.0;
  for (size_t i : c.rows) mean += clss_loss(c.y[i], m.predict_one(c.x.row(i)));
  mean /= static_cast<double>(c.rows.size());
  CHECK(one.risk[0] == doctest::Approx(mean).epsilon(1e-12));

  // Two groups with identical members have identical risks.
  FdCase c2 = c;
  c2.n_groups = 2;
  c2.x = Matrix(24, 3);
  c2.y.clear();
  c2.group.clear();
  c2.rows.clear();
  for (size_t i = 0; i < 24; ++i) {
    for (size_t j = 0; j < 3; ++j) c2.x(i, j) = c.x(i % 12, j);
    c2.y.push_back(c.y[i % 12]);
    c2.group.push_back(i < 12 ? 0 : 1);
    c2.rows.push_back(i);
  }
  const GroupRisks two = group_risks(c2.x, c2.y, c2.group, 2, c2.rows, m);
  CHECK(two.risk[0] == doctest::Approx(two.risk[1]).epsilon(1e-12));
}

TEST_CASE("group risks are per-group arithmetic means") {
  // Losses {1.0, 3.0} in group A and {2.0} in group B -> R = {2.0, 2.0}.
  // With w=1, b=0 the prediction equals sigmoid(z), so a y=1 sample placed
  // at z = logit(exp(-L)) produces exactly loss L.
  ClassifierModel m;
  m.arch = Arch::Linear;
  m.d_in = 1;
  m.theta = {1.0, 0.0};
  auto z_for_loss = [](double loss) {
    const double p = std::exp(-loss);
    return std::log(p / (1.0 - p));
  };
  Matrix x(3, 1);
  x(0, 0) = z_for_loss(1.0);
  x(1, 0) = z_for_loss(3.0);
  x(2, 0) = z_for_loss(2.0);
  const std::vector<int> y = {1, 1, 1};
  const std::vector<int> g = {0, 0, 1};
  const std::vector<size_t> rows = {0, 1, 2};
  const GroupRisks r = group_risks(x, y, g, 2, rows, m);
  CHECK(r.risk[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.risk[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.count[0] == 2);
  CHECK(r.count[1] == 1);
}

TEST_CASE("fair_loss worst and gap") {
  GroupRisks r;
  r.risk = {0.5};
  r.count = {3};
  CHECK(fair_loss(r, FairKind::Worst) == 0.5);
  CHECK(fair_loss(r, FairKind::Gap) == 0.0);

  r.risk = {0.3, 0.3, 0.3};
  r.count = {1, 1, 1};
  CHECK(fair_loss(r, FairKind::Worst) == 0.3);
  CHECK(fair_loss(r, FairKind::Gap) == 0.0);

  r.risk = {0.2, 0.8, 0.5};
  r.count = {2, 2, 2};
  CHECK(fair_loss(r, FairKind::Worst) == 0.8);
  CHECK(fair_loss(r, FairKind::Gap) == doctest::Approx(0.6).epsilon(1e-15));

  // empty groups are ignored
  r.risk = {0.2, 9.9, 0.5};
  r.count = {2, 0, 2};
  CHECK(fair_loss(r, FairKind::Worst) == 0.5);
}

TEST_CASE("objective: lambda 0 reduces to ERM; single group gap is mean loss") {
  Rng rng(14);
  FdCase c = make_case(20, 3, 2, rng);
  const ClassifierModel m = random_model(Arch::Linear, 3, rng);

  FairnessConfig none{FairKind::None, 0.0};
  FairnessConfig worst0{FairKind::Worst, 0.0};
  const ObjectiveOut a =
      objective(c.x, c.y, c.group, c.n_groups, c.rows, m, none, true);
  const ObjectiveOut b =
      objective(c.x, c.y, c.group, c.n_groups, c.rows, m, worst0, true);
  CHECK(a.value == b.value);  // bitwise
  for (size_t p = 0; p < a.grad.size(); ++p) CHECK(a.grad[p] == b.grad[p]);

  FdCase single = make_case(20, 3, 1, rng);
  FairnessConfig gap{FairKind::Gap, 1.0};
  const ObjectiveOut g =
      objective(single.x, single.y, single.group, 1, single.rows, m, gap,
                true);
  CHECK(g.value == doctest::Approx(g.mean_loss).epsilon(1e-15));
  CHECK(g.fair == 0.0);
}

TEST_CASE("objective value: two equal groups with worst loss") {
  Rng rng(25);
  FdCase c = make_case(16, 2, 2, rng);
  const ClassifierModel m = random_model(Arch::Linear, 2, rng);
  FairnessConfig cfg{FairKind::Worst, 1.0};
  const ObjectiveOut out =
      objective(c.x, c.y, c.group, 2, c.rows, m, cfg, false);
  const GroupRisks r = group_risks(c.x, c.y, c.group, 2, c.rows, m);
  CHECK(out.value == doctest::Approx(out.mean_loss +
                                     std::max(r.risk[0], r.risk[1]))
                         .epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(400);
  const std::vector<FairnessConfig> cfgs = {
      {FairKind::None, 0.0}, {FairKind::Worst, 1.0}, {FairKind::Gap, 0.7}};
  for (Arch arch : {Arch::Linear, Arch::Mlp}) {
    for (const auto& cfg : cfgs) {
      int tested = 0;
      while (tested < 12) {
        FdCase c = make_case(8 + rng.below(25), 4,
                             2 + static_cast<int>(rng.below(2)), rng);
        ClassifierModel m = random_model(arch, 4, rng);
        const ObjectiveOut out =
            objective(c.x, c.y, c.group, c.n_groups, c.rows, m, cfg, true);
        if (cfg.kind != FairKind::None && !risks_untied(out.risks, 1e-3))
          continue;  // skip near-ties, the subgradient is not unique there
        CHECK(fd_gradient_error(c, m, cfg) < 1e-4);
        ++tested;
      }
    }
  }
}

TEST_CASE("train: separable data reaches validation AUC >= 0.99") {
  const EmbeddingDataset ds = separable_dataset(300, 5);
  TrainHyper hyper;
  hyper.epochs = 50;
  hyper.lr = 0.5;
  hyper.seed = 11;
  const TrainResult r = train(ds, nullptr, {FairKind::None, 0.0}, hyper);
  CHECK(r.report.best_val_auc >= 0.99);
  CHECK(r.report.epochs_run <= 50);
}

TEST_CASE("train: lambda 0 and kind none give bit-identical trajectories") {
  const EmbeddingDataset ds = separable_dataset(120, 8);
  GroupLabels groups;
  groups.source = "halves";
  groups.n_groups = 2;
  groups.names = {"g0", "g1"};
  groups.label.resize(ds.records.size());
  for (size_t i = 0; i < ds.records.size(); ++i)
    groups.label[i] = static_cast<int>(i % 2);

  TrainHyper hyper;
  hyper.epochs = 12;
  hyper.seed = 21;
  const TrainResult a = train(ds, &groups, {FairKind::Worst, 0.0}, hyper);
  const TrainResult b = train(ds, &groups, {FairKind::None, 0.0}, hyper);
  REQUIRE(a.model.theta.size() == b.model.theta.size());
  for (size_t p = 0; p < a.model.theta.size(); ++p)
    CHECK(a.model.theta[p] == b.model.theta[p]);  // bitwise
  CHECK(a.report.val_auc == b.report.val_auc);
}

TEST_CASE("train: full-batch objective is non-increasing at small lr") {
  EmbeddingDataset ds = separable_dataset(200, 13);
  // standardize embeddings
  for (size_t j = 0; j < ds.d; ++j) {
    double mean = 0.0, var = 0.0;
    for (const auto& r : ds.records) mean += r.z[j];
    mean /= static_cast<double>(ds.records.size());
    for (const auto& r : ds.records)
      var += (r.z[j] - mean) * (r.z[j] - mean);
    var /= static_cast<double>(ds.records.size());
    for (auto& r : ds.records) r.z[j] = (r.z[j] - mean) / std::sqrt(var);
  }
  TrainHyper hyper;
  hyper.epochs = 100;
  hyper.lr = 1e-3;
  hyper.batch_size = 1 << 20;  // full batch
  hyper.patience = 1000;
  hyper.seed = 2;
  const TrainResult r = train(ds, nullptr, {FairKind::None, 0.0}, hyper);
  for (size_t e = 1; e < r.report.objective_value.size(); ++e)
    CHECK(r.report.objective_value[e] <=
          r.report.objective_value[e - 1] + 1e-12);
}

TEST_CASE("train is agnostic to the group-label source") {
  const EmbeddingDataset ds = separable_dataset(160, 3);
  GroupLabels a;
  a.source = "cohorts";
  a.n_groups = 3;
  a.names = {"cohort0", "cohort1", "cohort2"};
  a.label.resize(ds.records.size());
  for (size_t i = 0; i < ds.records.size(); ++i)
    a.label[i] = static_cast<int>(i % 3);
  GroupLabels b = a;
  b.source = "gender+age";  // same labels, different provenance
  b.names = {"F+young", "F+old", "M+young"};

  TrainHyper hyper;
  hyper.epochs = 10;
  hyper.seed = 77;
  const TrainResult ra = train(ds, &a, {FairKind::Gap, 0.5}, hyper);
  const TrainResult rb = train(ds, &b, {FairKind::Gap, 0.5}, hyper);
  for (size_t p = 0; p < ra.model.theta.size(); ++p)
    CHECK(ra.model.theta[p] == rb.model.theta[p]);
}

TEST_CASE("train requires groups for fairness losses") {
  const EmbeddingDataset ds = separable_dataset(60, 4);
  TrainHyper hyper;
  hyper.epochs = 2;
  CHECK_THROWS_AS(train(ds, nullptr, {FairKind::Worst, 1.0}, hyper), Error);
}

TEST_CASE("train reports per-epoch arrays of equal length") {
  const EmbeddingDataset ds = separable_dataset(100, 6);
  TrainHyper hyper;
  hyper.epochs = 7;
  hyper.patience = 100;
  const TrainResult r = train(ds, nullptr, {FairKind::None, 0.0}, hyper);
  CHECK(r.report.epochs_run == 7);
  CHECK(r.report.objective_value.size() == 7);
  CHECK(r.report.mean_clss.size() == 7);
  CHECK(r.report.fair.size() == 7);
  CHECK(r.report.val_auc.size() == 7);
  CHECK(r.report.group_risk.size() == 7);
}

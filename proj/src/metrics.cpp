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

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace lhcf {

double auc(std::span<const double> score, std::span<const int> label) {
  const size_t n = score.size();
  if (n == 0 || label.size() != n)
    fail(ErrorCode::InvalidArgument, "auc: empty or mismatched inputs");
  size_t n_pos = 0;
  for (int y : label) n_pos += y ? 1 : 0;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    fail(ErrorCode::SingleClass, "auc: needs both classes");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return score[a] < score[b]; });

  // Mid-ranks over tie blocks, then the rank-sum statistic.
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t t = i; t <= j; ++t)
      if (label[order[t]]) pos_rank_sum += mid;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double brier(std::span<const double> score, std::span<const int> label) {
  const size_t n = score.size();
  if (n == 0 || label.size() != n)
    fail(ErrorCode::EmptyInput, "brier: empty or mismatched inputs");
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double diff = score[i] - static_cast<double>(label[i]);
    s += diff * diff;
  }
  return s / static_cast<double>(n);
}

FairnessReport fairness_report(std::span<const double> score,
                               std::span<const int> label,
                               std::span<const int> group,
                               const std::vector<std::string>& group_names) {
  const size_t n = score.size();
  if (label.size() != n || group.size() != n)
    fail(ErrorCode::InvalidArgument, "fairness_report: length mismatch");

  FairnessReport rep;
  rep.overall_auc = auc(score, label);

  const int n_groups = static_cast<int>(group_names.size());
  for (int g = 0; g < n_groups; ++g) {
    std::vector<double> s;
    std::vector<int> y;
    for (size_t i = 0; i < n; ++i)
      if (group[i] == g) {
        s.push_back(score[i]);
        y.push_back(label[i]);
      }
    const auto& name = group_names[static_cast<size_t>(g)];
    if (s.empty()) {
      rep.exclusions.emplace_back(name, "empty");
      continue;
    }
    try {
      rep.per_group_auc.emplace_back(name, auc(s, y));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingleClass) throw;
      rep.exclusions.emplace_back(name, "single-class");
    }
  }

  if (rep.per_group_auc.empty()) {
    rep.min_auc = rep.overall_auc;
    rep.es_auc = rep.overall_auc;
    return rep;
  }
  double lo = rep.per_group_auc.front().second, hi = lo;
  double abs_dev_sum = 0.0;
  for (const auto& [name, a] : rep.per_group_auc) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    abs_dev_sum += std::abs(rep.overall_auc - a);
  }
  rep.min_auc = lo;
  rep.auc_gap = hi - lo;
  rep.es_auc = rep.overall_auc / (1.0 + abs_dev_sum);
  rep.mean_psd = abs_dev_sum /
                 static_cast<double>(rep.per_group_auc.size()) /
                 rep.overall_auc;
  rep.max_psd = rep.auc_gap / rep.overall_auc;
  return rep;
}

double average_purity(std::span<const int> cohort,
                      std::span<const int> group) {
  if (cohort.size() != group.size())
    fail(ErrorCode::InvalidArgument, "average_purity: length mismatch");
  int max_c = -1, max_g = -1;
  for (size_t i = 0; i < cohort.size(); ++i) {
    max_c = std::max(max_c, cohort[i]);
    max_g = std::max(max_g, group[i]);
  }
  if (max_c < 0 || max_g < 0)
    fail(ErrorCode::EmptyInput, "average_purity: no jointly labeled samples");

  const size_t kc = static_cast<size_t>(max_c) + 1;
  const size_t kg = static_cast<size_t>(max_g) + 1;
  std::vector<long long> joint(kc * kg, 0);
  long long total = 0;
  for (size_t i = 0; i < cohort.size(); ++i) {
    if (cohort[i] < 0 || group[i] < 0) continue;
    ++joint[static_cast<size_t>(cohort[i]) * kg +
            static_cast<size_t>(group[i])];
    ++total;
  }
  double ap = 0.0;
  for (size_t c = 0; c < kc; ++c) {
    long long majority = 0;
    for (size_t g = 0; g < kg; ++g)
      majority = std::max(majority, joint[c * kg + g]);
    ap += static_cast<double>(majority) / static_cast<double>(total);
  }
  return ap;
}

CohortQualityReport cohort_quality(
    std::span<const double> score, std::span<const int> label,
    std::span<const int> cohort, int n_cohorts,
    const std::vector<std::pair<std::string, std::vector<int>>>& partitions) {
  const size_t n = score.size();
  if (label.size() != n || cohort.size() != n)
    fail(ErrorCode::InvalidArgument, "cohort_quality: length mismatch");

  CohortQualityReport rep;
  rep.per_cohort.resize(static_cast<size_t>(n_cohorts));
  for (int c = 0; c < n_cohorts; ++c) {
    std::vector<double> s;
    std::vector<int> y;
    for (size_t i = 0; i < n; ++i)
      if (cohort[i] == c) {
        s.push_back(score[i]);
        y.push_back(label[i]);
      }
    CohortStats& st = rep.per_cohort[static_cast<size_t>(c)];
    st.count = static_cast<long long>(s.size());
    if (s.empty()) continue;
    st.brier = brier(s, y);
    double risk = 0.0;
    for (size_t i = 0; i < s.size(); ++i) {
      const double p = std::clamp(s[i], 1e-7, 1.0 - 1e-7);
      risk += y[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    st.risk = risk / static_cast<double>(s.size());
    try {
      st.auc = auc(s, y);
      st.has_auc = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingleClass) throw;
    }
  }
  for (const auto& [name, group] : partitions)
    rep.average_purity[name] = average_purity(cohort, group);
  return rep;
}

}  // namespace lhcf

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

#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace lhcf {

std::vector<std::vector<double>> simplex_means(int k, size_t d,
                                               double separation) {
  // Helmert coordinates of the K standard-basis vectors projected onto the
  // sum-zero hyperplane: a closed-form regular simplex in R^(K-1) with unit
  // pairwise side sqrt(2), scaled so all pairwise distances equal
  // `separation`.
  std::vector<std::vector<double>> means(
      static_cast<size_t>(k), std::vector<double>(d, 0.0));
  const double scale = separation / std::sqrt(2.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 1; j < k; ++j) {
      const double denom =
          std::sqrt(static_cast<double>(j) * (static_cast<double>(j) + 1.0));
      double coord = 0.0;
      if (i < j)
        coord = 1.0 / denom;
      else if (i == j)
        coord = -static_cast<double>(j) / denom;
      means[static_cast<size_t>(i)][static_cast<size_t>(j - 1)] =
          scale * coord;
    }
  }
  return means;
}

namespace {

void validate(const SynthSpec& spec) {
  if (spec.k_true < 1) fail(ErrorCode::InvalidSpec, "synth: k_true must be >= 1");
  if (spec.d < 1) fail(ErrorCode::InvalidSpec, "synth: d must be >= 1");
  if (spec.d + 1 < static_cast<size_t>(spec.k_true))
    fail(ErrorCode::InvalidSpec,
         "synth: simplex placement needs d >= k_true - 1");
  if (spec.n < 6)
    fail(ErrorCode::InvalidSpec, "synth: need at least 6 samples for splits");
  if (spec.flip_rate.size() != static_cast<size_t>(spec.k_true) ||
      spec.positive_rate.size() != static_cast<size_t>(spec.k_true))
    fail(ErrorCode::InvalidSpec,
         "synth: flip_rate and positive_rate need one entry per cohort");
  for (double f : spec.flip_rate)
    if (!(f >= 0.0) || !(f < 0.5))
      fail(ErrorCode::InvalidSpec, "synth: flip rates must lie in [0, 0.5)");
  for (double p : spec.positive_rate)
    if (!(p > 0.0) || !(p < 1.0))
      fail(ErrorCode::InvalidSpec,
           "synth: positive rates must lie in (0, 1)");
  if (!(spec.separation >= 0.0))
    fail(ErrorCode::InvalidSpec, "synth: separation must be >= 0");
  if (!spec.cohort_weights.empty()) {
    if (spec.cohort_weights.size() != static_cast<size_t>(spec.k_true))
      fail(ErrorCode::InvalidSpec,
           "synth: cohort_weights needs one entry per cohort");
    for (double w : spec.cohort_weights)
      if (!(w > 0.0))
        fail(ErrorCode::InvalidSpec, "synth: cohort weights must be > 0");
  }
  for (const auto& a : spec.attributes) {
    if (a.name.empty()) fail(ErrorCode::InvalidSpec, "synth: attribute without name");
    if (a.cardinality < 2)
      fail(ErrorCode::InvalidSpec,
           "synth: attribute '" + a.name + "' needs cardinality >= 2");
    if (!(a.alignment >= 0.0) || !(a.alignment <= 1.0))
      fail(ErrorCode::InvalidSpec,
           "synth: attribute '" + a.name + "' alignment must be in [0, 1]");
    if (a.alignment == 1.0 && a.cardinality > spec.k_true)
      fail(ErrorCode::InvalidSpec,
           "synth: alignment 1 requires cardinality <= k_true");
  }
}

std::string padded_id(size_t i) {
  std::string digits = std::to_string(i);
  return "s" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') +
         digits;
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const auto means = simplex_means(spec.k_true, spec.d, spec.separation);
  const size_t k = static_cast<size_t>(spec.k_true);

  SynthResult out;
  EmbeddingDataset& ds = out.dataset;
  ds.d = spec.d;
  for (const auto& a : spec.attributes) {
    AttributeSchema s;
    s.name = a.name;
    for (int v = 0; v < a.cardinality; ++v)
      s.values.push_back(a.name + "." + std::to_string(v));
    s.visible = true;
    ds.schema.push_back(std::move(s));
  }
  const bool emit_truth = spec.k_true >= 2;
  if (emit_truth) {
    AttributeSchema s;
    s.name = "__true_cohort";
    for (int c = 0; c < spec.k_true; ++c)
      s.values.push_back(std::to_string(c));
    s.visible = false;
    ds.schema.push_back(std::move(s));
  }

  std::vector<double> cum(k);
  {
    double total = 0.0;
    for (size_t c = 0; c < k; ++c)
      total += spec.cohort_weights.empty() ? 1.0 : spec.cohort_weights[c];
    double acc = 0.0;
    for (size_t c = 0; c < k; ++c) {
      acc += (spec.cohort_weights.empty() ? 1.0 : spec.cohort_weights[c]) /
             total;
      cum[c] = acc;
    }
    cum[k - 1] = 1.0;
  }

  ds.records.reserve(spec.n);
  out.true_cohort.reserve(spec.n);
  for (size_t i = 0; i < spec.n; ++i) {
    const double u = rng.uniform();
    size_t c = 0;
    while (c + 1 < k && u >= cum[c]) ++c;
    SampleRecord rec;
    rec.id = padded_id(i);
    rec.z.resize(spec.d);
    for (size_t j = 0; j < spec.d; ++j) rec.z[j] = means[c][j] + rng.normal();
    int y = rng.uniform() < spec.positive_rate[c] ? 1 : 0;
    if (rng.uniform() < spec.flip_rate[c]) y = 1 - y;
    rec.y = y;
    rec.attrs.assign(ds.schema.size(), -1);
    for (size_t a = 0; a < spec.attributes.size(); ++a) {
      const auto& attr = spec.attributes[a];
      const auto card = static_cast<uint64_t>(attr.cardinality);
      int value;
      if (rng.uniform() < attr.alignment)
        value = static_cast<int>(c % card);
      else
        value = static_cast<int>(rng.below(card));
      rec.attrs[a] = value;
    }
    if (emit_truth) rec.attrs.back() = static_cast<int>(c);
    ds.records.push_back(std::move(rec));
    out.true_cohort.push_back(static_cast<int>(c));
  }

  ds = make_splits(ds, spec.split_fractions, rng.derive(0x5EED));
  return out;
}

LemmaCheckResult lemma1_check(const std::vector<double>& risks,
                              const std::vector<long long>& counts) {
  const size_t k = risks.size();
  if (k == 0 || counts.size() != k)
    fail(ErrorCode::InvalidArgument,
         "lemma1_check: risks/counts must be non-empty and aligned");
  if (k > 20)
    fail(ErrorCode::TooManyClusters,
         "lemma1_check: exhaustive subset enumeration supports K <= 20");
  for (size_t i = 0; i < k; ++i) {
    if (!(risks[i] >= 0.0))
      fail(ErrorCode::InvalidArgument, "lemma1_check: risks must be >= 0");
    if (counts[i] < 1)
      fail(ErrorCode::InvalidArgument, "lemma1_check: counts must be >= 1");
  }

  LemmaCheckResult out;
  out.k = static_cast<int>(k);
  out.risks = risks;
  out.counts = counts;
  double worst_risk = risks[0];
  for (double r : risks) worst_risk = std::max(worst_risk, r);

  double max_violation = -std::numeric_limits<double>::infinity();
  const unsigned long long n_masks = (1ull << k) - 1ull;
  for (unsigned long long mask = 1; mask <= n_masks; ++mask) {
    double num = 0.0;
    double den = 0.0;
    for (size_t c = 0; c < k; ++c) {
      if (mask & (1ull << c)) {
        num += static_cast<double>(counts[c]) * risks[c];
        den += static_cast<double>(counts[c]);
      }
    }
    const double union_risk = num / den;
    const double violation = union_risk - worst_risk;
    if (violation > max_violation) {
      max_violation = violation;
      out.worst_union_risk = union_risk;
      out.worst_subset_mask = mask;
    }
  }
  out.subsets_checked = n_masks;
  out.max_violation = max_violation;
  out.holds = max_violation <= 1e-12;
  return out;
}

}  // namespace lhcf

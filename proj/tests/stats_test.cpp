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

#include "doctest.h"
#include "errors.hpp"
#include "rng.hpp"
#include "stats.hpp"

using namespace lhcf;

namespace {

ScoreTable monotone_table() {
  // k=3 methods, N=4 settings; A always best, B middle, C worst.
  ScoreTable t;
  t.methods = {"A", "B", "C"};
  t.settings = {"s1", "s2", "s3", "s4"};
  t.scores = Matrix(4, 3);
  for (size_t r = 0; r < 4; ++r) {
    t.scores(r, 0) = 0.9 - 0.01 * static_cast<double>(r);
    t.scores(r, 1) = 0.8 - 0.01 * static_cast<double>(r);
    t.scores(r, 2) = 0.7 - 0.01 * static_cast<double>(r);
  }
  t.higher_better = true;
  return t;
}

}  // namespace

TEST_CASE("chi-square quantiles against reference values") {
  CHECK(chi2_quantile(0.95, 1) == doctest::Approx(3.841458820694124).epsilon(1e-8));
  CHECK(chi2_quantile(0.95, 2) == doctest::Approx(5.991464547107979).epsilon(1e-8));
  CHECK(chi2_quantile(0.95, 5) == doctest::Approx(11.070497693516351).epsilon(1e-8));
  CHECK(chi2_quantile(0.99, 2) == doctest::Approx(9.21034037197618).epsilon(1e-8));
  // gamma_p vs the erf identity for df=1: P(chi2 <= x) = erf(sqrt(x/2))
  for (double x : {0.1, 0.5, 1.0, 2.5, 7.0}) {
    CHECK(gamma_p(0.5, x / 2.0) ==
          doctest::Approx(std::erf(std::sqrt(x / 2.0))).epsilon(1e-10));
  }
}

TEST_CASE("friedman on the monotone fixture: chi2 = 8, significant") {
  const RankResult r = friedman(monotone_table(), 0.05);
  CHECK(r.avg_rank[0] == 1.0);
  CHECK(r.avg_rank[1] == 2.0);
  CHECK(r.avg_rank[2] == 3.0);
  CHECK(r.statistic == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(r.critical == doctest::Approx(5.991464547107979).epsilon(1e-6));
  CHECK(r.significant);
  CHECK_FALSE(r.degenerate);
  CHECK(r.cd == doctest::Approx(2.343 * std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("friedman: fully tied table is degenerate, statistic 0") {
  ScoreTable t;
  t.methods = {"A", "B", "C"};
  t.settings = {"s1", "s2"};
  t.scores = Matrix(2, 3, 0.5);
  const RankResult r = friedman(t, 0.05);
  CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.degenerate);
  CHECK_FALSE(r.significant);
  for (double rank : r.avg_rank) CHECK(rank == 2.0);  // mid-rank (1+2+3)/3
}

TEST_CASE("direction reversal flips every rank row") {
  const ScoreTable hi = monotone_table();
  ScoreTable lo = hi;
  lo.higher_better = false;
  const RankResult rh = friedman(hi, 0.05);
  const RankResult rl = friedman(lo, 0.05);
  const double k = static_cast<double>(hi.methods.size());
  for (size_t row = 0; row < hi.settings.size(); ++row)
    for (size_t c = 0; c < hi.methods.size(); ++c)
      CHECK(rl.ranks(row, c) == doctest::Approx(k + 1.0 - rh.ranks(row, c)));
}

TEST_CASE("ranks per row sum to k(k+1)/2 regardless of ties") {
  Rng rng(15);
  for (int rep = 0; rep < 100; ++rep) {
    const size_t k = 2 + rng.below(7);
    const size_t n = 2 + rng.below(6);
    ScoreTable t;
    for (size_t c = 0; c < k; ++c) t.methods.push_back("m" + std::to_string(c));
    for (size_t r = 0; r < n; ++r) t.settings.push_back("s" + std::to_string(r));
    t.scores = Matrix(n, k);
    for (size_t r = 0; r < n; ++r)
      for (size_t c = 0; c < k; ++c)
        t.scores(r, c) = static_cast<double>(rng.below(4)) * 0.25;  // ties
    const RankResult res = friedman(t, 0.05);
    const double want = static_cast<double>(k * (k + 1)) / 2.0;
    for (size_t r = 0; r < n; ++r) {
      double sum = 0.0;
      for (size_t c = 0; c < k; ++c) sum += res.ranks(r, c);
      CHECK(sum == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("friedman is invariant under strictly monotone per-row transforms") {
  Rng rng(16);
  ScoreTable t;
  t.methods = {"a", "b", "c", "d"};
  t.settings = {"s1", "s2", "s3"};
  t.scores = Matrix(3, 4);
  for (size_t r = 0; r < 3; ++r)
    for (size_t c = 0; c < 4; ++c) t.scores(r, c) = rng.uniform();
  const RankResult base = friedman(t, 0.05);
  ScoreTable warped = t;
  for (size_t r = 0; r < 3; ++r)
    for (size_t c = 0; c < 4; ++c)
      warped.scores(r, c) = std::exp(2.0 * t.scores(r, c)) + r;  // per-row shift
  const RankResult after = friedman(warped, 0.05);
  CHECK(after.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
  for (size_t c = 0; c < 4; ++c)
    CHECK(after.avg_rank[c] == doctest::Approx(base.avg_rank[c]));
}

TEST_CASE("permuting method columns permutes ranks, statistic unchanged") {
  const ScoreTable t = monotone_table();
  ScoreTable perm = t;
  perm.methods = {"C", "A", "B"};
  for (size_t r = 0; r < t.settings.size(); ++r) {
    perm.scores(r, 0) = t.scores(r, 2);
    perm.scores(r, 1) = t.scores(r, 0);
    perm.scores(r, 2) = t.scores(r, 1);
  }
  const RankResult a = friedman(t, 0.05);
  const RankResult b = friedman(perm, 0.05);
  CHECK(b.statistic == doctest::Approx(a.statistic).epsilon(1e-12));
  CHECK(b.avg_rank[1] == a.avg_rank[0]);  // A
  CHECK(b.avg_rank[2] == a.avg_rank[1]);  // B
  CHECK(b.avg_rank[0] == a.avg_rank[2]);  // C
}

TEST_CASE("nemenyi critical difference table and formula") {
  CHECK(nemenyi_cd(2, 9, 0.05) ==
        doctest::Approx(1.960 * std::sqrt(1.0 / 9.0)).epsilon(1e-12));
  CHECK(nemenyi_cd(3, 4, 0.05) == doctest::Approx(1.6568).epsilon(1e-3));
  CHECK(nemenyi_cd(3, 4, 0.10) ==
        doctest::Approx(2.052 * std::sqrt(0.5)).epsilon(1e-12));
  // N -> infinity: CD -> 0
  CHECK(nemenyi_cd(5, 1000000, 0.05) < 1e-2);
  CHECK_THROWS_AS(nemenyi_cd(1, 4, 0.05), Error);
  CHECK_THROWS_AS(nemenyi_cd(21, 4, 0.05), Error);
  CHECK_THROWS_AS(nemenyi_cd(3, 4, 0.07), Error);
}

TEST_CASE("cd groups on the monotone fixture: A-B and B-C, never A-C") {
  const RankResult r = friedman(monotone_table(), 0.05);
  // |R_A - R_B| = 1 < 1.657, |R_B - R_C| = 1 < 1.657, |R_A - R_C| = 2 > CD
  REQUIRE(r.groups.size() == 2);
  CHECK(r.groups[0] == std::vector<int>{0, 1});
  CHECK(r.groups[1] == std::vector<int>{1, 2});
}

TEST_CASE("cd diagram bars reflect the group structure") {
  const RankResult r = friedman(monotone_table(), 0.05);
  const std::string svg = cd_diagram(r);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("CD = 1.657") != std::string::npos);
  CHECK(svg.find("A (1.00)") != std::string::npos);
  CHECK(svg.find("C (3.00)") != std::string::npos);
  // two group bars (stroke-width 4)
  size_t bars = 0, pos = 0;
  while ((pos = svg.find("stroke-width=\"4\"", pos)) != std::string::npos) {
    ++bars;
    pos += 1;
  }
  CHECK(bars == 2);

  // two far-apart methods: no bar
  ScoreTable t;
  t.methods = {"X", "Y"};
  t.settings = {"s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10"};
  t.scores = Matrix(10, 2);
  for (size_t r2 = 0; r2 < 10; ++r2) {
    t.scores(r2, 0) = 1.0;
    t.scores(r2, 1) = 0.0;
  }
  const RankResult two = friedman(t, 0.05);
  CHECK(two.groups.empty());  // |1 - 2| = 1 > CD = 1.96*sqrt(1/10) = 0.62
  const std::string svg2 = cd_diagram(two);
  CHECK(svg2.find("stroke-width=\"4\"") == std::string::npos);
}

TEST_CASE("svg output is byte-identical across runs") {
  const RankResult r = friedman(monotone_table(), 0.05);
  CHECK(cd_diagram(r) == cd_diagram(r));
  const RankResult r2 = friedman(monotone_table(), 0.05);
  CHECK(cd_diagram(r) == cd_diagram(r2));
}

TEST_CASE("friedman input validation") {
  ScoreTable t;
  t.methods = {"only"};
  t.settings = {"s1", "s2"};
  t.scores = Matrix(2, 1);
  CHECK_THROWS_AS(friedman(t, 0.05), Error);
}

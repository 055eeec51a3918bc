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

#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "errors.hpp"
#include "nemenyi_constants.hpp"

namespace lhcf {

namespace {

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  // Lentz's continued fraction for the upper tail.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    fail(ErrorCode::InvalidArgument, "gamma_p: domain error");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_quantile(double p, int df) {
  if (!(p > 0.0) || !(p < 1.0) || df < 1)
    fail(ErrorCode::InvalidArgument, "chi2_quantile: domain error");
  const double a = 0.5 * static_cast<double>(df);
  double lo = 0.0;
  double hi = static_cast<double>(df) + 10.0;
  while (gamma_p(a, 0.5 * hi) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-10 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, 0.5 * mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double nemenyi_cd(int k, int n_settings, double alpha) {
  if (k < kNemenyiMinK || k > kNemenyiMaxK)
    fail(ErrorCode::UnsupportedK,
         "nemenyi_cd: k must be within [2, 20], got " + std::to_string(k));
  if (n_settings < 1)
    fail(ErrorCode::InvalidArgument, "nemenyi_cd: need at least one setting");
  const double* table;
  if (alpha == 0.05)
    table = kNemenyiQ005;
  else if (alpha == 0.10)
    table = kNemenyiQ010;
  else
    fail(ErrorCode::InvalidArgument, "nemenyi_cd: alpha must be 0.05 or 0.10");
  const double q = table[k - kNemenyiMinK];
  const double kk = static_cast<double>(k);
  return q * std::sqrt(kk * (kk + 1.0) /
                       (6.0 * static_cast<double>(n_settings)));
}

RankResult friedman(const ScoreTable& table, double alpha) {
  const int k = static_cast<int>(table.methods.size());
  const int n = static_cast<int>(table.settings.size());
  if (k < 2 || n < 2)
    fail(ErrorCode::InvalidArgument,
         "friedman: need >= 2 methods and >= 2 settings");
  if (table.scores.rows() != static_cast<size_t>(n) ||
      table.scores.cols() != static_cast<size_t>(k))
    fail(ErrorCode::Dimension, "friedman: score matrix shape mismatch");

  RankResult out;
  out.methods = table.methods;
  out.alpha = alpha;
  out.n_settings = n;
  out.ranks = Matrix(static_cast<size_t>(n), static_cast<size_t>(k));
  out.avg_rank.assign(static_cast<size_t>(k), 0.0);

  bool all_tied = true;
  std::vector<size_t> order(static_cast<size_t>(k));
  for (int row = 0; row < n; ++row) {
    const size_t r = static_cast<size_t>(row);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return table.higher_better ? table.scores(r, a) > table.scores(r, b)
                                 : table.scores(r, a) < table.scores(r, b);
    });
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j + 1 < order.size() &&
             table.scores(r, order[j + 1]) == table.scores(r, order[i]))
        ++j;
      const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
      for (size_t t = i; t <= j; ++t) out.ranks(r, order[t]) = mid;
      i = j + 1;
    }
    if (table.scores(r, order.front()) != table.scores(r, order.back()))
      all_tied = false;
    for (size_t c = 0; c < static_cast<size_t>(k); ++c)
      out.avg_rank[c] += out.ranks(r, c);
  }
  for (double& v : out.avg_rank) v /= static_cast<double>(n);
  out.degenerate = all_tied;

  const double kk = static_cast<double>(k);
  double sum_r2 = 0.0;
  for (double v : out.avg_rank) sum_r2 += v * v;
  out.statistic = 12.0 * static_cast<double>(n) / (kk * (kk + 1.0)) *
                  (sum_r2 - kk * (kk + 1.0) * (kk + 1.0) / 4.0);
  out.critical = chi2_quantile(1.0 - alpha, k - 1);
  out.significant = !out.degenerate && out.statistic > out.critical;

  if (k >= kNemenyiMinK && k <= kNemenyiMaxK &&
      (alpha == 0.05 || alpha == 0.10)) {
    out.cd = nemenyi_cd(k, n, alpha);
    // Maximal rank-sorted runs whose span is strictly below the CD.
    std::vector<int> by_rank(static_cast<size_t>(k));
    std::iota(by_rank.begin(), by_rank.end(), 0);
    std::stable_sort(by_rank.begin(), by_rank.end(), [&](int a, int b) {
      return out.avg_rank[static_cast<size_t>(a)] <
             out.avg_rank[static_cast<size_t>(b)];
    });
    size_t prev_end = 0;
    for (size_t i = 0; i < by_rank.size(); ++i) {
      size_t j = i;
      while (j + 1 < by_rank.size() &&
             out.avg_rank[static_cast<size_t>(by_rank[j + 1])] -
                     out.avg_rank[static_cast<size_t>(by_rank[i])] <
                 out.cd)
        ++j;
      if (j > i && (out.groups.empty() || j + 1 > prev_end)) {
        std::vector<int> g(by_rank.begin() + static_cast<long>(i),
                           by_rank.begin() + static_cast<long>(j) + 1);
        out.groups.push_back(std::move(g));
        prev_end = j + 1;
      }
    }
  } else {
    out.cd = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string cd_diagram(const RankResult& result) {
  const int k = static_cast<int>(result.methods.size());
  const double width = 720.0;
  const double margin = 80.0;
  const double axis_y = 56.0;
  const double span = width - 2.0 * margin;
  auto x_of = [&](double rank) {
    return margin + (rank - 1.0) / (static_cast<double>(k) - 1.0) * span;
  };

  std::vector<int> by_rank(static_cast<size_t>(k));
  std::iota(by_rank.begin(), by_rank.end(), 0);
  std::stable_sort(by_rank.begin(), by_rank.end(), [&](int a, int b) {
    return result.avg_rank[static_cast<size_t>(a)] <
           result.avg_rank[static_cast<size_t>(b)];
  });

  const double bar_y0 = axis_y + 12.0;
  const double bar_step = 8.0;
  const double bars_end =
      bar_y0 + bar_step * static_cast<double>(result.groups.size());
  const int n_left = (k + 1) / 2;
  const double label_y0 = bars_end + 24.0;
  const double label_step = 18.0;
  const double height =
      label_y0 + label_step * static_cast<double>(std::max(n_left, k - n_left)) +
      8.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
         "\" height=\"" + fmt(height) + "\" font-family=\"Helvetica\" "
         "font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // CD ruler
  if (std::isfinite(result.cd)) {
    const double y = axis_y - 28.0;
    const double x0 = x_of(1.0);
    const double x1 = x_of(std::min(1.0 + result.cd,
                                    static_cast<double>(k)));
    svg += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
           fmt(x1) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (double xv : {x0, x1})
      svg += "<line x1=\"" + fmt(xv) + "\" y1=\"" + fmt(y - 4.0) +
             "\" x2=\"" + fmt(xv) + "\" y2=\"" + fmt(y + 4.0) +
             "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(0.5 * (x0 + x1)) + "\" y=\"" + fmt(y - 8.0) +
           "\" text-anchor=\"middle\">CD = " + fmt3(result.cd) + "</text>\n";
  }

  // Axis and integer ticks
  svg += "<line x1=\"" + fmt(x_of(1.0)) + "\" y1=\"" + fmt(axis_y) +
         "\" x2=\"" + fmt(x_of(static_cast<double>(k))) + "\" y2=\"" +
         fmt(axis_y) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  for (int r = 1; r <= k; ++r) {
    const double xv = x_of(static_cast<double>(r));
    svg += "<line x1=\"" + fmt(xv) + "\" y1=\"" + fmt(axis_y - 5.0) +
           "\" x2=\"" + fmt(xv) + "\" y2=\"" + fmt(axis_y) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(xv) + "\" y=\"" + fmt(axis_y - 10.0) +
           "\" text-anchor=\"middle\">" + std::to_string(r) + "</text>\n";
  }

  // Group bars
  for (size_t g = 0; g < result.groups.size(); ++g) {
    double lo = 1e300, hi = -1e300;
    for (int m : result.groups[g]) {
      lo = std::min(lo, result.avg_rank[static_cast<size_t>(m)]);
      hi = std::max(hi, result.avg_rank[static_cast<size_t>(m)]);
    }
    const double y = bar_y0 + bar_step * static_cast<double>(g);
    svg += "<line x1=\"" + fmt(x_of(lo) - 3.0) + "\" y1=\"" + fmt(y) +
           "\" x2=\"" + fmt(x_of(hi) + 3.0) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"black\" stroke-width=\"4\"/>\n";
  }

  // Method labels: best half on the left, rest on the right.
  for (int pos = 0; pos < k; ++pos) {
    const int m = by_rank[static_cast<size_t>(pos)];
    const double rank = result.avg_rank[static_cast<size_t>(m)];
    const double xm = x_of(rank);
    const bool left = pos < n_left;
    const int row = left ? pos : pos - n_left;
    const double yl = label_y0 + label_step * static_cast<double>(row);
    const double xl = left ? margin - 56.0 : width - margin + 56.0;
    svg += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" "
           "points=\"" +
           fmt(xm) + "," + fmt(axis_y) + " " + fmt(xm) + "," + fmt(yl - 4.0) +
           " " + fmt(xl) + "," + fmt(yl - 4.0) + "\"/>\n";
    svg += "<text x=\"" + fmt(left ? xl - 4.0 : xl + 4.0) + "\" y=\"" +
           fmt(yl) + "\" text-anchor=\"" + (left ? "end" : "start") + "\">" +
           xml_escape(result.methods[static_cast<size_t>(m)]) + " (" +
           fmt(rank) + ")</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace lhcf

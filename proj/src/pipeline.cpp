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

#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "jsonio.hpp"

namespace lhcf {

namespace fs = std::filesystem;
using nlohmann::json;

ClusterResult cluster_dataset(const EmbeddingDataset& ds,
                              const ClusterOptions& opt) {
  if (!ds.has_splits())
    fail(ErrorCode::InvalidArgument,
         "cluster: dataset has no train/val/test splits");

  Matrix input;
  ClusterResult out;
  out.preprocess = json::object();
  if (!opt.dac_attrs.empty()) {
    input = dac_augment(ds, opt.dac_attrs, opt.dac_weight);
    out.preprocess["kind"] = "dac";
    out.preprocess["attrs"] = opt.dac_attrs;
    out.preprocess["weight"] = opt.dac_weight;
  } else {
    input = embeddings_matrix(ds);
    out.preprocess["kind"] = "none";
  }

  const std::vector<size_t> train_rows = ds.split_indices(Split::Train);
  if (opt.pca_variance > 0.0) {
    Matrix train_view(train_rows.size(), input.cols());
    for (size_t r = 0; r < train_rows.size(); ++r)
      for (size_t c = 0; c < input.cols(); ++c)
        train_view(r, c) = input(train_rows[r], c);
    const PcaTransform pca = fit_pca(train_view, opt.pca_variance);
    input = pca.apply(input);
    out.preprocess["pca"] = {{"variance", opt.pca_variance},
                             {"components", pca.scale.size()}};
  }

  Matrix train_z(train_rows.size(), input.cols());
  for (size_t r = 0; r < train_rows.size(); ++r)
    for (size_t c = 0; c < input.cols(); ++c)
      train_z(r, c) = input(train_rows[r], c);

  EmConfig em;
  em.diag_cov = opt.diag_cov;
  em.tol = opt.tol;
  em.max_iter = opt.max_iter;
  const BicSweep sweep = select_k(train_z, opt.k_min, opt.k_max, opt.restarts,
                                  Rng(opt.seed), em);
  for (const auto& c : sweep.candidates)
    out.bic_table.push_back({c.k, c.bic, c.model.log_likelihood,
                             c.model.converged, c.model.iterations});

  const CohortAssignment assignment = assign_cohorts(input, sweep);
  out.k_star = assignment.k_star;
  out.labels = assignment.hard_labels;
  out.responsibilities = assignment.responsibilities;
  out.model = assignment.source_model;
  out.ids.reserve(ds.records.size());
  for (const auto& rec : ds.records) out.ids.push_back(rec.id);
  return out;
}

void save_cohorts(const ClusterResult& result, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["K_star"] = result.k_star;
  json table = json::array();
  for (const auto& row : result.bic_table)
    table.push_back({{"K", row.k},
                     {"bic", row.bic},
                     {"log_likelihood", row.log_likelihood},
                     {"converged", row.converged},
                     {"iterations", row.iterations}});
  j["bic_table"] = table;
  json labels = json::object();
  for (size_t i = 0; i < result.ids.size(); ++i)
    labels[result.ids[i]] = result.labels[i];
  j["hard_labels"] = labels;

  json model;
  model["pi"] = result.model.weights;
  model["mu"] = result.model.means;
  json sigmas = json::array();
  for (const auto& cov : result.model.covariances) {
    json rows = json::array();
    for (size_t r = 0; r < cov.rows(); ++r) {
      json row = json::array();
      for (size_t c = 0; c < cov.cols(); ++c) row.push_back(cov(r, c));
      rows.push_back(row);
    }
    sigmas.push_back(rows);
  }
  model["sigma"] = sigmas;
  model["diag_cov"] = result.model.diag_cov;
  model["log_likelihood"] = result.model.log_likelihood;
  j["model"] = model;
  j["preprocess"] = result.preprocess;
  save_json_file(path, j);
}

CohortFile load_cohorts(const std::string& path) {
  const json j = load_json_file(path);
  CohortFile out;
  if (!j.contains("K_star") || !j.contains("hard_labels"))
    fail(ErrorCode::Parse, path + ": needs 'K_star' and 'hard_labels'");
  out.k_star = j.at("K_star").get<int>();
  if (out.k_star < 1)
    fail(ErrorCode::Schema, path + ": K_star must be >= 1");
  for (auto it = j.at("hard_labels").begin(); it != j.at("hard_labels").end();
       ++it) {
    const int label = it.value().get<int>();
    if (label < 0 || label >= out.k_star)
      fail(ErrorCode::Schema, path + ": cohort label out of range for id '" +
                                  it.key() + "'");
    out.label_of[it.key()] = label;
  }
  if (out.label_of.empty())
    fail(ErrorCode::Schema, path + ": no cohort labels");
  return out;
}

GroupLabels resolve_groups(const EmbeddingDataset& ds,
                           const GroupSource& src) {
  if (src.cohorts && !src.visible_attrs.empty())
    fail(ErrorCode::InvalidArgument,
         "groups: cohorts and visible attributes are mutually exclusive");
  GroupLabels out;
  if (src.cohorts) {
    const CohortFile& file = *src.cohorts;
    out.source = "cohorts";
    out.n_groups = file.k_star;
    for (int c = 0; c < file.k_star; ++c)
      out.names.push_back("cohort" + std::to_string(c));
    out.label.assign(ds.records.size(), -1);
    for (size_t i = 0; i < ds.records.size(); ++i) {
      auto it = file.label_of.find(ds.records[i].id);
      if (it == file.label_of.end())
        fail(ErrorCode::Schema, "cohorts file has no label for id '" +
                                    ds.records[i].id + "'");
      out.label[i] = it->second;
    }
    return out;
  }
  if (!src.visible_attrs.empty()) {
    const VisibleCohortPartition part =
        intersect_attributes(ds, src.visible_attrs);
    out.source = part.name;
    out.n_groups = static_cast<int>(part.groups.size());
    out.label.assign(ds.records.size(), -1);
    for (size_t g = 0; g < part.groups.size(); ++g) {
      out.names.push_back(part.groups[g].first);
      for (size_t i : part.groups[g].second)
        out.label[i] = static_cast<int>(g);
    }
    return out;
  }
  out.source = "none";
  return out;
}

TrainStageResult train_stage(const EmbeddingDataset& ds,
                             const GroupSource& groups,
                             const TrainStageOptions& opt) {
  const GroupLabels labels = resolve_groups(ds, groups);
  const GroupLabels* ptr = labels.n_groups > 0 ? &labels : nullptr;
  TrainResult r = train(ds, ptr, opt.fair, opt.hyper);
  return {std::move(r.model), std::move(r.report)};
}

void save_model(const ClassifierModel& model, const TrainStageOptions& opt,
                const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["architecture"] = arch_name(model.arch);
  j["d_in"] = model.d_in;
  if (model.arch == Arch::Mlp) j["hidden"] = model.hidden;
  // Weight layout mirrors ClassifierModel::theta; keep the flat vector plus
  // the split offsets so other tools can slice it without guessing.
  j["theta"] = model.theta;
  j["training"] = {{"fair", fair_kind_name(opt.fair.kind)},
                   {"lambda", opt.fair.lambda},
                   {"lr", opt.hyper.lr},
                   {"momentum", opt.hyper.momentum},
                   {"epochs", opt.hyper.epochs},
                   {"batch_size", opt.hyper.batch_size},
                   {"patience", opt.hyper.patience},
                   {"seed", opt.hyper.seed}};
  save_json_file(path, j);
}

ClassifierModel load_model(const std::string& path) {
  const json j = load_json_file(path);
  ClassifierModel m;
  m.arch = parse_arch(j.at("architecture").get<std::string>());
  m.d_in = j.at("d_in").get<size_t>();
  m.hidden = m.arch == Arch::Mlp ? j.at("hidden").get<int>() : 0;
  m.theta = j.at("theta").get<std::vector<double>>();
  if (m.theta.size() != m.param_count())
    fail(ErrorCode::Schema, path + ": parameter vector has wrong length");
  return m;
}

json train_report_json(const TrainReport& report) {
  json j;
  j["objective"] = report.objective_value;
  j["mean_clss"] = report.mean_clss;
  j["fair"] = report.fair;
  j["group_risk"] = report.group_risk;
  j["val_auc"] = report.val_auc;
  j["best_epoch"] = report.best_epoch;
  j["best_val_auc"] = report.best_val_auc;
  j["epochs_run"] = report.epochs_run;
  return j;
}

json eval_stage(const EmbeddingDataset& ds, const ClassifierModel& model,
                const GroupSource& groups, Split split) {
  const std::vector<size_t> rows = ds.split_indices(split);
  if (rows.empty())
    fail(ErrorCode::TooFewSamples, "eval: selected split is empty");

  const Matrix x = embeddings_matrix(ds);
  std::vector<double> score;
  std::vector<int> label;
  score.reserve(rows.size());
  label.reserve(rows.size());
  for (size_t i : rows) {
    score.push_back(model.predict_one(x.row(i)));
    label.push_back(ds.records[i].y);
  }

  const GroupLabels g = resolve_groups(ds, groups);
  std::vector<int> group;
  group.reserve(rows.size());
  for (size_t i : rows)
    group.push_back(g.n_groups > 0 ? g.label[i] : -1);

  json j;
  j["format_version"] = 1;
  j["split"] = split_name(split);
  int n_pos = 0;
  for (int y : label) n_pos += y;
  j["overall"] = {{"auc", auc(score, label)},
                  {"brier", brier(score, label)},
                  {"n", rows.size()},
                  {"n_pos", n_pos}};

  if (g.n_groups > 0) {
    const FairnessReport rep = fairness_report(score, label, group, g.names);
    j["grouping"] = {{"kind", groups.cohorts ? "cohorts" : "visible"},
                     {"name", g.source},
                     {"n_groups", g.n_groups}};
    std::vector<size_t> g_count(static_cast<size_t>(g.n_groups), 0);
    std::vector<int> g_pos(static_cast<size_t>(g.n_groups), 0);
    for (size_t t = 0; t < group.size(); ++t)
      if (group[t] >= 0) {
        ++g_count[static_cast<size_t>(group[t])];
        g_pos[static_cast<size_t>(group[t])] += label[t];
      }
    std::map<std::string, size_t> name_index;
    for (size_t i = 0; i < g.names.size(); ++i) name_index[g.names[i]] = i;
    json per_group = json::object();
    for (const auto& [name, a] : rep.per_group_auc) {
      const size_t gi = name_index.at(name);
      per_group[name] = {{"auc", a}, {"n", g_count[gi]}, {"n_pos", g_pos[gi]}};
    }
    j["per_group"] = per_group;
    json exclusions = json::array();
    for (const auto& [name, reason] : rep.exclusions)
      exclusions.push_back({{"group", name}, {"reason", reason}});
    j["exclusions"] = exclusions;
    j["fairness"] = {{"min_auc", rep.min_auc},
                     {"auc_gap", rep.auc_gap},
                     {"es_auc", rep.es_auc},
                     {"mean_psd", rep.mean_psd},
                     {"max_psd", rep.max_psd}};
  }

  if (groups.cohorts) {
    std::vector<std::pair<std::string, std::vector<int>>> partitions;
    for (const auto& attr : ds.schema) {
      if (!attr.visible) continue;
      const GroupLabels pl =
          resolve_groups(ds, GroupSource{std::nullopt, {attr.name}});
      std::vector<int> per_row;
      per_row.reserve(rows.size());
      for (size_t i : rows) per_row.push_back(pl.label[i]);
      partitions.emplace_back(attr.name, std::move(per_row));
    }
    const CohortQualityReport q =
        cohort_quality(score, label, group, g.n_groups, partitions);
    json per_cohort = json::object();
    for (size_t c = 0; c < q.per_cohort.size(); ++c) {
      const CohortStats& st = q.per_cohort[c];
      json e = {{"count", st.count}};
      if (st.count > 0) {
        e["risk"] = st.risk;
        e["brier"] = st.brier;
        if (st.has_auc)
          e["auc"] = st.auc;
        else
          e["auc"] = nullptr;  // single-class cohort
      }
      per_cohort[std::to_string(c)] = e;
    }
    json quality;
    quality["per_cohort"] = per_cohort;
    quality["average_purity"] = q.average_purity;
    j["cohort_quality"] = quality;
  }
  return j;
}

ScoreTable load_score_tsv(const std::string& path, bool higher_better) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  ScoreTable t;
  t.higher_better = higher_better;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t pos = line.find('\t', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    const std::string where = path + ":" + std::to_string(line_no);
    if (line_no == 1) {
      if (fields.size() < 3)
        fail(ErrorCode::Parse, where + ": need >= 2 method columns");
      t.methods.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != t.methods.size() + 1)
      fail(ErrorCode::Parse, where + ": wrong number of columns");
    t.settings.push_back(fields[0]);
    std::vector<double> row;
    for (size_t c = 1; c < fields.size(); ++c)
      row.push_back(parse_double(fields[c], where));
    rows.push_back(std::move(row));
  }
  if (t.methods.empty() || rows.empty())
    fail(ErrorCode::Parse, path + ": empty score table");
  t.scores = Matrix(rows.size(), t.methods.size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < t.methods.size(); ++c) t.scores(r, c) = rows[r][c];
  return t;
}

ScoreTable score_table_from_reports(const std::string& dir,
                                    const std::string& metric,
                                    bool higher_better) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir))
    fail(ErrorCode::Io, dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::set<std::string> method_set, setting_set;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& f : files) {
    const json j = load_json_file(f.string());
    if (!j.contains("setting") || !j.contains("method")) continue;
    const std::string setting = j.at("setting").get<std::string>();
    const std::string method = j.at("method").get<std::string>();
    method_set.insert(method);
    setting_set.insert(setting);
    cell[{setting, method}] = report_metric(j, metric);
  }
  if (method_set.size() < 2 || setting_set.size() < 2)
    fail(ErrorCode::InvalidArgument,
         dir + ": need reports covering >= 2 methods and >= 2 settings");

  ScoreTable t;
  t.higher_better = higher_better;
  t.methods.assign(method_set.begin(), method_set.end());
  for (const auto& s : setting_set) t.settings.push_back(s);
  t.scores = Matrix(t.settings.size(), t.methods.size());
  for (size_t r = 0; r < t.settings.size(); ++r)
    for (size_t c = 0; c < t.methods.size(); ++c) {
      auto it = cell.find({t.settings[r], t.methods[c]});
      if (it == cell.end())
        fail(ErrorCode::Schema, "missing report for setting '" +
                                    t.settings[r] + "', method '" +
                                    t.methods[c] + "'");
      t.scores(r, c) = it->second;
    }
  return t;
}

json rank_result_json(const RankResult& r) {
  json j;
  j["methods"] = r.methods;
  j["avg_rank"] = r.avg_rank;
  j["friedman_statistic"] = r.statistic;
  j["critical_value"] = r.critical;
  j["significant"] = r.significant;
  j["degenerate"] = r.degenerate;
  j["alpha"] = r.alpha;
  if (std::isfinite(r.cd)) j["cd"] = r.cd;
  j["n_settings"] = r.n_settings;
  json groups = json::array();
  for (const auto& g : r.groups) {
    json names = json::array();
    for (int m : g) names.push_back(r.methods[static_cast<size_t>(m)]);
    groups.push_back(names);
  }
  j["groups"] = groups;
  return j;
}

SynthSpec parse_synth_spec(const json& j) {
  SynthSpec spec;
  spec.k_true = j.at("k_true").get<int>();
  spec.d = j.at("d").get<size_t>();
  spec.n = j.at("n").get<size_t>();
  spec.separation = j.value("separation", 6.0);
  auto per_cohort = [&](const char* key,
                        double fallback) -> std::vector<double> {
    if (!j.contains(key))
      return std::vector<double>(static_cast<size_t>(spec.k_true), fallback);
    const json& v = j.at(key);
    if (v.is_number())
      return std::vector<double>(static_cast<size_t>(spec.k_true),
                                 v.get<double>());
    return v.get<std::vector<double>>();
  };
  spec.flip_rate = per_cohort("flip_rate", 0.0);
  spec.positive_rate = per_cohort("positive_rate", 0.5);
  if (j.contains("cohort_weights"))
    spec.cohort_weights = j.at("cohort_weights").get<std::vector<double>>();
  if (j.contains("attributes")) {
    for (const auto& a : j.at("attributes")) {
      SynthAttribute attr;
      attr.name = a.at("name").get<std::string>();
      attr.cardinality = a.at("cardinality").get<int>();
      attr.alignment = a.value("alignment", 0.0);
      spec.attributes.push_back(std::move(attr));
    }
  }
  spec.seed = j.value("seed", 0ull);
  if (j.contains("split_fractions")) {
    const auto f = j.at("split_fractions").get<std::vector<double>>();
    if (f.size() != 3)
      fail(ErrorCode::InvalidSpec, "split_fractions needs 3 entries");
    spec.split_fractions = {f[0], f[1], f[2]};
  }
  return spec;
}

json lemma_result_json(const LemmaCheckResult& r) {
  json j;
  j["K"] = r.k;
  j["risks"] = r.risks;
  j["counts"] = r.counts;
  j["max_violation"] = r.max_violation;
  j["worst_union_risk"] = r.worst_union_risk;
  j["worst_subset_mask"] = r.worst_subset_mask;
  j["subsets_checked"] = r.subsets_checked;
  j["holds"] = r.holds;
  return j;
}

LemmaCheckResult lemma_check_from_json(const json& risks_json) {
  const auto risks = risks_json.at("risks").get<std::vector<double>>();
  const auto counts = risks_json.at("counts").get<std::vector<long long>>();
  return lemma1_check(risks, counts);
}

LemmaCheckResult lemma_check_from_eval(const json& report) {
  if (!report.contains("cohort_quality"))
    fail(ErrorCode::Schema,
         "lemma-check: report has no cohort_quality block (evaluate with "
         "--groups)");
  const json& per = report.at("cohort_quality").at("per_cohort");
  std::vector<double> risks;
  std::vector<long long> counts;
  for (size_t c = 0; c < per.size(); ++c) {
    const json& e = per.at(std::to_string(c));
    const long long count = e.at("count").get<long long>();
    if (count < 1) continue;  // empty cohorts carry no risk estimate
    risks.push_back(e.at("risk").get<double>());
    counts.push_back(count);
  }
  return lemma1_check(risks, counts);
}

double report_metric(const json& report, const std::string& metric) {
  if (metric == "overall_auc") return report.at("overall").at("auc");
  if (metric == "min_auc" || metric == "auc_gap" || metric == "es_auc" ||
      metric == "mean_psd" || metric == "max_psd")
    return report.at("fairness").at(metric);
  fail(ErrorCode::InvalidArgument, "unknown metric '" + metric + "'");
}

bool metric_higher_better(const std::string& metric) {
  return metric == "overall_auc" || metric == "min_auc" || metric == "es_auc";
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> metrics = {
      "overall_auc", "min_auc", "es_auc", "auc_gap", "mean_psd", "max_psd"};
  return metrics;
}

}  // namespace lhcf

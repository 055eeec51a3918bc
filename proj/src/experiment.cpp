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

#include "experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "errors.hpp"
#include "jsonio.hpp"
#include "pipeline.hpp"
#include "runmeta.hpp"

namespace lhcf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MethodSpec {
  std::string label;
  std::string grouping;  // none | classic | lhcf | dac
  FairKind kind = FairKind::None;
  double lambda = 0.0;
};

struct ExperimentConfig {
  json synth_spec;        // null when manifest-based
  std::string manifest;   // empty when synth-based
  std::vector<uint64_t> seeds;
  std::vector<MethodSpec> methods;
  std::vector<std::vector<std::string>> partitions;
  std::vector<std::string> classic_attrs;
  std::vector<std::string> dac_attrs;
  double dac_weight = 1.0;
  ClusterOptions cluster;
  TrainHyper hyper;
  Split eval_split = Split::Test;
};

MethodSpec parse_method(const std::string& name, double lambda,
                        bool label_lambda) {
  MethodSpec m;
  m.label = name;
  if (name == "erm") {
    m.grouping = "none";
    return m;
  }
  const size_t dash = name.rfind('-');
  if (dash == std::string::npos)
    fail(ErrorCode::InvalidSpec, "experiment: unknown method '" + name + "'");
  const std::string head = name.substr(0, dash);
  const std::string tail = name.substr(dash + 1);
  if (head != "classic" && head != "lhcf" && head != "dac")
    fail(ErrorCode::InvalidSpec, "experiment: unknown method '" + name + "'");
  m.grouping = head;
  m.kind = parse_fair_kind(tail);
  m.lambda = lambda;
  if (label_lambda) m.label += "@l" + format_double(lambda);
  return m;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("synth"))
    cfg.synth_spec = j.at("synth");
  else if (j.contains("manifest"))
    cfg.manifest = j.at("manifest").get<std::string>();
  else
    fail(ErrorCode::InvalidSpec,
         "experiment: config needs 'synth' or 'manifest'");

  for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<uint64_t>());
  if (cfg.seeds.empty())
    fail(ErrorCode::InvalidSpec, "experiment: need at least one seed");

  std::vector<double> lambdas = {1.0};
  if (j.contains("lambdas")) lambdas = j.at("lambdas").get<std::vector<double>>();
  if (lambdas.empty())
    fail(ErrorCode::InvalidSpec, "experiment: empty lambda grid");
  const bool label_lambda = lambdas.size() > 1;
  for (const auto& name : j.at("methods")) {
    const std::string n = name.get<std::string>();
    if (n == "erm") {
      cfg.methods.push_back(parse_method(n, 0.0, false));
      continue;
    }
    for (double l : lambdas)
      cfg.methods.push_back(parse_method(n, l, label_lambda));
  }
  if (cfg.methods.empty())
    fail(ErrorCode::InvalidSpec, "experiment: empty method grid");

  if (!j.contains("visible_partitions"))
    fail(ErrorCode::InvalidSpec, "experiment: needs 'visible_partitions'");
  for (const auto& p : j.at("visible_partitions"))
    cfg.partitions.push_back(p.get<std::vector<std::string>>());
  if (cfg.partitions.empty())
    fail(ErrorCode::InvalidSpec, "experiment: empty partition list");

  if (j.contains("classic_attrs"))
    cfg.classic_attrs = j.at("classic_attrs").get<std::vector<std::string>>();
  else
    cfg.classic_attrs = cfg.partitions.back();
  if (j.contains("dac")) {
    cfg.dac_attrs = j.at("dac").at("attrs").get<std::vector<std::string>>();
    cfg.dac_weight = j.at("dac").value("weight", 1.0);
  }

  if (j.contains("cluster")) {
    const json& c = j.at("cluster");
    cfg.cluster.k_min = c.value("k_min", cfg.cluster.k_min);
    cfg.cluster.k_max = c.value("k_max", cfg.cluster.k_max);
    cfg.cluster.restarts = c.value("restarts", cfg.cluster.restarts);
    cfg.cluster.diag_cov = c.value("diag_cov", cfg.cluster.diag_cov);
    cfg.cluster.pca_variance = c.value("pca", cfg.cluster.pca_variance);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    cfg.hyper.arch = parse_arch(t.value("arch", std::string("linear")));
    cfg.hyper.hidden = t.value("hidden", cfg.hyper.hidden);
    cfg.hyper.lr = t.value("lr", cfg.hyper.lr);
    cfg.hyper.momentum = t.value("momentum", cfg.hyper.momentum);
    cfg.hyper.epochs = t.value("epochs", cfg.hyper.epochs);
    cfg.hyper.batch_size = t.value("batch", cfg.hyper.batch_size);
    cfg.hyper.patience = t.value("patience", cfg.hyper.patience);
  }
  if (j.contains("eval_split"))
    cfg.eval_split = parse_split(j.at("eval_split").get<std::string>());
  return cfg;
}

struct CellKey {
  std::string setting;  // "s<seed>|<partition>"
  std::string method;
  bool operator<(const CellKey& o) const {
    return setting != o.setting ? setting < o.setting : method < o.method;
  }
};

struct SeedOutcome {
  uint64_t seed = 0;
  std::map<CellKey, std::map<std::string, double>> cells;
  std::vector<json> reports;              // one per method
  std::vector<std::pair<std::string, std::string>> failures;  // method, error
};

SeedOutcome run_seed(const ExperimentConfig& cfg,
                     const EmbeddingDataset* shared_ds, uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;

  EmbeddingDataset local;
  const EmbeddingDataset* ds = shared_ds;
  if (ds == nullptr) {
    json spec_json = cfg.synth_spec;
    spec_json["seed"] = spec_json.value("seed", 0ull) + seed;
    const SynthSpec spec = parse_synth_spec(spec_json);
    local = generate(spec).dataset;
    ds = &local;
  }

  const Rng seed_rng(seed);
  std::optional<CohortFile> lhcf_cohorts;
  std::optional<CohortFile> dac_cohorts;
  auto cohorts_for = [&](const std::string& grouping) -> const CohortFile& {
    const bool dac = grouping == "dac";
    auto& slot = dac ? dac_cohorts : lhcf_cohorts;
    if (!slot) {
      ClusterOptions opt = cfg.cluster;
      opt.seed = seed_rng.derive(dac ? 0xDAC : 0xC1).seed();
      if (dac) {
        if (cfg.dac_attrs.empty())
          fail(ErrorCode::InvalidSpec, "experiment: dac method without dac.attrs");
        opt.dac_attrs = cfg.dac_attrs;
        opt.dac_weight = cfg.dac_weight;
      }
      const ClusterResult r = cluster_dataset(*ds, opt);
      CohortFile file;
      file.k_star = r.k_star;
      for (size_t i = 0; i < r.ids.size(); ++i)
        file.label_of[r.ids[i]] = r.labels[i];
      slot = std::move(file);
    }
    return *slot;
  };

  const std::string setting_prefix = "s" + std::to_string(seed);
  for (const MethodSpec& method : cfg.methods) {
    try {
      GroupSource groups;
      if (method.grouping == "classic")
        groups.visible_attrs = cfg.classic_attrs;
      else if (method.grouping == "lhcf" || method.grouping == "dac")
        groups.cohorts = cohorts_for(method.grouping);

      TrainStageOptions train_opt;
      train_opt.fair.kind = method.kind;
      train_opt.fair.lambda = method.lambda;
      train_opt.hyper = cfg.hyper;
      train_opt.hyper.seed = seed_rng.derive(0x7E).seed();
      const TrainStageResult trained = train_stage(*ds, groups, train_opt);

      json report;
      report["format_version"] = 1;
      report["setting"] = setting_prefix;
      report["method"] = method.label;
      report["seed"] = seed;
      report["best_epoch"] = trained.report.best_epoch;
      report["best_val_auc"] = trained.report.best_val_auc;
      json partitions = json::object();
      for (const auto& attrs : cfg.partitions) {
        GroupSource eval_groups;
        eval_groups.visible_attrs = attrs;
        const json ev =
            eval_stage(*ds, trained.model, eval_groups, cfg.eval_split);
        const std::string pname = ev.at("grouping").at("name");
        partitions[pname] = ev;
        CellKey key{setting_prefix + "|" + pname, method.label};
        std::map<std::string, double> metrics;
        for (const auto& m : known_metrics())
          metrics[m] = report_metric(ev, m);
        out.cells.emplace(std::move(key), std::move(metrics));
      }
      report["partitions"] = partitions;
      out.reports.push_back(std::move(report));
    } catch (const std::exception& e) {
      out.failures.emplace_back(method.label, e.what());
    }
  }
  return out;
}

}  // namespace

ExperimentSummary run_experiment(const std::string& config_path,
                                 const std::string& out_dir, int jobs) {
  const json config_json = load_json_file(config_path);
  const ExperimentConfig cfg = parse_config(config_json);
  fs::create_directories(out_dir);

  EmbeddingDataset manifest_ds;
  const EmbeddingDataset* shared = nullptr;
  if (!cfg.manifest.empty()) {
    manifest_ds = load_dataset(cfg.manifest);
    shared = &manifest_ds;
  }

  const size_t n_seeds = cfg.seeds.size();
  std::vector<SeedOutcome> outcomes(n_seeds);
  {
    const size_t n_jobs =
        std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(
                                                 std::max(jobs, 1)),
                                             n_seeds));
    std::mutex mu;
    size_t next = 0;
    auto worker = [&]() {
      while (true) {
        size_t mine;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= n_seeds) return;
          mine = next++;
        }
        outcomes[mine] = run_seed(cfg, shared, cfg.seeds[mine]);
      }
    };
    std::vector<std::thread> pool;
    for (size_t t = 0; t + 1 < n_jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  ExperimentSummary summary;
  summary.outputs = json::array();
  RunManifest meta("experiment",
                   {{"config", config_path}, {"out", out_dir}, {"jobs", jobs}},
                   cfg.seeds.front());
  meta.add_input(config_path);
  if (!cfg.manifest.empty()) meta.add_input(cfg.manifest);

  // Per-(seed, method) eval reports.
  const fs::path base(out_dir);
  json failures = json::array();
  std::map<CellKey, std::map<std::string, double>> cells;
  for (const SeedOutcome& oc : outcomes) {
    for (const json& report : oc.reports) {
      const std::string name = "eval_" +
                               report.at("method").get<std::string>() + "_s" +
                               std::to_string(oc.seed) + ".json";
      const std::string path = (base / name).string();
      save_json_file(path, report);
      meta.write_for(path);
      summary.outputs.push_back(path);
      ++summary.cells_run;
    }
    for (const auto& [method, error] : oc.failures) {
      failures.push_back(
          {{"seed", oc.seed}, {"method", method}, {"error", error}});
      ++summary.cells_failed;
      std::cerr << "experiment: cell failed (seed " << oc.seed << ", method "
                << method << "): " << error << "\n";
    }
    for (const auto& [key, metrics] : oc.cells) cells[key] = metrics;
  }
  if (!failures.empty()) {
    const std::string path = (base / "failures.json").string();
    save_json_file(path, failures);
    summary.outputs.push_back(path);
  }

  // Consolidated long-form table, sorted by (setting, method).
  {
    std::string tsv = "setting\tmethod";
    for (const auto& m : known_metrics()) tsv += "\t" + m;
    tsv += "\n";
    for (const auto& [key, metrics] : cells) {
      tsv += key.setting + "\t" + key.method;
      for (const auto& m : known_metrics())
        tsv += "\t" + format_double(metrics.at(m));
      tsv += "\n";
    }
    const std::string path = (base / "results.tsv").string();
    atomic_write_file(path, tsv);
    meta.write_for(path);
    summary.outputs.push_back(path);
  }

  // Per-metric rank tables and CD diagrams over complete settings.
  std::set<std::string> settings;
  std::set<std::string> methods_seen;
  for (const auto& [key, metrics] : cells) {
    settings.insert(key.setting);
    methods_seen.insert(key.method);
  }
  std::vector<std::string> complete;
  for (const auto& s : settings) {
    bool ok = true;
    for (const auto& m : methods_seen)
      if (!cells.count(CellKey{s, m})) {
        ok = false;
        break;
      }
    if (ok)
      complete.push_back(s);
    else
      std::cerr << "experiment: setting '" << s
                << "' incomplete; excluded from rank tables\n";
  }

  if (methods_seen.size() >= 2 && complete.size() >= 2) {
    for (const auto& metric : known_metrics()) {
      ScoreTable table;
      table.higher_better = metric_higher_better(metric);
      table.methods.assign(methods_seen.begin(), methods_seen.end());
      table.settings = complete;
      table.scores = Matrix(complete.size(), table.methods.size());
      for (size_t r = 0; r < complete.size(); ++r)
        for (size_t c = 0; c < table.methods.size(); ++c)
          table.scores(r, c) =
              cells.at(CellKey{complete[r], table.methods[c]}).at(metric);
      const RankResult ranks = friedman(table, 0.05);
      const std::string svg_path = (base / ("cd_" + metric + ".svg")).string();
      atomic_write_file(svg_path, cd_diagram(ranks));
      meta.write_for(svg_path);
      summary.outputs.push_back(svg_path);
      const std::string ranks_path =
          (base / ("ranks_" + metric + ".json")).string();
      json rj = rank_result_json(ranks);
      rj["metric"] = metric;
      save_json_file(ranks_path, rj);
      meta.write_for(ranks_path);
      summary.outputs.push_back(ranks_path);
    }
  } else {
    std::cerr << "experiment: not enough complete settings/methods for rank "
                 "tables\n";
  }
  return summary;
}

}  // namespace lhcf

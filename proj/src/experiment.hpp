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

#include <string>

#include "json.hpp"

namespace lhcf {

// Declarative grid runner: a config names the dataset (a synth spec or a
// manifest), the seeds, the method grid (erm / classic-* / lhcf-* / dac-*),
// the lambda grid and the visible partitions to evaluate on. Emits one eval
// report per (seed, method), a consolidated results.tsv and one
// critical-difference SVG + rank JSON per metric.
//
// A failed grid cell is recorded in failures.json and its settings are
// dropped from the rank tables with a warning on stderr.
struct ExperimentSummary {
  int cells_run = 0;
  int cells_failed = 0;
  nlohmann::json outputs;  // paths of everything written
};

ExperimentSummary run_experiment(const std::string& config_path,
                                 const std::string& out_dir, int jobs);

}  // namespace lhcf

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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace lhcf {

// Categorical attribute with named categories. `visible` distinguishes real
// demographic attributes from bookkeeping columns (e.g. generator ground
// truth) that must not enter visible-cohort evaluation by default.
struct AttributeSchema {
  std::string name;
  std::vector<std::string> values;
  bool visible = true;
};

// One sample: an embedding vector, a binary label and per-attribute category
// indices aligned with the dataset schema (-1 = missing).
struct SampleRecord {
  std::string id;
  std::vector<double> z;
  int y = 0;
  std::vector<int> attrs;
};

enum class Split { Train = 0, Val = 1, Test = 2 };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct EmbeddingDataset {
  size_t d = 0;
  std::vector<AttributeSchema> schema;
  std::vector<SampleRecord> records;
  // Aligned with records; empty until splits have been assigned.
  std::vector<Split> split_of;

  bool has_splits() const { return !split_of.empty(); }
  std::optional<size_t> attr_index(const std::string& name) const;
  std::vector<size_t> split_indices(Split s) const;
  size_t record_index(const std::string& id) const;  // throws if unknown
};

// Disjoint groups of record indices keyed by a human-readable label.
struct VisibleCohortPartition {
  std::string name;
  std::vector<std::pair<std::string, std::vector<size_t>>> groups;
};

// Loads `<name>.manifest.json` plus the TSV it references and validates the
// result (dimensions, schema indices, split coverage). Parse errors carry the
// file name and line number.
EmbeddingDataset load_dataset(const std::string& manifest_path);

// Writes the TSV and its manifest. Floats are serialized with round-trip
// exact formatting so load(save(ds)) == ds bit for bit.
void save_dataset(const EmbeddingDataset& ds, const std::string& tsv_path,
                  const std::string& manifest_path);

// Label-stratified split assignment with largest-remainder rounding.
// Deterministic for a given rng seed.
EmbeddingDataset make_splits(const EmbeddingDataset& ds,
                             std::array<double, 3> fractions, Rng rng);

// Updates only the "splits" object of an existing manifest file.
void write_splits_to_manifest(const EmbeddingDataset& ds,
                              const std::string& manifest_path);

// Cartesian-product partition over the named attributes; records missing any
// of them are left out, empty combinations are dropped.
VisibleCohortPartition intersect_attributes(
    const EmbeddingDataset& ds, const std::vector<std::string>& attr_names);

// N x d matrix of all embeddings in record order.
Matrix embeddings_matrix(const EmbeddingDataset& ds);

}  // namespace lhcf

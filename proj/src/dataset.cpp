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

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "errors.hpp"
#include "jsonio.hpp"

namespace lhcf {

namespace fs = std::filesystem;
using nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    default: return "test";
  }
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  fail(ErrorCode::Parse, "unknown split name '" + name + "'");
}

std::optional<size_t> EmbeddingDataset::attr_index(
    const std::string& name) const {
  for (size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  return std::nullopt;
}

std::vector<size_t> EmbeddingDataset::split_indices(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < split_of.size(); ++i)
    if (split_of[i] == s) out.push_back(i);
  return out;
}

size_t EmbeddingDataset::record_index(const std::string& id) const {
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].id == id) return i;
  fail(ErrorCode::Schema, "unknown record id '" + id + "'");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<AttributeSchema> parse_schema(const json& j,
                                          const std::string& where) {
  std::vector<AttributeSchema> schema;
  std::unordered_set<std::string> seen;
  for (const auto& entry : j) {
    AttributeSchema a;
    a.name = entry.at("name").get<std::string>();
    for (const auto& v : entry.at("values"))
      a.values.push_back(v.get<std::string>());
    a.visible = entry.value("visible", true);
    if (a.values.size() < 2)
      fail(ErrorCode::Schema,
           where + ": attribute '" + a.name + "' needs >= 2 values");
    std::unordered_set<std::string> vals(a.values.begin(), a.values.end());
    if (vals.size() != a.values.size())
      fail(ErrorCode::Schema,
           where + ": attribute '" + a.name + "' has duplicate values");
    if (!seen.insert(a.name).second)
      fail(ErrorCode::Schema, where + ": duplicate attribute '" + a.name + "'");
    schema.push_back(std::move(a));
  }
  return schema;
}

void load_tsv(EmbeddingDataset& ds, const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;

  const size_t n_attrs = ds.schema.size();
  const size_t expected = 2 + n_attrs + ds.d;

  if (!std::getline(in, line))
    fail(ErrorCode::Parse, path + ":1: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_tabs(line);
  if (header.size() != expected)
    fail(ErrorCode::Parse, path + ":1: header has " +
                               std::to_string(header.size()) +
                               " columns, expected " + std::to_string(expected));
  if (header[0] != "id" || header[1] != "y")
    fail(ErrorCode::Parse, path + ":1: header must start with 'id\\ty'");
  for (size_t a = 0; a < n_attrs; ++a)
    if (header[2 + a] != ds.schema[a].name)
      fail(ErrorCode::Parse, path + ":1: attribute column '" + header[2 + a] +
                                 "' does not match schema '" +
                                 ds.schema[a].name + "'");
  for (size_t j = 0; j < ds.d; ++j)
    if (header[2 + n_attrs + j] != "z" + std::to_string(j))
      fail(ErrorCode::Parse,
           path + ":1: embedding column " + std::to_string(j) + " misnamed");

  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto fields = split_tabs(line);
    if (fields.size() != expected)
      fail(ErrorCode::Dimension,
           where + ": row has " + std::to_string(fields.size()) +
               " fields, expected " + std::to_string(expected));
    SampleRecord rec;
    rec.id = fields[0];
    if (rec.id.empty()) fail(ErrorCode::Parse, where + ": empty id");
    if (!ids.insert(rec.id).second)
      fail(ErrorCode::Parse, where + ": duplicate id '" + rec.id + "'");
    const long long y = parse_int(fields[1], where);
    if (y != 0 && y != 1)
      fail(ErrorCode::Schema, where + ": label must be 0 or 1");
    rec.y = static_cast<int>(y);
    rec.attrs.assign(n_attrs, -1);
    for (size_t a = 0; a < n_attrs; ++a) {
      const std::string& f = fields[2 + a];
      if (f.empty()) continue;
      const long long idx = parse_int(f, where);
      if (idx < 0 ||
          idx >= static_cast<long long>(ds.schema[a].values.size()))
        fail(ErrorCode::Schema,
             where + ": attribute '" + ds.schema[a].name + "' index " +
                 std::to_string(idx) + " out of range (cardinality " +
                 std::to_string(ds.schema[a].values.size()) + ")");
      rec.attrs[a] = static_cast<int>(idx);
    }
    rec.z.resize(ds.d);
    for (size_t j = 0; j < ds.d; ++j) {
      rec.z[j] = parse_double(fields[2 + n_attrs + j], where);
      if (!std::isfinite(rec.z[j]))
        fail(ErrorCode::Parse, where + ": non-finite embedding value");
    }
    ds.records.push_back(std::move(rec));
  }
}

}  // namespace

EmbeddingDataset load_dataset(const std::string& manifest_path) {
  const json manifest = load_json_file(manifest_path);
  EmbeddingDataset ds;
  if (!manifest.contains("d") || !manifest.contains("embeddings"))
    fail(ErrorCode::Parse,
         manifest_path + ": manifest needs 'd' and 'embeddings'");
  const long long d = manifest.at("d").get<long long>();
  if (d < 1) fail(ErrorCode::Schema, manifest_path + ": d must be >= 1");
  ds.d = static_cast<size_t>(d);
  if (manifest.contains("schema"))
    ds.schema = parse_schema(manifest.at("schema"), manifest_path);

  fs::path tsv = manifest.at("embeddings").get<std::string>();
  if (tsv.is_relative())
    tsv = fs::path(manifest_path).parent_path() / tsv;
  load_tsv(ds, tsv.string());

  if (manifest.contains("splits")) {
    const json& sp = manifest.at("splits");
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < ds.records.size(); ++i)
      index.emplace(ds.records[i].id, i);
    ds.split_of.assign(ds.records.size(), Split::Train);
    std::vector<bool> covered(ds.records.size(), false);
    for (auto it = sp.begin(); it != sp.end(); ++it) {
      auto found = index.find(it.key());
      if (found == index.end())
        fail(ErrorCode::Schema,
             manifest_path + ": split entry for unknown id '" + it.key() + "'");
      ds.split_of[found->second] = parse_split(it.value().get<std::string>());
      covered[found->second] = true;
    }
    for (size_t i = 0; i < covered.size(); ++i)
      if (!covered[i])
        fail(ErrorCode::Schema, manifest_path + ": record '" +
                                    ds.records[i].id + "' missing from splits");
    for (Split s : {Split::Train, Split::Val, Split::Test})
      if (ds.split_indices(s).empty())
        fail(ErrorCode::Schema, manifest_path + ": split '" +
                                    std::string(split_name(s)) + "' is empty");
  }
  return ds;
}

void save_dataset(const EmbeddingDataset& ds, const std::string& tsv_path,
                  const std::string& manifest_path) {
  std::string out;
  out += "id\ty";
  for (const auto& a : ds.schema) out += "\t" + a.name;
  for (size_t j = 0; j < ds.d; ++j) out += "\tz" + std::to_string(j);
  out += "\n";
  for (const auto& rec : ds.records) {
    out += rec.id;
    out += "\t";
    out += rec.y ? "1" : "0";
    for (size_t a = 0; a < ds.schema.size(); ++a) {
      out += "\t";
      if (rec.attrs[a] >= 0) out += std::to_string(rec.attrs[a]);
    }
    for (size_t j = 0; j < ds.d; ++j) out += "\t" + format_double(rec.z[j]);
    out += "\n";
  }
  atomic_write_file(tsv_path, out);

  json manifest;
  manifest["format_version"] = 1;
  manifest["d"] = ds.d;
  manifest["embeddings"] = fs::path(tsv_path).filename().string();
  json schema = json::array();
  for (const auto& a : ds.schema) {
    json e;
    e["name"] = a.name;
    e["values"] = a.values;
    e["visible"] = a.visible;
    schema.push_back(e);
  }
  manifest["schema"] = schema;
  if (ds.has_splits()) {
    json splits = json::object();
    for (size_t i = 0; i < ds.records.size(); ++i)
      splits[ds.records[i].id] = split_name(ds.split_of[i]);
    manifest["splits"] = splits;
  }
  save_json_file(manifest_path, manifest);
}

void write_splits_to_manifest(const EmbeddingDataset& ds,
                              const std::string& manifest_path) {
  if (!ds.has_splits())
    fail(ErrorCode::InvalidArgument,
         "write_splits_to_manifest: dataset has no splits");
  json manifest = load_json_file(manifest_path);
  json splits = json::object();
  for (size_t i = 0; i < ds.records.size(); ++i)
    splits[ds.records[i].id] = split_name(ds.split_of[i]);
  manifest["splits"] = splits;
  save_json_file(manifest_path, manifest);
}

EmbeddingDataset make_splits(const EmbeddingDataset& ds,
                             std::array<double, 3> fractions, Rng rng) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0))
      fail(ErrorCode::InvalidArgument, "make_splits: fractions must be > 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(ErrorCode::InvalidArgument, "make_splits: fractions must sum to 1");

  EmbeddingDataset out = ds;
  out.split_of.assign(ds.records.size(), Split::Train);

  for (int label = 0; label <= 1; ++label) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < ds.records.size(); ++i)
      if (ds.records[i].y == label) idx.push_back(i);
    if (idx.empty()) continue;
    if (idx.size() < 3)
      fail(ErrorCode::TooFewSamples,
           "make_splits: class " + std::to_string(label) + " has " +
               std::to_string(idx.size()) + " samples, need >= 3");

    // Fisher-Yates with our own rng for a portable shuffle.
    for (size_t i = idx.size() - 1; i > 0; --i) {
      const size_t j = rng.below(i + 1);
      std::swap(idx[i], idx[j]);
    }

    // Largest-remainder allocation: counts differ from n*f by < 1.
    const double n = static_cast<double>(idx.size());
    std::array<size_t, 3> counts{};
    std::array<double, 3> remainder{};
    size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = n * fractions[static_cast<size_t>(s)];
      counts[static_cast<size_t>(s)] =
          static_cast<size_t>(std::floor(exact + 1e-9));
      remainder[static_cast<size_t>(s)] =
          exact - static_cast<double>(counts[static_cast<size_t>(s)]);
      assigned += counts[static_cast<size_t>(s)];
    }
    // Ties on the remainder go to the split with fewer samples so that
    // small datasets keep every split inhabited.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double ra = remainder[static_cast<size_t>(a)];
      const double rb = remainder[static_cast<size_t>(b)];
      if (ra != rb) return ra > rb;
      return counts[static_cast<size_t>(a)] < counts[static_cast<size_t>(b)];
    });
    for (size_t leftover = idx.size() - assigned, i = 0; i < leftover; ++i)
      ++counts[static_cast<size_t>(order[i % 3])];

    size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (size_t c = 0; c < counts[static_cast<size_t>(s)]; ++c)
        out.split_of[idx[pos++]] = static_cast<Split>(s);
  }

  for (Split s : {Split::Train, Split::Val, Split::Test})
    if (out.split_indices(s).empty())
      fail(ErrorCode::TooFewSamples, "make_splits: split '" +
                                         std::string(split_name(s)) +
                                         "' would be empty");
  return out;
}

VisibleCohortPartition intersect_attributes(
    const EmbeddingDataset& ds, const std::vector<std::string>& attr_names) {
  if (attr_names.empty())
    fail(ErrorCode::InvalidArgument, "intersect_attributes: no attributes");
  std::vector<size_t> attr_idx;
  for (const auto& name : attr_names) {
    auto idx = ds.attr_index(name);
    if (!idx)
      fail(ErrorCode::UnknownAttribute, "unknown attribute '" + name + "'");
    attr_idx.push_back(*idx);
  }

  std::map<std::vector<int>, std::vector<size_t>> grouped;
  for (size_t i = 0; i < ds.records.size(); ++i) {
    std::vector<int> key;
    key.reserve(attr_idx.size());
    bool complete = true;
    for (size_t a : attr_idx) {
      const int v = ds.records[i].attrs[a];
      if (v < 0) {
        complete = false;
        break;
      }
      key.push_back(v);
    }
    if (complete) grouped[key].push_back(i);
  }

  VisibleCohortPartition part;
  {
    std::string name;
    for (size_t i = 0; i < attr_names.size(); ++i)
      name += (i ? "+" : "") + attr_names[i];
    part.name = name;
  }
  for (const auto& [key, members] : grouped) {
    std::string label;
    for (size_t i = 0; i < key.size(); ++i)
      label += (i ? "+" : "") +
               ds.schema[attr_idx[i]].values[static_cast<size_t>(key[i])];
    part.groups.emplace_back(label, members);
  }
  return part;
}

Matrix embeddings_matrix(const EmbeddingDataset& ds) {
  Matrix z(ds.records.size(), ds.d);
  for (size_t i = 0; i < ds.records.size(); ++i)
    for (size_t j = 0; j < ds.d; ++j) z(i, j) = ds.records[i].z[j];
  return z;
}

}  // namespace lhcf

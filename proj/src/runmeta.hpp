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

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace lhcf {

// SHA-256 of a byte string / file, as lowercase hex.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Reproducibility sidecar written next to every output artifact
// (<artifact>.run.json): the command, its flags, the seed, digests of all
// inputs, the tool version and the wall-clock duration.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json flags, uint64_t seed);

  void add_input(const std::string& path);
  // Writes <artifact_path>.run.json atomically.
  void write_for(const std::string& artifact_path) const;

  nlohmann::json to_json() const;

 private:
  std::string command_;
  nlohmann::json flags_;
  uint64_t seed_;
  nlohmann::json inputs_;
  std::chrono::steady_clock::time_point start_;
};

extern const char* kToolVersion;

}  // namespace lhcf

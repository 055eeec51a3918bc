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

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// Strict full-field parses; `where` goes into the error message.
double parse_double(const std::string& field, const std::string& where);
long long parse_int(const std::string& field, const std::string& where);

std::string read_text_file(const std::string& path);

// Write to a temp file in the target directory, then rename over the target.
void atomic_write_file(const std::string& path, const std::string& content);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace lhcf

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

#include <stdexcept>
#include <string>

namespace lhcf {

enum class ErrorCode {
  InvalidArgument = 1,
  Parse,
  Schema,
  Dimension,
  NotPositiveDefinite,
  EmptyInput,
  TooFewSamples,
  UnknownAttribute,
  MissingAttribute,
  DegenerateComponent,
  SingleClass,
  InvalidSpec,
  NoGroups,
  UnsupportedK,
  TooManyClusters,
  Io,
  Internal,
};

// All recoverable failures in the library surface as lhcf::Error; the code
// tells callers (and the C API) which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace lhcf

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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace lhcf::testutil {

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lhcf_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<unsigned>(getpid())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// O(n+ * n-) pairwise AUC: the independent oracle for the rank-based
// implementation, ties counted 1/2.
inline double auc_bruteforce(std::span<const double> score,
                             std::span<const int> label) {
  double wins = 0.0;
  long long pairs = 0;
  for (size_t i = 0; i < score.size(); ++i) {
    if (!label[i]) continue;
    for (size_t j = 0; j < score.size(); ++j) {
      if (label[j]) continue;
      ++pairs;
      if (score[i] > score[j])
        wins += 1.0;
      else if (score[i] == score[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Random lower-triangular matrix with positive diagonal.
inline Matrix random_lower(size_t d, Rng& rng) {
  Matrix lower(d, d);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < i; ++j) lower(i, j) = rng.normal();
    lower(i, i) = 0.2 + rng.uniform() * 2.0;
  }
  return lower;
}

inline Matrix mat_mul_t(const Matrix& lower) {  // L * L^T
  const size_t d = lower.rows();
  Matrix out(d, d);
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (size_t k = 0; k < d; ++k) s += lower(i, k) * lower(j, k);
      out(i, j) = s;
    }
  return out;
}

}  // namespace lhcf::testutil

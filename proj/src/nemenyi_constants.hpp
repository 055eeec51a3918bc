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

namespace lhcf {

// Critical values q_alpha(k) for the Nemenyi test: the upper quantile of the
// studentized range distribution with infinite degrees of freedom, divided
// by sqrt(2). Index 0 corresponds to k = 2; the table covers k up to 20.
// These are the standard constants used for critical-difference diagrams in
// classifier-comparison studies.
inline constexpr int kNemenyiMinK = 2;
inline constexpr int kNemenyiMaxK = 20;

inline constexpr double kNemenyiQ005[] = {
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219,
    3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544,
};

inline constexpr double kNemenyiQ010[] = {
    1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978,
    3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319,
};

}  // namespace lhcf

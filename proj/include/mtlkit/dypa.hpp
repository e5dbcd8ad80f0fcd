// Copyright 2026 The mtlkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtlkit/heads.hpp"

namespace mtl {

struct MultiTaskDataset;

enum class ComplexitySource { kExampleCount, kClassCount };

std::string to_string(ComplexitySource source);
ComplexitySource parse_complexity_source(const std::string& name);

/// Dynamic parameter allocation: head width grows geometrically with the
/// task's complexity quartile, d_t = base_dt * growth^(q-1).
struct DypaConfig {
  int base_dt = 128;
  double growth = 2.0;
  int attn_heads = 4;
  ComplexitySource source = ComplexitySource::kExampleCount;
  double width_limit = kDefaultWidthLimit;
};

struct ComplexityScore {
  int task_id = 0;
  std::int64_t raw = 0;
  double normalized = 0.0;  // z-score of ln(raw); reporting only
  int quartile = 1;
};

/// Rank-based quartiles (ties by ascending task id); bins differ in size by
/// at most one. `raw_counts` is indexed by task id.
std::vector<ComplexityScore> score_tasks(std::span<const std::int64_t> raw_counts);

/// Train-split sizes or class counts, depending on `source`.
std::vector<std::int64_t> complexity_counts(const MultiTaskDataset& dataset, ComplexitySource source);

HeadAllocation allocate(std::span<const ComplexityScore> scores, const DypaConfig& cfg, int d_backbone,
                        std::span<const int> num_classes);

std::int64_t allocation_param_total(const HeadAllocation& allocation);

}  // namespace mtl

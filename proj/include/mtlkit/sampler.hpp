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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtlkit/rng.hpp"

namespace mtl {

enum class AlphaKind { kConstant, kLinear, kExponential, kCosine, kDemon };

std::string to_string(AlphaKind kind);
AlphaKind parse_alpha_kind(const std::string& name);

/// Decay of the sampling exponent alpha over training progress p in [0,1].
/// Every kind starts at alpha_start and lands on alpha_end exactly.
struct AlphaSchedule {
  AlphaKind kind = AlphaKind::kConstant;
  double alpha_start = 1.0;
  double alpha_end = 1.0;
  double exp_rate = 5.0;    // exponential only
  double demon_ref = 0.9;   // demon only

  void validate() const;
};

double alpha_at(const AlphaSchedule& schedule, double progress);

/// p_T = N_T^alpha / sum_t N_t^alpha.
std::vector<double> task_distribution(std::span<const std::int64_t> sizes, double alpha);

struct SamplingPolicy {
  AlphaSchedule schedule;
  int repetition = 1;
  std::uint64_t seed = 0;
};

/// Stateful task chooser for one training run. A fresh task is drawn every
/// `repetition` iterations; in between the previous draw is repeated.
class TaskSampler {
 public:
  TaskSampler(SamplingPolicy policy, std::vector<std::int64_t> sizes);

  int next_task(std::int64_t iteration, std::int64_t total_iterations);

  /// Alpha used by the most recent fresh draw.
  double last_alpha() const noexcept { return last_alpha_; }
  const SamplingPolicy& policy() const noexcept { return policy_; }

 private:
  SamplingPolicy policy_;
  std::vector<std::int64_t> sizes_;
  Rng rng_;
  std::optional<int> current_;
  double last_alpha_ = 0.0;
  double cached_alpha_ = -1.0;
  std::vector<double> cumulative_;
};

}  // namespace mtl

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
#include <string>
#include <unordered_map>
#include <vector>

#include "mtlkit/tensor.hpp"

namespace mtl {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

/// One AdamW update of a single parameter from its current `grad`.
/// Weight decay is decoupled: w <- w * (1 - lr * wd) before the Adam step.
/// Frozen parameters are left untouched, including their state.
void adamw_step(Parameter& param, AdamState& state, const AdamWConfig& cfg, double lr);

class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// Updates every trainable parameter that received a gradient in the last
  /// backward pass. Returns false if any updated value is non-finite.
  bool step(ParamStore& params, double lr);

  const AdamWConfig& config() const noexcept { return cfg_; }
  const AdamState* state(const std::string& name) const;

 private:
  AdamWConfig cfg_;
  std::unordered_map<std::string, AdamState> states_;
};

}  // namespace mtl

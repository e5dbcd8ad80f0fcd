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

#include "mtlkit/autograd.hpp"
#include "mtlkit/rng.hpp"
#include "mtlkit/tensor.hpp"

namespace mtl {

enum class HeadKind { kFc, kAttention };

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& name);

/// Largest d_t accepted relative to the backbone width. Widths above d_b
/// occur in the top DyPA quartile (1024 on a 768-wide backbone).
inline constexpr double kDefaultWidthLimit = 2.0;

struct HeadConfig {
  HeadKind kind = HeadKind::kAttention;
  int d_backbone = 64;
  int d_t = 16;
  int attn_heads = 4;
  int num_classes = 2;

  void validate(double width_limit = kDefaultWidthLimit) const;
  bool operator==(const HeadConfig&) const = default;
};

/// Head configuration per task, indexed by task id.
using HeadAllocation = std::vector<HeadConfig>;

/// Weights + biases registered by a head of this configuration.
std::int64_t param_count(const HeadConfig& cfg);

struct FcHeadWeights {
  Var w_hidden, b_hidden, w_out, b_out;
};

struct AttnHeadWeights {
  Var w_proj, b_proj;
  AttentionWeights attn;
  Var w_out, b_out;
};

/// Mean-pool tokens, FC + ReLU, linear classifier. Returns [1, C] logits.
Var fc_head_forward(Var tokens, const FcHeadWeights& w, std::span<const std::uint8_t> mask = {});

/// Project to d_t, one multi-head self-attention layer, mean-pool, classify.
Var attn_head_forward(Var tokens, const AttnHeadWeights& w, std::size_t heads,
                      std::span<const std::uint8_t> mask = {});

/// A task-specific head whose parameters live in a shared ParamStore under
/// `prefix` (e.g. "head/7/").
class TaskHead {
 public:
  TaskHead(ParamStore& store, std::string prefix, const HeadConfig& cfg, Rng& rng);

  Var forward(Graph& g, Var tokens, std::span<const std::uint8_t> mask = {}) const;

  const HeadConfig& config() const noexcept { return cfg_; }
  const std::string& prefix() const noexcept { return prefix_; }
  const std::vector<Parameter*>& parameters() const noexcept { return params_; }

 private:
  HeadConfig cfg_;
  std::string prefix_;
  std::vector<Parameter*> params_;
};

}  // namespace mtl

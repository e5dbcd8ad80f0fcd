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
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mtlkit/autograd.hpp"
#include "mtlkit/backbone.hpp"
#include "mtlkit/heads.hpp"

namespace mtl {

/// Shared backbone plus one task-specific head per task.
class MtlModel {
 public:
  MtlModel(const BackboneConfig& backbone, const HeadAllocation& heads, std::uint64_t seed);

  MtlModel(const MtlModel&) = delete;
  MtlModel& operator=(const MtlModel&) = delete;
  MtlModel(MtlModel&&) = default;
  MtlModel& operator=(MtlModel&&) = default;

  ParamStore& params() noexcept { return *params_; }
  const ParamStore& params() const noexcept { return *params_; }
  Backbone& backbone() noexcept { return *backbone_; }
  const Backbone& backbone() const noexcept { return *backbone_; }

  std::size_t num_heads() const noexcept { return heads_.size(); }
  const TaskHead& head(int task_id) const;
  HeadAllocation allocation() const;

  /// [1, C] logits of the example's own task head.
  Var logits(Graph& g, const Example& example) const;
  /// Mean cross-entropy over a single-task batch.
  Var batch_loss(Graph& g, std::span<const Example* const> batch) const;
  int predict(const Example& example) const;

  /// Scalar count of all task-specific head parameters.
  std::size_t head_param_count() const { return params_->scalar_count("head/"); }

 private:
  std::unique_ptr<ParamStore> params_;
  std::unique_ptr<Backbone> backbone_;
  std::vector<TaskHead> heads_;
};

enum class LoadScope { kAll, kBackboneOnly };

struct CheckpointInfo {
  std::uint32_t version = 0;
  std::string fingerprint;
  std::string backbone;
  std::size_t tensors = 0;
};

/// Versioned binary container: magic, version, run fingerprint, backbone
/// description, then (name, shape, float64 data) records.
void save_checkpoint(const MtlModel& model, const std::filesystem::path& path, const std::string& fingerprint);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);
/// Copies stored tensors into the model. kBackboneOnly restores "embed/" and
/// "backbone/" and requires a matching backbone description.
CheckpointInfo load_checkpoint(MtlModel& model, const std::filesystem::path& path, LoadScope scope = LoadScope::kAll);

}  // namespace mtl

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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtlkit/backbone.hpp"
#include "mtlkit/datagen.hpp"
#include "mtlkit/dypa.hpp"
#include "mtlkit/evalsuite.hpp"
#include "mtlkit/heads.hpp"
#include "mtlkit/model.hpp"
#include "mtlkit/optim.hpp"
#include "mtlkit/sampler.hpp"

namespace mtl {

enum class LrKind { kFixed, kFreezeThenUnfreeze, kWarmupStep };

std::string to_string(LrKind kind);
LrKind parse_lr_kind(const std::string& name);

/// Learning-rate strategy with breakpoints expressed as fractions of the
/// whole run, so they rescale with the epoch count. Defaults correspond to
/// a 15-epoch run: warm-up/freeze over epochs 0-4, steps at 8 and 12.
struct LrPolicy {
  LrKind kind = LrKind::kWarmupStep;
  double low = 1e-5;
  double high = 1e-4;
  double warmup_end = 4.0 / 15.0;
  double step1 = 8.0 / 15.0;
  double step2 = 12.0 / 15.0;
  double step_factor = 10.0;

  void validate() const;
};

struct LrPoint {
  double lr = 0.0;
  bool frozen = false;
};

LrPoint lr_at(const LrPolicy& policy, double progress);

struct HeadSettings {
  HeadKind kind = HeadKind::kAttention;
  int d_t = 64;
  int attn_heads = 4;
};

struct TrainConfig {
  BackboneConfig backbone;
  HeadSettings heads;
  bool dypa_enabled = false;
  DypaConfig dypa;
  AlphaSchedule schedule;
  int repetition = 1;
  LrPolicy lr;
  AdamWConfig adamw;
  int batch_size = 8;
  double epochs = 15.0;
  /// Epoch budget for single-task baselines; 0 = same as `epochs`.
  double baseline_epochs = 0.0;
  int eval_points = 10;
  bool freeze_embeddings = false;
  bool cohort_by_total = false;
  std::uint64_t seed = 1;
};

enum class RunStatus { kRunning, kConverged, kDiverged };
std::string to_string(RunStatus status);

struct MetricsRecord {
  std::int64_t iteration = 0;
  double epoch_fraction = 0.0;
  double alpha = 0.0;
  double lr = 0.0;
  double loss = 0.0;
  double mean_acc = 0.0;
  double t10_acc = 0.0;
  double b10_acc = 0.0;
};

/// One line of the metrics log (JSON object, no trailing newline).
std::string metrics_line(const MetricsRecord& record);

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_metrics;
  std::optional<std::filesystem::path> checkpoint;
  std::string fingerprint;
};

struct TrainResult {
  RunStatus status = RunStatus::kRunning;
  std::int64_t iterations_per_epoch = 0;
  std::int64_t total_iterations = 0;
  std::int64_t completed_iterations = 0;
  std::vector<MetricsRecord> log;
  MetricReport report;
  std::string divergence;
};

std::int64_t iterations_per_epoch(const MultiTaskDataset& dataset, int batch_size);
std::int64_t total_iterations(const MultiTaskDataset& dataset, int batch_size, double epochs);

/// DyPA widths when enabled (and K >= 4), otherwise the fixed head settings.
HeadAllocation build_allocation(const MultiTaskDataset& dataset, const TrainConfig& cfg);

/// Full multi-task training run on `model`.
TrainResult train(MtlModel& model, const MultiTaskDataset& dataset, const TrainConfig& cfg, const TrainHooks& hooks = {});

struct BaselineResult {
  int task_id = 0;
  double accuracy = 0.0;
  RunStatus status = RunStatus::kRunning;
  std::int64_t iterations = 0;
};

/// Trains a fresh single-task model with the given head on one task.
BaselineResult train_baseline(const MultiTaskDataset& dataset, int task_id, const TrainConfig& cfg,
                              const HeadConfig& head);

struct FinetuneResult {
  double accuracy = 0.0;
  RunStatus status = RunStatus::kRunning;
  std::int64_t iterations = 0;
};

/// Fine-tunes on task `task_id` of `downstream` with a fresh head, starting
/// the backbone from `checkpoint` or from random init when absent.
FinetuneResult finetune(const std::optional<std::filesystem::path>& checkpoint, const MultiTaskDataset& downstream,
                        int task_id, const TrainConfig& cfg, double epochs);

}  // namespace mtl

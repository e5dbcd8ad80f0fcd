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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mtl {

struct TaskSpec {
  int task_id = 0;
  std::string name;
  int num_classes = 2;
  int num_examples = 2;  // train + test
  int group_id = 0;

  bool operator==(const TaskSpec&) const = default;
};

struct Example {
  int task_id = 0;
  int label = 0;
  std::vector<int> text_tokens;
  std::vector<std::vector<double>> image_embeddings;
  /// Position in the task's generation order; defines canonical ordering.
  int index = 0;

  bool operator==(const Example&) const = default;
};

struct TaskData {
  std::vector<Example> train;
  std::vector<Example> test;

  bool operator==(const TaskData&) const = default;
};

/// Knobs of the synthetic generator. Defaults give a 100-task collection
/// with heavy-tailed task sizes and class counts.
struct GenConfig {
  int num_tasks = 100;
  int latent_dim = 16;
  int vocab_size = 512;
  /// Probability that a class prototype is copied from the shared pool.
  double correlation = 0.7;
  /// log-normal task sizes: ln N_T ~ Normal(size_mu, size_sigma).
  double size_mu = 6.907755278982137;  // ln 1000
  double size_sigma = 1.0;
  int min_examples = 20;
  int max_examples = 0;  // 0 = no cap
  /// log-uniform class counts in [class_min, class_max].
  int class_min = 4;
  int class_max = 128;
  double label_noise = 0.05;
  double example_noise = 0.5;
  double prototype_jitter = 0.3;
  double image_noise = 0.1;
  double token_range = 3.0;
  int tokens_per_example = 16;
  int images_min = 1;
  int images_max = 3;
  int d_img = 16;
  double test_fraction = 0.2;
  std::uint64_t seed = 1;

  bool operator==(const GenConfig&) const = default;
  void validate() const;
};

struct MultiTaskDataset {
  std::vector<TaskSpec> tasks;
  std::vector<TaskData> data;
  int vocab_size = 0;
  int d_img = 0;
  int max_text_len = 0;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::optional<GenConfig> generation;

  bool operator==(const MultiTaskDataset&) const = default;

  std::size_t num_tasks() const noexcept { return tasks.size(); }
  std::vector<std::int64_t> train_sizes() const;
  std::vector<std::int64_t> total_sizes() const;
  std::int64_t total_train() const;
  /// Checks every TaskSpec/Example invariant; throws a dataset error.
  void validate() const;
};

/// Construction bookkeeping of generate(): where each class prototype came
/// from (-1 = drawn fresh) and its latent value.
struct GenTrace {
  std::vector<std::vector<double>> pool;
  std::vector<std::vector<int>> prototype_source;
  std::vector<std::vector<std::vector<double>>> prototypes;
};

MultiTaskDataset generate(const GenConfig& cfg, GenTrace* trace = nullptr);

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per-task shuffled split with |test| = round(fraction * N_T).
std::vector<SplitIndices> split(std::span<const int> task_sizes, double fraction, std::uint64_t seed);

/// Appends one generated task whose size is scale_factor times the largest
/// existing task. Requires a synthetic dataset.
MultiTaskDataset add_oversized_task(const MultiTaskDataset& dataset, double scale_factor);

/// Keeps the listed tasks, renumbered densely in the given order.
MultiTaskDataset subset(const MultiTaskDataset& dataset, std::span<const int> task_ids);

void export_dataset(const MultiTaskDataset& dataset, const std::filesystem::path& dir);
MultiTaskDataset ingest(const std::filesystem::path& dir);

/// Canonical manifest text, also used for run fingerprints.
std::string manifest_text(const MultiTaskDataset& dataset);

}  // namespace mtl

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

#include "mtlkit/dypa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtlkit/datagen.hpp"
#include "mtlkit/errors.hpp"

namespace mtl {

std::string to_string(ComplexitySource source) {
  return source == ComplexitySource::kExampleCount ? "example_count" : "class_count";
}

ComplexitySource parse_complexity_source(const std::string& name) {
  if (name == "example_count") return ComplexitySource::kExampleCount;
  if (name == "class_count") return ComplexitySource::kClassCount;
  fail(ErrorKind::kConfig, "unknown dypa source '" + name + "'");
}

std::vector<ComplexityScore> score_tasks(std::span<const std::int64_t> raw_counts) {
  const std::size_t k = raw_counts.size();
  if (k < 4) fail(ErrorKind::kConfig, "DyPA needs at least 4 tasks, got " + std::to_string(k));
  std::vector<ComplexityScore> scores(k);
  double mean = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    if (raw_counts[t] < 1) fail(ErrorKind::kConfig, "complexity counts must be >= 1");
    scores[t].task_id = static_cast<int>(t);
    scores[t].raw = raw_counts[t];
    mean += std::log(static_cast<double>(raw_counts[t]));
  }
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (const auto& s : scores) {
    const double d = std::log(static_cast<double>(s.raw)) - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(k));
  for (auto& s : scores) s.normalized = sd > 0.0 ? (std::log(static_cast<double>(s.raw)) - mean) / sd : 0.0;

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw_counts[a] < raw_counts[b]; });
  for (std::size_t rank = 0; rank < k; ++rank) scores[order[rank]].quartile = static_cast<int>(rank * 4 / k) + 1;
  return scores;
}

std::vector<std::int64_t> complexity_counts(const MultiTaskDataset& dataset, ComplexitySource source) {
  if (source == ComplexitySource::kExampleCount) return dataset.train_sizes();
  std::vector<std::int64_t> out;
  out.reserve(dataset.tasks.size());
  for (const auto& t : dataset.tasks) out.push_back(t.num_classes);
  return out;
}

HeadAllocation allocate(std::span<const ComplexityScore> scores, const DypaConfig& cfg, int d_backbone,
                        std::span<const int> num_classes) {
  if (!(cfg.growth >= 1.0)) fail(ErrorKind::kConfig, "DyPA growth must be >= 1");
  if (cfg.base_dt < 1) fail(ErrorKind::kConfig, "DyPA base_dt must be >= 1");
  if (num_classes.size() != scores.size()) fail(ErrorKind::kConfig, "class counts do not cover every scored task");
  const double top = cfg.base_dt * std::pow(cfg.growth, 3.0);
  if (top > cfg.width_limit * d_backbone) {
    fail(ErrorKind::kConfig, "DyPA top width " + std::to_string(top) + " exceeds " + std::to_string(cfg.width_limit) +
                                 " x backbone width " + std::to_string(d_backbone));
  }
  HeadAllocation alloc(scores.size());
  for (const auto& s : scores) {
    if (s.task_id < 0 || static_cast<std::size_t>(s.task_id) >= scores.size()) {
      fail(ErrorKind::kConfig, "score task ids must be dense");
    }
    const auto width = static_cast<int>(std::lround(cfg.base_dt * std::pow(cfg.growth, s.quartile - 1)));
    HeadConfig h{HeadKind::kAttention, d_backbone, width, cfg.attn_heads, num_classes[static_cast<std::size_t>(s.task_id)]};
    if (width % cfg.attn_heads != 0) {
      fail(ErrorKind::kConfig, "DyPA width " + std::to_string(width) + " not divisible by " +
                                   std::to_string(cfg.attn_heads) + " attention heads");
    }
    h.validate(cfg.width_limit);
    alloc[static_cast<std::size_t>(s.task_id)] = h;
  }
  return alloc;
}

std::int64_t allocation_param_total(const HeadAllocation& allocation) {
  std::int64_t total = 0;
  for (const auto& h : allocation) total += param_count(h);
  return total;
}

}  // namespace mtl

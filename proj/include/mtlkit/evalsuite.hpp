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

namespace mtl {

class MtlModel;
struct MultiTaskDataset;

/// Per-task test accuracies and the mean / top-10% / bottom-10% aggregates.
/// Cohorts are picked by task size (ties to the lower task id) and never
/// by accuracy.
struct MetricReport {
  std::vector<int> task_ids;
  std::vector<double> accuracies;
  std::vector<std::int64_t> cohort_sizes;  // sizes used to pick T10/B10
  double mean_acc = 0.0;
  double t10_acc = 0.0;
  double b10_acc = 0.0;
  std::vector<int> t10;
  std::vector<int> b10;
  std::string timestamp;
  std::string fingerprint;

  double accuracy_of(int task_id) const;
};

/// ceil(0.1 * K)
std::size_t cohort_size(std::size_t num_tasks);

/// Builds the aggregates from per-task accuracies.
MetricReport summarize(std::span<const int> task_ids, std::span<const double> accuracies,
                       std::span<const std::int64_t> cohort_sizes);

/// Accuracy of every task head on its test split. Cohorts use train-split
/// sizes unless `cohort_by_total` is set.
MetricReport evaluate(const MtlModel& model, const MultiTaskDataset& dataset, bool cohort_by_total = false);

double task_accuracy(const MtlModel& model, const MultiTaskDataset& dataset, int task_id);

struct ComparisonRow {
  std::string name;
  double mean_acc = 0.0, t10_acc = 0.0, b10_acc = 0.0;
  double d_mean = 0.0, d_t10 = 0.0, d_b10 = 0.0;
};

struct ComparisonTable {
  std::vector<int> common_tasks;
  std::size_t baseline = 0;
  std::vector<ComparisonRow> rows;
};

/// Aligns reports on their common task set, recomputes aggregates there and
/// reports deltas against row `baseline`.
ComparisonTable compare(std::span<const MetricReport> reports, std::span<const std::string> names,
                        std::size_t baseline = 0);

std::string to_text(const ComparisonTable& table);
std::string to_csv(const ComparisonTable& table);

/// Report file (JSON) and companion per-task CSV.
std::string report_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
std::string report_csv(const MetricReport& report);

/// Current UTC time, ISO-8601.
std::string utc_timestamp();

}  // namespace mtl

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

#include "mtlkit/evalsuite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mtlkit/datagen.hpp"
#include "mtlkit/errors.hpp"
#include "mtlkit/model.hpp"

namespace mtl {

using nlohmann::json;

double MetricReport::accuracy_of(int task_id) const {
  for (std::size_t i = 0; i < task_ids.size(); ++i)
    if (task_ids[i] == task_id) return accuracies[i];
  fail(ErrorKind::kEvaluation, "report has no task " + std::to_string(task_id));
}

std::size_t cohort_size(std::size_t num_tasks) { return (num_tasks + 9) / 10; }

MetricReport summarize(std::span<const int> task_ids, std::span<const double> accuracies,
                       std::span<const std::int64_t> cohort_sizes) {
  const std::size_t k = task_ids.size();
  if (k == 0) fail(ErrorKind::kEvaluation, "no tasks to summarize");
  if (accuracies.size() != k || cohort_sizes.size() != k) fail(ErrorKind::kEvaluation, "report columns differ in length");
  MetricReport r;
  r.task_ids.assign(task_ids.begin(), task_ids.end());
  r.accuracies.assign(accuracies.begin(), accuracies.end());
  r.cohort_sizes.assign(cohort_sizes.begin(), cohort_sizes.end());
  r.mean_acc = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(k);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = cohort_size(k);
  // Largest first; equal sizes resolved toward the lower task id.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cohort_sizes[a] != cohort_sizes[b]) return cohort_sizes[a] > cohort_sizes[b];
    return task_ids[a] < task_ids[b];
  });
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.t10.push_back(task_ids[order[i]]);
    top += accuracies[order[i]];
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cohort_sizes[a] != cohort_sizes[b]) return cohort_sizes[a] < cohort_sizes[b];
    return task_ids[a] < task_ids[b];
  });
  double bottom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.b10.push_back(task_ids[order[i]]);
    bottom += accuracies[order[i]];
  }
  r.t10_acc = top / static_cast<double>(n);
  r.b10_acc = bottom / static_cast<double>(n);
  return r;
}

double task_accuracy(const MtlModel& model, const MultiTaskDataset& dataset, int task_id) {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= dataset.data.size()) {
    fail(ErrorKind::kEvaluation, "dataset has no task " + std::to_string(task_id));
  }
  const auto& test = dataset.data[static_cast<std::size_t>(task_id)].test;
  if (test.empty()) fail(ErrorKind::kEvaluation, "task " + std::to_string(task_id) + " has an empty test split");
  std::size_t correct = 0;
  for (const auto& ex : test) correct += model.predict(ex) == ex.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

MetricReport evaluate(const MtlModel& model, const MultiTaskDataset& dataset, bool cohort_by_total) {
  if (model.num_heads() < dataset.num_tasks()) {
    fail(ErrorKind::kEvaluation, "model has " + std::to_string(model.num_heads()) + " heads for " +
                                     std::to_string(dataset.num_tasks()) + " tasks");
  }
  std::vector<int> ids(dataset.num_tasks());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<double> acc(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) acc[t] = task_accuracy(model, dataset, ids[t]);
  const auto sizes = cohort_by_total ? dataset.total_sizes() : dataset.train_sizes();
  MetricReport r = summarize(ids, acc, sizes);
  r.timestamp = utc_timestamp();
  return r;
}

ComparisonTable compare(std::span<const MetricReport> reports, std::span<const std::string> names, std::size_t baseline) {
  if (reports.empty()) fail(ErrorKind::kComparison, "nothing to compare");
  if (names.size() != reports.size()) fail(ErrorKind::kComparison, "one name per report required");
  if (baseline >= reports.size()) fail(ErrorKind::kComparison, "baseline row out of range");

  std::set<int> common(reports[0].task_ids.begin(), reports[0].task_ids.end());
  for (const auto& r : reports.subspan(1)) {
    std::set<int> ids(r.task_ids.begin(), r.task_ids.end());
    std::set<int> keep;
    std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::inserter(keep, keep.begin()));
    common = std::move(keep);
  }
  if (common.empty()) fail(ErrorKind::kComparison, "reports share no tasks");

  ComparisonTable table;
  table.common_tasks.assign(common.begin(), common.end());
  table.baseline = baseline;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::vector<int> ids;
    std::vector<double> acc;
    std::vector<std::int64_t> sizes;
    for (std::size_t j = 0; j < r.task_ids.size(); ++j) {
      if (!common.contains(r.task_ids[j])) continue;
      ids.push_back(r.task_ids[j]);
      acc.push_back(r.accuracies[j]);
      sizes.push_back(r.cohort_sizes.empty() ? 0 : r.cohort_sizes[j]);
    }
    const MetricReport sub = summarize(ids, acc, sizes);
    table.rows.push_back(ComparisonRow{names[i], sub.mean_acc, sub.t10_acc, sub.b10_acc, 0, 0, 0});
  }
  const ComparisonRow base = table.rows[baseline];
  for (auto& row : table.rows) {
    row.d_mean = row.mean_acc - base.mean_acc;
    row.d_t10 = row.t10_acc - base.t10_acc;
    row.d_b10 = row.b10_acc - base.b10_acc;
  }
  return table;
}

namespace {

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

std::string signed_pct(double v) {
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

}  // namespace

std::string to_text(const ComparisonTable& table) {
  std::size_t width = 4;
  for (const auto& r : table.rows) width = std::max(width, r.name.size());
  std::ostringstream os;
  os << "tasks compared: " << table.common_tasks.size() << "  baseline: " << table.rows[table.baseline].name << '\n';
  os << std::left << std::setw(static_cast<int>(width)) << "run" << "  " << std::right << std::setw(8) << "mean"
     << std::setw(9) << "d_mean" << std::setw(8) << "T10" << std::setw(9) << "d_T10" << std::setw(8) << "B10"
     << std::setw(9) << "d_B10" << '\n';
  for (const auto& r : table.rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << std::right << std::setw(8)
       << pct(r.mean_acc) << std::setw(9) << signed_pct(r.d_mean) << std::setw(8) << pct(r.t10_acc) << std::setw(9)
       << signed_pct(r.d_t10) << std::setw(8) << pct(r.b10_acc) << std::setw(9) << signed_pct(r.d_b10) << '\n';
  }
  return os.str();
}

std::string to_csv(const ComparisonTable& table) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "run,mean_acc,t10_acc,b10_acc,d_mean,d_t10,d_b10\n";
  for (const auto& r : table.rows) {
    os << r.name << ',' << r.mean_acc << ',' << r.t10_acc << ',' << r.b10_acc << ',' << r.d_mean << ',' << r.d_t10
       << ',' << r.d_b10 << '\n';
  }
  return os.str();
}

std::string report_json(const MetricReport& r) {
  json j{{"task_ids", r.task_ids},
         {"accuracies", r.accuracies},
         {"cohort_sizes", r.cohort_sizes},
         {"mean_acc", r.mean_acc},
         {"t10_acc", r.t10_acc},
         {"b10_acc", r.b10_acc},
         {"t10_tasks", r.t10},
         {"b10_tasks", r.b10},
         {"timestamp", r.timestamp},
         {"fingerprint", r.fingerprint}};
  return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MetricReport r;
    r.task_ids = j.at("task_ids").get<std::vector<int>>();
    r.accuracies = j.at("accuracies").get<std::vector<double>>();
    r.cohort_sizes = j.at("cohort_sizes").get<std::vector<std::int64_t>>();
    r.mean_acc = j.at("mean_acc").get<double>();
    r.t10_acc = j.at("t10_acc").get<double>();
    r.b10_acc = j.at("b10_acc").get<double>();
    r.t10 = j.at("t10_tasks").get<std::vector<int>>();
    r.b10 = j.at("b10_tasks").get<std::vector<int>>();
    r.timestamp = j.value("timestamp", std::string{});
    r.fingerprint = j.value("fingerprint", std::string{});
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::kComparison, std::string("malformed report: ") + e.what());
  }
}

std::string report_csv(const MetricReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << "task_id,cohort_size,accuracy\n";
  for (std::size_t i = 0; i < r.task_ids.size(); ++i) {
    os << r.task_ids[i] << ',' << (r.cohort_sizes.empty() ? 0 : r.cohort_sizes[i]) << ',' << r.accuracies[i] << '\n';
  }
  return os.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace mtl

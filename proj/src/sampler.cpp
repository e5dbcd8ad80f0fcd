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

#include "mtlkit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mtlkit/errors.hpp"

namespace mtl {

std::string to_string(AlphaKind kind) {
  switch (kind) {
    case AlphaKind::kConstant: return "constant";
    case AlphaKind::kLinear: return "linear";
    case AlphaKind::kExponential: return "exponential";
    case AlphaKind::kCosine: return "cosine";
    case AlphaKind::kDemon: return "demon";
  }
  return "constant";
}

AlphaKind parse_alpha_kind(const std::string& name) {
  for (auto k : {AlphaKind::kConstant, AlphaKind::kLinear, AlphaKind::kExponential, AlphaKind::kCosine,
                 AlphaKind::kDemon}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::kConfig, "unknown sampler kind '" + name + "'");
}

void AlphaSchedule::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(alpha_start) || !in_unit(alpha_end)) fail(ErrorKind::kConfig, "alpha values must lie in [0,1]");
  if (kind != AlphaKind::kConstant && alpha_start < alpha_end) {
    fail(ErrorKind::kConfig, "alpha schedules decay: alpha_start must be >= alpha_end");
  }
  if (kind == AlphaKind::kExponential && !(exp_rate > 0.0)) fail(ErrorKind::kConfig, "exp_rate must be > 0");
  if (kind == AlphaKind::kDemon && !(demon_ref > 0.0 && demon_ref < 1.0)) {
    fail(ErrorKind::kConfig, "demon_ref must lie in (0,1)");
  }
}

double alpha_at(const AlphaSchedule& s, double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kProgress, "progress " + std::to_string(p) + " outside [0,1]");
  const double span = s.alpha_start - s.alpha_end;
  switch (s.kind) {
    case AlphaKind::kConstant:
      return s.alpha_start;
    case AlphaKind::kLinear:
      return s.alpha_start * (1.0 - p) + s.alpha_end * p;
    case AlphaKind::kCosine:
      return s.alpha_end + span * (1.0 + std::cos(std::numbers::pi * p)) / 2.0;
    case AlphaKind::kExponential: {
      const double floor = std::exp(-s.exp_rate);
      return s.alpha_end + span * (std::exp(-s.exp_rate * p) - floor) / (1.0 - floor);
    }
    case AlphaKind::kDemon: {
      const double rest = 1.0 - p;
      return s.alpha_end + span * rest / ((1.0 - s.demon_ref) + s.demon_ref * rest);
    }
  }
  return s.alpha_start;
}

std::vector<double> task_distribution(std::span<const std::int64_t> sizes, double alpha) {
  if (sizes.empty()) fail(ErrorKind::kConfig, "task_distribution over an empty task list");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::kConfig, "alpha must lie in [0,1]");
  const auto largest = static_cast<double>(*std::max_element(sizes.begin(), sizes.end()));
  std::vector<double> p(sizes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) fail(ErrorKind::kConfig, "task sizes must be >= 1");
    // Normalize by the largest size first; N^a / M^a keeps the ratio exact
    // and avoids overflow for large a * ln N.
    p[i] = std::pow(static_cast<double>(sizes[i]) / largest, alpha);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

TaskSampler::TaskSampler(SamplingPolicy policy, std::vector<std::int64_t> sizes)
    : policy_(policy), sizes_(std::move(sizes)), rng_(make_stream(policy.seed, {kStreamSampler})) {
  policy_.schedule.validate();
  if (policy_.repetition < 1) fail(ErrorKind::kConfig, "repetition_k must be >= 1");
  if (sizes_.empty()) fail(ErrorKind::kConfig, "sampler needs at least one task");
}

int TaskSampler::next_task(std::int64_t iteration, std::int64_t total_iterations) {
  if (total_iterations < 1) fail(ErrorKind::kProgress, "total_iterations must be >= 1");
  if (iteration < 0 || iteration >= total_iterations) {
    fail(ErrorKind::kProgress, "iteration " + std::to_string(iteration) + " outside [0," +
                                   std::to_string(total_iterations) + ")");
  }
  if (current_ && iteration % policy_.repetition != 0) return *current_;

  const double alpha = alpha_at(policy_.schedule, static_cast<double>(iteration) / static_cast<double>(total_iterations));
  if (alpha != cached_alpha_ || cumulative_.empty()) {
    const auto p = task_distribution(sizes_, alpha);
    cumulative_.resize(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) cumulative_[i] = (acc += p[i]);
    cached_alpha_ = alpha;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng_) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  current_ = static_cast<int>(it - cumulative_.begin());
  last_alpha_ = alpha;
  return *current_;
}

}  // namespace mtl

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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtlkit/datagen.hpp"
#include "mtlkit/trainer.hpp"

namespace mtl {

/// Every tunable of a run as dotted "section.key" strings. Construction
/// fills the defaults; files and command-line flags override them. Unknown
/// keys are rejected.
class ExperimentConfig {
 public:
  ExperimentConfig();

  /// Defaults overlaid with an INI file ([section] / key = value).
  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig parse(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.contains(key); }
  const std::string& get(const std::string& key) const;

  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

  /// Resolved configuration in INI form, sections and keys sorted.
  std::string to_text() const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

GenConfig gen_config(const ExperimentConfig& cfg);
TrainConfig train_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Hash of the resolved config (minus output location) and the dataset
/// manifest.
std::string run_fingerprint(const ExperimentConfig& cfg, const std::string& manifest);

}  // namespace mtl

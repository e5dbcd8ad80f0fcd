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

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mtlkit/config.hpp"
#include "mtlkit/errors.hpp"

namespace mtl {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitDiverged = 4,
  kExitIo = 5,
};

int exit_code_for(ErrorKind kind);

/// Root under which run directories are created: run.output_dir, else the
/// MTLKIT_OUTPUT_ROOT environment variable, else "./runs".
std::filesystem::path output_root(const ExperimentConfig& cfg);

/// Ingests data.path when set, otherwise generates from the data.* keys
/// (appending the oversized task when data.oversized > 0).
MultiTaskDataset load_or_generate(const ExperimentConfig& cfg);

// Subcommands. Each returns a process exit code and reports failures on
// `log`; library errors are mapped through exit_code_for().
int cmd_generate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train_baseline(const ExperimentConfig& cfg, std::ostream& log);
int cmd_ablate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_finetune(const ExperimentConfig& cfg, std::ostream& log);
int cmd_report(const std::vector<std::filesystem::path>& runs, std::size_t baseline,
               const std::filesystem::path& csv_out, std::ostream& log);

/// Ablation variant overrides: vanilla (data-size sampling, fixed heads),
/// alpha_decay (exponential 1.0 -> 0.1), alpha_decay_dypa (plus DyPA).
void apply_variant(ExperimentConfig& cfg, const std::string& variant);

}  // namespace mtl

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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mtlkit/commands.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<int> num_tasks;
  std::optional<double> oversized;
  std::optional<std::string> sampler;
  std::optional<double> alpha_start;
  std::optional<double> alpha_end;
  std::optional<int> repetition;
  std::optional<std::string> dypa;
  std::optional<std::string> heads;
  std::optional<std::string> seeds;
  std::optional<std::string> name;
  std::optional<std::string> output;
  std::optional<std::string> data;
  std::optional<double> epochs;
  std::optional<int> jobs;
  std::optional<std::string> variants;
  std::optional<std::string> task_counts;
  std::optional<std::string> init;
  std::optional<int> task;
  bool compare = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
  sub->add_option("--set", o.sets, "override KEY=VALUE (repeatable)");
  sub->add_option("--name", o.name, "run name");
  sub->add_option("--output", o.output, "output root directory");
  sub->add_option("--data", o.data, "dataset directory");
  sub->add_option("--num-tasks", o.num_tasks, "number of generated tasks");
  sub->add_option("--oversized", o.oversized, "append an oversized task (size multiplier)");
  sub->add_option("--seeds", o.seeds, "comma-separated seeds");
}

void add_training(CLI::App* sub, Overrides& o) {
  sub->add_option("--sampler", o.sampler, "alpha schedule: constant|linear|cosine|exponential|demon");
  sub->add_option("--alpha-start", o.alpha_start, "alpha at the start of training");
  sub->add_option("--alpha-end", o.alpha_end, "alpha at the end of training");
  sub->add_option("--repetition", o.repetition, "consecutive iterations per sampled task");
  sub->add_option("--dypa", o.dypa, "dynamic head allocation on|off")->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--heads", o.heads, "head kind fc|attention")->check(CLI::IsMember({"fc", "attention"}));
  sub->add_option("--epochs", o.epochs, "training epochs");
}

mtl::ExperimentConfig resolve(const Overrides& o) {
  mtl::ExperimentConfig cfg = o.config_path.empty() ? mtl::ExperimentConfig{} : mtl::ExperimentConfig::load(o.config_path);
  auto put = [&](const char* key, const auto& v) {
    if (!v) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>) cfg.set(key, *v);
    else cfg.set(key, std::to_string(*v));
  };
  put("data.num_tasks", o.num_tasks);
  put("data.oversized", o.oversized);
  put("data.path", o.data);
  put("sampler.kind", o.sampler);
  put("sampler.alpha_start", o.alpha_start);
  put("sampler.alpha_end", o.alpha_end);
  put("sampler.repetition_k", o.repetition);
  if (o.dypa) cfg.set("dypa.enabled", *o.dypa == "on" ? "true" : "false");
  put("heads.kind", o.heads);
  put("run.seeds", o.seeds);
  put("run.name", o.name);
  put("run.output_dir", o.output);
  put("trainer.epochs", o.epochs);
  put("ablate.jobs", o.jobs);
  put("ablate.variants", o.variants);
  put("ablate.task_counts", o.task_counts);
  put("finetune.init", o.init);
  put("finetune.task", o.task);
  if (o.compare) cfg.set("finetune.compare", "true");
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) mtl::fail(mtl::ErrorKind::kConfig, "--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtlkit: large-scale multi-task learning toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("generate", "generate and export a synthetic multi-task dataset");
  add_common(gen, o);

  auto* train = app.add_subcommand("train", "multi-task training run (one directory per seed)");
  add_common(train, o);
  add_training(train, o);

  auto* base = app.add_subcommand("train-baseline", "one model per task");
  add_common(base, o);
  add_training(base, o);

  auto* ablate = app.add_subcommand("ablate", "variant x task-count grid");
  add_common(ablate, o);
  add_training(ablate, o);
  ablate->add_option("--jobs", o.jobs, "parallel cells");
  ablate->add_option("--variants", o.variants, "comma-separated variants");
  ablate->add_option("--task-counts", o.task_counts, "comma-separated task counts");

  auto* ft = app.add_subcommand("finetune", "fine-tune one task from random or checkpoint init");
  add_common(ft, o);
  add_training(ft, o);
  ft->add_option("--init", o.init, "'random' or a checkpoint path");
  ft->add_option("--task", o.task, "downstream task id");
  ft->add_flag("--compare", o.compare, "also run the random-init arm");

  std::vector<std::string> runs;
  std::size_t baseline = 0;
  std::string csv_out;
  auto* report = app.add_subcommand("report", "compare run reports");
  report->add_option("runs", runs, "run directories or report.json files")->required();
  report->add_option("--baseline", baseline, "index of the reference run");
  report->add_option("--csv", csv_out, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mtl::kExitConfig;
  }

  if (report->parsed()) {
    std::vector<std::filesystem::path> paths(runs.begin(), runs.end());
    return mtl::cmd_report(paths, baseline, csv_out, std::cout);
  }

  mtl::ExperimentConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const mtl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mtl::exit_code_for(e.kind());
  }
  if (gen->parsed()) return mtl::cmd_generate(cfg, std::cout);
  if (train->parsed()) return mtl::cmd_train(cfg, std::cout);
  if (base->parsed()) return mtl::cmd_train_baseline(cfg, std::cout);
  if (ablate->parsed()) return mtl::cmd_ablate(cfg, std::cout);
  return mtl::cmd_finetune(cfg, std::cout);
}

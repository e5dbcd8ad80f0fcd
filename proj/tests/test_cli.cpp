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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

#include "mtlkit/commands.hpp"
#include "mtlkit/config.hpp"
#include "mtlkit/datagen.hpp"
#include "mtlkit/evalsuite.hpp"

namespace mtl {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mtlkit_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny(const fs::path& root) {
  ExperimentConfig c;
  c.set("run.output_dir", root.string());
  c.set("data.num_tasks", "6");
  c.set("data.size_median", "40");
  c.set("data.size_sigma", "0.4");
  c.set("data.class_min", "3");
  c.set("data.class_max", "5");
  c.set("data.tokens_per_example", "4");
  c.set("data.images_max", "1");
  c.set("data.d_img", "4");
  c.set("data.vocab_size", "32");
  c.set("backbone.layers", "1");
  c.set("backbone.hidden", "16");
  c.set("backbone.heads", "2");
  c.set("backbone.ff", "16");
  c.set("backbone.max_len", "10");
  c.set("backbone.max_images", "1");
  c.set("heads.d_t", "8");
  c.set("heads.attn_heads", "2");
  c.set("dypa.base_dt", "4");
  c.set("dypa.growth", "1.0");
  c.set("trainer.epochs", "1");
  c.set("trainer.eval_points", "2");
  return c;
}

TEST(Config, ParseOverridesAndRejectsUnknownKeys) {
  const auto c = ExperimentConfig::parse("[trainer]\nepochs = 3\n[run]\nname = x\n");
  EXPECT_EQ(c.get_int("trainer.epochs"), 3);
  EXPECT_EQ(c.get("run.name"), "x");
  EXPECT_EQ(c.get("sampler.kind"), "exponential");
  try {
    ExperimentConfig::parse("[trainer]\nepochz = 3\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  ExperimentConfig d;
  EXPECT_THROW(d.set("nope.key", "1"), Error);
  d.set("trainer.epochs", "abc");
  EXPECT_THROW(d.get_int("trainer.epochs"), Error);
}

TEST(Config, TextRoundTripAndFingerprint) {
  ExperimentConfig a = tiny("/tmp/a");
  const auto b = ExperimentConfig::parse(a.to_text());
  EXPECT_EQ(a.entries(), b.entries());
  ExperimentConfig moved = a;
  moved.set("run.output_dir", "/elsewhere");
  EXPECT_EQ(run_fingerprint(a, "m"), run_fingerprint(moved, "m"));
  EXPECT_NE(run_fingerprint(a, "m"), run_fingerprint(a, "n"));
  ExperimentConfig other = a;
  other.set("trainer.epochs", "2");
  EXPECT_NE(run_fingerprint(a, "m"), run_fingerprint(other, "m"));
  EXPECT_EQ(hex64(fnv1a("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(ExitCodes, KindsMapToDocumentedCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kProgress), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::kDataset), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kIngestion), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kLabel), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kIo), 5);
  EXPECT_EQ(exit_code_for(ErrorKind::kCheckpoint), 5);
  EXPECT_EQ(exit_code_for(ErrorKind::kEvaluation), 1);
}

TEST(OutputRoot, ConfigThenEnvironmentThenDefault) {
  ExperimentConfig c;
  ::unsetenv("MTLKIT_OUTPUT_ROOT");
  EXPECT_EQ(output_root(c), fs::path("runs"));
  ::setenv("MTLKIT_OUTPUT_ROOT", "/tmp/envroot", 1);
  EXPECT_EQ(output_root(c), fs::path("/tmp/envroot"));
  c.set("run.output_dir", "/tmp/cfgroot");
  EXPECT_EQ(output_root(c), fs::path("/tmp/cfgroot"));
  ::unsetenv("MTLKIT_OUTPUT_ROOT");
}

TEST(Generate, HonorsTaskCountAndOversized) {
  const fs::path root = scratch("gen");
  ExperimentConfig c = tiny(root);
  c.set("run.name", "g");
  c.set("data.num_tasks", "5");
  c.set("data.oversized", "10");
  std::ostringstream log;
  ASSERT_EQ(cmd_generate(c, log), 0) << log.str();
  const auto ds = ingest(root / "g" / "dataset");
  ASSERT_EQ(ds.num_tasks(), 6u);
  std::int64_t largest = 0;
  for (std::size_t t = 0; t < 5; ++t) largest = std::max<std::int64_t>(largest, ds.tasks[t].num_examples);
  EXPECT_EQ(ds.tasks[5].num_examples, 10 * largest);

  // The exported directory is ingested, not regenerated.
  ExperimentConfig again = tiny(root);
  again.set("data.path", (root / "g" / "dataset").string());
  again.set("data.num_tasks", "2");
  EXPECT_EQ(load_or_generate(again), ds);
}

TEST(Train, WritesSeedDirectoriesAndIsReproducible) {
  const fs::path root = scratch("train");
  ExperimentConfig c = tiny(root);
  c.set("run.name", "t");
  c.set("run.seeds", "1,2");
  std::ostringstream log;
  ASSERT_EQ(cmd_train(c, log), 0) << log.str();
  for (const char* s : {"seed_1", "seed_2"}) {
    const fs::path d = root / "t" / s;
    for (const char* f : {"config.ini", "metrics.jsonl", "report.json", "report.csv", "model.ckpt", "status.json"})
      EXPECT_TRUE(fs::exists(d / f)) << d / f;
    const auto st = nlohmann::json::parse(slurp(d / "status.json"));
    EXPECT_EQ(st["status"], "converged");
  }
  EXPECT_TRUE(fs::exists(root / "t" / "aggregate.txt"));
  EXPECT_NE(slurp(root / "t" / "seed_1" / "config.ini").find("seeds = 1"), std::string::npos);
  const std::string first = slurp(root / "t" / "seed_1" / "metrics.jsonl");
  EXPECT_NE(first, slurp(root / "t" / "seed_2" / "metrics.jsonl"));

  c.set("run.output_dir", (root / "again").string());
  ASSERT_EQ(cmd_train(c, log), 0);
  EXPECT_EQ(first, slurp(root / "again" / "t" / "seed_1" / "metrics.jsonl"));
  const auto ra = report_from_json(slurp(root / "t" / "seed_1" / "report.json"));
  const auto rb = report_from_json(slurp(root / "again" / "t" / "seed_1" / "report.json"));
  EXPECT_EQ(ra.accuracies, rb.accuracies);
  EXPECT_EQ(ra.fingerprint, rb.fingerprint);
}

TEST(Train, ConfigErrorReturnsTwo) {
  const fs::path root = scratch("badcfg");
  ExperimentConfig c = tiny(root);
  c.set("sampler.kind", "bogus");
  std::ostringstream log;
  EXPECT_EQ(cmd_train(c, log), 2);
  EXPECT_NE(log.str().find("error:"), std::string::npos);
  c = tiny(root);
  c.set("data.class_max", "64");  // more classes than vocabulary
  EXPECT_EQ(cmd_train(c, log), 2);
}

TEST(TrainBaseline, OneModelPerListedTask) {
  const fs::path root = scratch("baseline");
  ExperimentConfig c = tiny(root);
  c.set("run.name", "b");
  c.set("baseline.tasks", "0,3");
  std::ostringstream log;
  ASSERT_EQ(cmd_train_baseline(c, log), 0) << log.str();
  const auto r = report_from_json(slurp(root / "b" / "seed_1" / "report.json"));
  EXPECT_EQ(r.task_ids, (std::vector<int>{0, 3}));
  c.set("baseline.tasks", "9");
  EXPECT_EQ(cmd_train_baseline(c, log), 3);
}

TEST(Ablate, GridTableAndCachedRerun) {
  const fs::path root = scratch("ablate");
  ExperimentConfig c = tiny(root);
  c.set("run.name", "a");
  c.set("ablate.task_counts", "4");
  c.set("ablate.jobs", "3");
  std::ostringstream log;
  ASSERT_EQ(cmd_ablate(c, log), 0) << log.str();
  const std::string table = slurp(root / "a" / "ablation.txt");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);  // header + 3 variants
  for (const char* v : {"vanilla", "alpha_decay ", "alpha_decay_dypa"}) EXPECT_NE(table.find(v), std::string::npos);
  const fs::path cell = root / "a" / "cells" / "vanilla_n4_s1";
  const auto stamp = fs::last_write_time(cell / "report.json");

  std::ostringstream rerun;
  ASSERT_EQ(cmd_ablate(c, rerun), 0);
  EXPECT_NE(rerun.str().find("cached"), std::string::npos);
  EXPECT_EQ(fs::last_write_time(cell / "report.json"), stamp);
  EXPECT_EQ(slurp(root / "a" / "ablation.txt"), table);

  c.set("ablate.variants", "vanilla,nonsense");
  EXPECT_EQ(cmd_ablate(c, log), 2);
  c.set("ablate.variants", "vanilla");
  c.set("ablate.task_counts", "7");
  EXPECT_EQ(cmd_ablate(c, log), 2);
}

TEST(Finetune, MissingCheckpointIsIoError) {
  const fs::path root = scratch("ft");
  ExperimentConfig c = tiny(root);
  c.set("finetune.init", (root / "absent.ckpt").string());
  std::ostringstream log;
  EXPECT_EQ(cmd_finetune(c, log), 5);
}

TEST(Finetune, ComparesRandomAndCheckpointArms) {
  const fs::path root = scratch("ft2");
  ExperimentConfig c = tiny(root);
  c.set("run.name", "src");
  std::ostringstream log;
  ASSERT_EQ(cmd_train(c, log), 0) << log.str();
  c.set("run.name", "ft");
  c.set("finetune.init", (root / "src" / "seed_1" / "model.ckpt").string());
  c.set("finetune.compare", "true");
  c.set("finetune.epochs", "1");
  ASSERT_EQ(cmd_finetune(c, log), 0) << log.str();
  const std::string csv = slurp(root / "ft" / "finetune.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("random,1,"), std::string::npos);
}

TEST(Report, ComparesRunDirectories) {
  const fs::path root = scratch("report");
  ExperimentConfig c = tiny(root);
  c.set("run.seeds", "1,2");
  c.set("run.name", "r");
  std::ostringstream log;
  ASSERT_EQ(cmd_train(c, log), 0) << log.str();
  std::ostringstream out;
  const fs::path csv = root / "cmp.csv";
  ASSERT_EQ(cmd_report({root / "r" / "seed_1", root / "r" / "seed_2"}, 0, csv, out), 0) << out.str();
  EXPECT_NE(out.str().find("seed_2"), std::string::npos);
  EXPECT_EQ(slurp(csv).substr(0, 3), "run");
  EXPECT_EQ(cmd_report({root / "missing"}, 0, {}, out), 5);
}

#ifdef MTLKIT_CLI
int run_cli(const std::string& args) {
  const int rc = std::system((std::string(MTLKIT_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Binary, ExitCodes) {
  const fs::path root = scratch("bin");
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("train --no-such-flag"), 2);
  EXPECT_EQ(run_cli("train --set trainer.nope=1"), 2);
  EXPECT_EQ(run_cli("train --dypa maybe"), 2);
  EXPECT_EQ(run_cli("finetune --output " + root.string() + " --init " + (root / "x.ckpt").string()), 5);
  EXPECT_EQ(run_cli("report " + (root / "nothing").string()), 5);
  EXPECT_EQ(run_cli("generate --output " + root.string() + " --name g --num-tasks 3 --set data.size_median=30"), 0);
  EXPECT_EQ(ingest(root / "g" / "dataset").num_tasks(), 3u);
  EXPECT_EQ(run_cli("train --data " + (root / "nothing").string() + " --set data.num_tasks=0 --output " +
                    root.string()),
            2);
}

TEST(Binary, OutputRootFromEnvironment) {
  const fs::path root = scratch("env");
  const std::string cmd = "MTLKIT_OUTPUT_ROOT=" + root.string() + " " + std::string(MTLKIT_CLI) +
                          " generate --name e --num-tasks 2 --set data.size_median=30 > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(root / "e" / "dataset" / "manifest"));
}
#endif

}  // namespace
}  // namespace mtl

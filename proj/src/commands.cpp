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

#include "mtlkit/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "mtlkit/datagen.hpp"
#include "mtlkit/evalsuite.hpp"
#include "mtlkit/model.hpp"
#include "mtlkit/trainer.hpp"

namespace mtl {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kProgress:
      return kExitConfig;
    case ErrorKind::kDataset:
    case ErrorKind::kIngestion:
    case ErrorKind::kInput:
    case ErrorKind::kLabel:
      return kExitData;
    case ErrorKind::kIo:
    case ErrorKind::kCheckpoint:
      return kExitIo;
    default:
      return kExitFailure;
  }
}

fs::path output_root(const ExperimentConfig& cfg) {
  if (!cfg.get("run.output_dir").empty()) return cfg.get("run.output_dir");
  if (const char* env = std::getenv("MTLKIT_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

MultiTaskDataset load_or_generate(const ExperimentConfig& cfg) {
  MultiTaskDataset ds;
  if (!cfg.get("data.path").empty() && fs::exists(fs::path(cfg.get("data.path")) / "manifest")) {
    ds = ingest(cfg.get("data.path"));
  } else {
    ds = generate(gen_config(cfg));
  }
  const double oversized = cfg.get_double("data.oversized");
  if (oversized > 0.0) ds = add_oversized_task(ds, oversized);
  return ds;
}

namespace {

struct Stat {
  double mean = 0.0;
  double sd = 0.0;
};

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::string pm(const Stat& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * s.mean << "% +- " << 100.0 * s.sd;
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

struct SingleRun {
  RunStatus status = RunStatus::kRunning;
  MetricReport report;
  std::string divergence;
};

/// Trains one seed into `dir`: config.ini, metrics.jsonl, report.json,
/// report.csv, model.ckpt, status.
SingleRun run_one(const ExperimentConfig& cfg, const MultiTaskDataset& dataset, std::uint64_t seed, const fs::path& dir) {
  ExperimentConfig c = cfg;
  c.set("run.seeds", std::to_string(seed));
  fs::create_directories(dir);
  write_file(dir / "config.ini", c.to_text());
  const std::string fingerprint = run_fingerprint(c, manifest_text(dataset));

  TrainConfig t = train_config(c);
  t.seed = seed;
  MtlModel model(t.backbone, build_allocation(dataset, t), seed);

  std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics) fail(ErrorKind::kIo, "cannot write " + (dir / "metrics.jsonl").string());
  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRecord& r) { metrics << metrics_line(r) << '\n' << std::flush; };
  hooks.checkpoint = dir / "model.ckpt";
  hooks.fingerprint = fingerprint;
  TrainResult r = train(model, dataset, t, hooks);

  r.report.fingerprint = fingerprint;
  write_file(dir / "report.json", report_json(r.report));
  write_file(dir / "report.csv", report_csv(r.report));
  json status{{"status", to_string(r.status)},
              {"fingerprint", fingerprint},
              {"iterations", r.completed_iterations},
              {"total_iterations", r.total_iterations},
              {"divergence", r.divergence}};
  write_file(dir / "status.json", status.dump(2) + "\n");
  return SingleRun{r.status, r.report, r.divergence};
}

std::string aggregate_text(const std::string& title, const std::vector<std::uint64_t>& seeds,
                           const std::vector<MetricReport>& reports) {
  std::vector<double> mean, t10, b10;
  for (const auto& r : reports) {
    mean.push_back(r.mean_acc);
    t10.push_back(r.t10_acc);
    b10.push_back(r.b10_acc);
  }
  std::ostringstream os;
  os << title << " (" << seeds.size() << " seed" << (seeds.size() == 1 ? "" : "s") << ")\n";
  os << "mean_acc: " << pm(stat_of(mean)) << '\n';
  os << "t10_acc:  " << pm(stat_of(t10)) << '\n';
  os << "b10_acc:  " << pm(stat_of(b10)) << '\n';
  return os.str();
}

}  // namespace

int cmd_generate(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const MultiTaskDataset ds = load_or_generate(cfg);
    const fs::path dest = cfg.get("data.path").empty() ? output_root(cfg) / cfg.get("run.name") / "dataset"
                                                        : fs::path(cfg.get("data.path"));
    export_dataset(ds, dest);
    log << "wrote " << ds.num_tasks() << " tasks (" << ds.total_train() << " train examples) to " << dest.string()
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    train_config(cfg);  // surface config errors before touching data
    const MultiTaskDataset ds = load_or_generate(cfg);
    const auto seeds = cfg.get_u64_list("run.seeds");
    if (seeds.empty()) fail(ErrorKind::kConfig, "run.seeds is empty");
    const fs::path base = output_root(cfg) / cfg.get("run.name");
    std::vector<MetricReport> reports;
    bool diverged = false;
    for (auto s : seeds) {
      const fs::path dir = base / ("seed_" + std::to_string(s));
      const SingleRun r = run_one(cfg, ds, s, dir);
      log << "seed " << s << ": " << to_string(r.status) << "  mean " << r.report.mean_acc << "  T10 "
          << r.report.t10_acc << "  B10 " << r.report.b10_acc << "  -> " << dir.string() << '\n';
      if (r.status == RunStatus::kDiverged) {
        diverged = true;
        log << "  diverged: " << r.divergence << '\n';
      }
      reports.push_back(r.report);
    }
    const std::string agg = aggregate_text(cfg.get("run.name"), seeds, reports);
    write_file(base / "aggregate.txt", agg);
    log << agg;
    return static_cast<int>(diverged ? kExitDiverged : kExitOk);
  });
}

int cmd_train_baseline(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const TrainConfig base_cfg = train_config(cfg);
    const MultiTaskDataset ds = load_or_generate(cfg);
    std::vector<int> tasks;
    for (auto t : cfg.get_u64_list("baseline.tasks")) tasks.push_back(static_cast<int>(t));
    if (tasks.empty()) {
      tasks.resize(ds.num_tasks());
      std::iota(tasks.begin(), tasks.end(), 0);
    }
    const HeadAllocation alloc = build_allocation(ds, base_cfg);
    const auto seeds = cfg.get_u64_list("run.seeds");
    if (seeds.empty()) fail(ErrorKind::kConfig, "run.seeds is empty");
    const fs::path base = output_root(cfg) / cfg.get("run.name");
    const auto sizes = ds.train_sizes();
    std::vector<MetricReport> reports;
    bool diverged = false;
    for (auto s : seeds) {
      TrainConfig t = base_cfg;
      t.seed = s;
      std::vector<int> ids;
      std::vector<double> acc;
      std::vector<std::int64_t> cohort;
      std::ostringstream csv;
      csv << std::setprecision(17) << "task_id,train_size,accuracy,status\n";
      for (int task : tasks) {
        if (task < 0 || static_cast<std::size_t>(task) >= ds.num_tasks()) {
          fail(ErrorKind::kDataset, "baseline.tasks names unknown task " + std::to_string(task));
        }
        const BaselineResult r = train_baseline(ds, task, t, alloc[static_cast<std::size_t>(task)]);
        diverged = diverged || r.status == RunStatus::kDiverged;
        ids.push_back(task);
        acc.push_back(r.accuracy);
        cohort.push_back(sizes[static_cast<std::size_t>(task)]);
        csv << task << ',' << sizes[static_cast<std::size_t>(task)] << ',' << r.accuracy << ',' << to_string(r.status)
            << '\n';
      }
      MetricReport rep = summarize(ids, acc, cohort);
      rep.timestamp = utc_timestamp();
      ExperimentConfig c = cfg;
      c.set("run.seeds", std::to_string(s));
      rep.fingerprint = run_fingerprint(c, manifest_text(ds));
      const fs::path dir = base / ("seed_" + std::to_string(s));
      write_file(dir / "config.ini", c.to_text());
      write_file(dir / "baseline.csv", csv.str());
      write_file(dir / "report.json", report_json(rep));
      write_file(dir / "report.csv", report_csv(rep));
      log << "seed " << s << ": baseline mean " << rep.mean_acc << " over " << ids.size() << " tasks\n";
      reports.push_back(std::move(rep));
    }
    const std::string agg = aggregate_text(cfg.get("run.name") + " baseline", seeds, reports);
    write_file(base / "aggregate.txt", agg);
    log << agg;
    return static_cast<int>(diverged ? kExitDiverged : kExitOk);
  });
}

void apply_variant(ExperimentConfig& cfg, const std::string& variant) {
  if (variant == "vanilla") {
    cfg.set("sampler.kind", "constant");
    cfg.set("sampler.alpha_start", "1.0");
    cfg.set("sampler.alpha_end", "1.0");
    cfg.set("dypa.enabled", "false");
  } else if (variant == "alpha_decay" || variant == "alpha_decay_dypa") {
    cfg.set("sampler.kind", "exponential");
    cfg.set("sampler.alpha_start", "1.0");
    cfg.set("sampler.alpha_end", "0.1");
    cfg.set("dypa.enabled", variant == "alpha_decay_dypa" ? "true" : "false");
  } else {
    fail(ErrorKind::kConfig, "unknown ablation variant '" + variant + "'");
  }
}

int cmd_ablate(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    train_config(cfg);
    std::vector<std::string> variants;
    {
      std::stringstream ss(cfg.get("ablate.variants"));
      std::string v;
      while (std::getline(ss, v, ','))
        if (!v.empty()) variants.push_back(v);
    }
    if (variants.empty()) fail(ErrorKind::kConfig, "ablate.variants is empty");
    for (const auto& v : variants) {
      ExperimentConfig probe = cfg;
      apply_variant(probe, v);
    }
    const auto counts = cfg.get_u64_list("ablate.task_counts");
    const auto seeds = cfg.get_u64_list("run.seeds");
    if (counts.empty() || seeds.empty()) fail(ErrorKind::kConfig, "ablate needs task_counts and seeds");
    const int jobs = std::max(1, cfg.get_int("ablate.jobs"));

    const MultiTaskDataset full = load_or_generate(cfg);
    const fs::path base = output_root(cfg) / cfg.get("run.name");

    struct Cell {
      std::string variant;
      std::uint64_t count = 0;
      std::uint64_t seed = 0;
      fs::path dir;
      bool cached = false;
      std::string error;
      RunStatus status = RunStatus::kRunning;
      MetricReport report;
    };
    std::vector<Cell> cells;
    for (auto n : counts)
      for (const auto& v : variants)
        for (auto s : seeds)
          {
            Cell cell;
            cell.variant = v;
            cell.count = n;
            cell.seed = s;
            cell.dir = base / "cells" / (v + "_n" + std::to_string(n) + "_s" + std::to_string(s));
            cells.push_back(std::move(cell));
          }

    std::map<std::uint64_t, MultiTaskDataset> subsets;
    for (auto n : counts) {
      if (n < 1 || n > full.num_tasks()) {
        fail(ErrorKind::kConfig, "task count " + std::to_string(n) + " outside dataset of " +
                                     std::to_string(full.num_tasks()) + " tasks");
      }
      std::vector<int> ids(n);
      std::iota(ids.begin(), ids.end(), 0);
      subsets.emplace(n, subset(full, ids));
    }

    auto run_cell = [&](Cell& cell) {
      try {
        ExperimentConfig c = cfg;
        apply_variant(c, cell.variant);
        c.set("run.name", cfg.get("run.name") + "/" + cell.dir.filename().string());
        c.set("run.seeds", std::to_string(cell.seed));
        const MultiTaskDataset& ds = subsets.at(cell.count);
        const std::string fp = run_fingerprint(c, manifest_text(ds));
        const fs::path status_path = cell.dir / "status.json";
        if (fs::exists(status_path) && fs::exists(cell.dir / "report.json")) {
          const json st = json::parse(read_file(status_path));
          if (st.value("fingerprint", std::string{}) == fp) {
            cell.cached = true;
            cell.report = report_from_json(read_file(cell.dir / "report.json"));
            cell.status = st.value("status", std::string{}) == "diverged" ? RunStatus::kDiverged : RunStatus::kConverged;
            return;
          }
        }
        const SingleRun r = run_one(c, ds, cell.seed, cell.dir);
        cell.status = r.status;
        cell.report = r.report;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    };

    for (std::size_t i = 0; i < cells.size(); i += static_cast<std::size_t>(jobs)) {
      std::vector<std::future<void>> running;
      for (std::size_t j = i; j < std::min(cells.size(), i + static_cast<std::size_t>(jobs)); ++j) {
        running.push_back(std::async(std::launch::async, run_cell, std::ref(cells[j])));
      }
      for (auto& f : running) f.get();
    }

    std::ostringstream table, csv;
    csv << std::setprecision(17) << "tasks,variant,alpha_decay,dypa,seeds,mean_acc,mean_sd,t10_acc,b10_acc,failed\n";
    table << std::left << std::setw(8) << "# tasks" << std::setw(20) << "variant" << std::setw(10) << "a-decay"
          << std::setw(7) << "DyPA" << "mean accuracy\n";
    bool any_failed = false;
    for (auto n : counts) {
      for (const auto& v : variants) {
        std::vector<double> mean, t10, b10;
        int failed = 0;
        for (const auto& cell : cells) {
          if (cell.count != n || cell.variant != v) continue;
          if (!cell.error.empty()) {
            ++failed;
            log << "cell " << cell.dir.filename().string() << " failed: " << cell.error << '\n';
            continue;
          }
          if (cell.cached) log << "cell " << cell.dir.filename().string() << " cached\n";
          mean.push_back(cell.report.mean_acc);
          t10.push_back(cell.report.t10_acc);
          b10.push_back(cell.report.b10_acc);
        }
        any_failed = any_failed || failed > 0;
        const bool decay = v != "vanilla";
        const bool dypa = v == "alpha_decay_dypa";
        table << std::left << std::setw(8) << n << std::setw(20) << v << std::setw(10) << (decay ? "yes" : "no")
              << std::setw(7) << (dypa ? "yes" : "no") << (mean.empty() ? std::string("n/a") : pm(stat_of(mean)))
              << (failed ? "  (" + std::to_string(failed) + " failed)" : std::string{}) << '\n';
        csv << n << ',' << v << ',' << decay << ',' << dypa << ',' << mean.size() << ',' << stat_of(mean).mean << ','
            << stat_of(mean).sd << ',' << stat_of(t10).mean << ',' << stat_of(b10).mean << ',' << failed << '\n';
      }
    }
    write_file(base / "ablation.txt", table.str());
    write_file(base / "ablation.csv", csv.str());
    log << table.str();
    return static_cast<int>(any_failed ? kExitFailure : kExitOk);
  });
}

int cmd_finetune(const ExperimentConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    const TrainConfig base_cfg = train_config(cfg);
    const std::string init = cfg.get("finetune.init");
    std::vector<std::string> arms;
    if (cfg.get_bool("finetune.compare") && init != "random") arms = {"random", init};
    else arms = {init};
    for (const auto& a : arms) {
      if (a != "random" && !fs::exists(a)) fail(ErrorKind::kIo, "checkpoint not found: " + a);
    }
    const MultiTaskDataset ds = load_or_generate(cfg);
    const int task = cfg.get_int("finetune.task");
    const double epochs = cfg.get_double("finetune.epochs");
    const auto seeds = cfg.get_u64_list("run.seeds");
    if (seeds.empty()) fail(ErrorKind::kConfig, "run.seeds is empty");

    std::ostringstream csv, text;
    csv << std::setprecision(17) << "init,seed,accuracy,status\n";
    text << "fine-tuning task " << task << " for " << epochs << " epochs\n";
    for (const auto& arm : arms) {
      std::vector<double> acc;
      for (auto s : seeds) {
        TrainConfig t = base_cfg;
        t.seed = s;
        std::optional<fs::path> ckpt;
        if (arm != "random") ckpt = fs::path(arm);
        const FinetuneResult r = finetune(ckpt, ds, task, t, epochs);
        acc.push_back(r.accuracy);
        csv << arm << ',' << s << ',' << r.accuracy << ',' << to_string(r.status) << '\n';
      }
      text << std::left << std::setw(40) << ("init=" + arm) << pm(stat_of(acc)) << '\n';
    }
    const fs::path base = output_root(cfg) / cfg.get("run.name");
    write_file(base / "config.ini", cfg.to_text());
    write_file(base / "finetune.csv", csv.str());
    write_file(base / "finetune.txt", text.str());
    log << text.str();
    return static_cast<int>(kExitOk);
  });
}

int cmd_report(const std::vector<fs::path>& runs, std::size_t baseline, const fs::path& csv_out, std::ostream& log) {
  return guarded(log, [&] {
    if (runs.empty()) fail(ErrorKind::kConfig, "report needs at least one run");
    std::vector<MetricReport> reports;
    std::vector<std::string> names;
    for (const auto& r : runs) {
      const fs::path file = fs::is_directory(r) ? r / "report.json" : r;
      reports.push_back(report_from_json(read_file(file)));
      names.push_back(fs::is_directory(r) ? r.filename().string() : r.parent_path().filename().string());
      if (names.back().empty()) names.back() = r.string();
    }
    const ComparisonTable table = compare(reports, names, baseline);
    log << to_text(table);
    if (!csv_out.empty()) write_file(csv_out, to_csv(table));
    return static_cast<int>(kExitOk);
  });
}

}  // namespace mtl

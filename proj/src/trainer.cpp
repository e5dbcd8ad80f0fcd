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

#include "mtlkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "mtlkit/errors.hpp"
#include "mtlkit/rng.hpp"

namespace mtl {

std::string to_string(LrKind kind) {
  switch (kind) {
    case LrKind::kFixed: return "fixed";
    case LrKind::kFreezeThenUnfreeze: return "freeze";
    case LrKind::kWarmupStep: return "warmup_step";
  }
  return "fixed";
}

LrKind parse_lr_kind(const std::string& name) {
  if (name == "fixed") return LrKind::kFixed;
  if (name == "freeze") return LrKind::kFreezeThenUnfreeze;
  if (name == "warmup_step") return LrKind::kWarmupStep;
  fail(ErrorKind::kConfig, "unknown lr policy '" + name + "'");
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kRunning: return "running";
    case RunStatus::kConverged: return "converged";
    case RunStatus::kDiverged: return "diverged";
  }
  return "running";
}

void LrPolicy::validate() const {
  if (!(low > 0.0 && high > 0.0)) fail(ErrorKind::kConfig, "learning rates must be > 0");
  if (!(step_factor > 0.0)) fail(ErrorKind::kConfig, "lr step factor must be > 0");
  if (!(0.0 < warmup_end && warmup_end < step1 && step1 < step2 && step2 < 1.0)) {
    fail(ErrorKind::kConfig, "lr breakpoints must be strictly increasing inside (0,1)");
  }
}

LrPoint lr_at(const LrPolicy& policy, double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::kProgress, "progress " + std::to_string(p) + " outside [0,1]");
  switch (policy.kind) {
    case LrKind::kFixed:
      return {policy.low, false};
    case LrKind::kFreezeThenUnfreeze:
      return p < policy.warmup_end ? LrPoint{policy.high, true} : LrPoint{policy.high / policy.step_factor, false};
    case LrKind::kWarmupStep:
      if (p < policy.warmup_end) return {policy.low + (policy.high - policy.low) * (p / policy.warmup_end), false};
      if (p < policy.step1) return {policy.high, false};
      if (p < policy.step2) return {policy.high / policy.step_factor, false};
      return {policy.high / (policy.step_factor * policy.step_factor), false};
  }
  return {policy.low, false};
}

std::string metrics_line(const MetricsRecord& r) {
  nlohmann::json j{{"iteration", r.iteration}, {"epoch_fraction", r.epoch_fraction},
                   {"alpha", r.alpha},         {"lr", r.lr},
                   {"loss", r.loss},           {"mean_acc", r.mean_acc},
                   {"t10_acc", r.t10_acc},     {"b10_acc", r.b10_acc}};
  return j.dump();
}

std::int64_t iterations_per_epoch(const MultiTaskDataset& dataset, int batch_size) {
  if (batch_size < 1) fail(ErrorKind::kConfig, "batch_size must be >= 1");
  const std::int64_t n = dataset.total_train();
  if (n < 1) fail(ErrorKind::kDataset, "dataset has no training examples");
  return (n + batch_size - 1) / batch_size;
}

std::int64_t total_iterations(const MultiTaskDataset& dataset, int batch_size, double epochs) {
  if (!(epochs > 0.0)) fail(ErrorKind::kConfig, "epochs must be > 0");
  const auto ipe = iterations_per_epoch(dataset, batch_size);
  return std::max<std::int64_t>(1, std::llround(epochs * static_cast<double>(ipe)));
}

HeadAllocation build_allocation(const MultiTaskDataset& dataset, const TrainConfig& cfg) {
  const int d_b = cfg.backbone.hidden;
  std::vector<int> classes;
  for (const auto& t : dataset.tasks) classes.push_back(t.num_classes);
  if (cfg.dypa_enabled && dataset.num_tasks() >= 4) {
    const auto scores = score_tasks(complexity_counts(dataset, cfg.dypa.source));
    return allocate(scores, cfg.dypa, d_b, classes);
  }
  HeadAllocation alloc;
  for (int c : classes) alloc.push_back(HeadConfig{cfg.heads.kind, d_b, cfg.heads.d_t, cfg.heads.attn_heads, c});
  return alloc;
}

namespace {

void zero_touched(ParamStore& params) {
  params.for_each([](Parameter& p) {
    if (!p.has_grad) return;
    p.grad.fill(0.0);
    p.has_grad = false;
  });
}

std::vector<std::int64_t> eval_iterations(std::int64_t total, int points) {
  std::set<std::int64_t> at;
  const int n = std::max(1, points);
  for (int e = 1; e <= n; ++e) {
    at.insert(std::max<std::int64_t>(1, std::llround(static_cast<double>(total) * e / n)));
  }
  return {at.begin(), at.end()};
}

}  // namespace

TrainResult train(MtlModel& model, const MultiTaskDataset& dataset, const TrainConfig& cfg, const TrainHooks& hooks) {
  dataset.validate();
  cfg.lr.validate();
  if (model.num_heads() != dataset.num_tasks()) {
    fail(ErrorKind::kConfig, "model has " + std::to_string(model.num_heads()) + " heads for " +
                                 std::to_string(dataset.num_tasks()) + " tasks");
  }
  const auto sizes = dataset.train_sizes();
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    if (sizes[t] < 1) fail(ErrorKind::kDataset, "task " + std::to_string(t) + " has no training examples");
  }

  TrainResult result;
  result.iterations_per_epoch = iterations_per_epoch(dataset, cfg.batch_size);
  result.total_iterations = total_iterations(dataset, cfg.batch_size, cfg.epochs);
  const std::int64_t total = result.total_iterations;
  const auto evals = eval_iterations(total, cfg.eval_points);

  TaskSampler sampler(SamplingPolicy{cfg.schedule, cfg.repetition, cfg.seed}, sizes);
  Rng batch_rng = make_stream(cfg.seed, {kStreamBatch});
  AdamW optimizer(cfg.adamw);
  ParamStore& params = model.params();
  params.zero_grad();

  std::optional<bool> frozen;
  double loss_sum = 0.0;
  std::int64_t loss_count = 0;
  std::size_t next_eval = 0;
  std::vector<const Example*> batch;
  result.status = RunStatus::kRunning;

  for (std::int64_t it = 0; it < total; ++it) {
    const double progress = static_cast<double>(it) / static_cast<double>(total);
    const LrPoint lr = lr_at(cfg.lr, progress);
    if (!frozen || *frozen != lr.frozen) {
      model.backbone().set_frozen(lr.frozen, cfg.freeze_embeddings);
      frozen = lr.frozen;
    }
    const int task = sampler.next_task(it, total);
    const auto& pool = dataset.data[static_cast<std::size_t>(task)].train;
    const std::size_t bs = std::min(static_cast<std::size_t>(cfg.batch_size), pool.size());
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    batch.clear();
    for (std::size_t b = 0; b < bs; ++b) batch.push_back(&pool[pick(batch_rng)]);

    double loss_value = 0.0;
    bool finite = true;
    {
      Graph g;
      Var loss = model.batch_loss(g, batch);
      loss_value = loss.value()[0];
      finite = std::isfinite(loss_value);
      if (finite) {
        g.backward(loss);
        finite = optimizer.step(params, lr.lr);
      }
    }
    zero_touched(params);
    loss_sum += loss_value;
    ++loss_count;
    result.completed_iterations = it + 1;

    const bool at_eval = next_eval < evals.size() && evals[next_eval] == it + 1;
    if (!finite || at_eval) {
      if (at_eval) ++next_eval;
      MetricsRecord rec;
      rec.iteration = it + 1;
      rec.epoch_fraction = static_cast<double>(it + 1) / static_cast<double>(result.iterations_per_epoch);
      rec.alpha = sampler.last_alpha();
      rec.lr = lr.lr;
      rec.loss = loss_sum / static_cast<double>(loss_count);
      result.report = evaluate(model, dataset, cfg.cohort_by_total);
      result.report.fingerprint = hooks.fingerprint;
      rec.mean_acc = result.report.mean_acc;
      rec.t10_acc = result.report.t10_acc;
      rec.b10_acc = result.report.b10_acc;
      result.log.push_back(rec);
      if (hooks.on_metrics) hooks.on_metrics(rec);
      loss_sum = 0.0;
      loss_count = 0;
    }
    if (!finite) {
      result.status = RunStatus::kDiverged;
      result.divergence = "non-finite " + std::string(std::isfinite(loss_value) ? "parameters" : "loss") +
                          " at iteration " + std::to_string(it + 1) + " (task " + std::to_string(task) + ")";
      break;
    }
  }
  if (result.status == RunStatus::kRunning) result.status = RunStatus::kConverged;
  model.backbone().set_frozen(false, cfg.freeze_embeddings);
  if (hooks.checkpoint) save_checkpoint(model, *hooks.checkpoint, hooks.fingerprint);
  return result;
}

BaselineResult train_baseline(const MultiTaskDataset& dataset, int task_id, const TrainConfig& cfg,
                              const HeadConfig& head) {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= dataset.num_tasks()) {
    fail(ErrorKind::kDataset, "baseline: unknown task " + std::to_string(task_id));
  }
  const int ids[] = {task_id};
  const MultiTaskDataset single = subset(dataset, ids);
  TrainConfig c = cfg;
  c.epochs = cfg.baseline_epochs > 0.0 ? cfg.baseline_epochs : cfg.epochs;
  c.dypa_enabled = false;
  c.schedule = AlphaSchedule{};
  c.repetition = 1;
  c.eval_points = 1;
  MtlModel model(c.backbone, HeadAllocation{head}, c.seed);
  const TrainResult r = train(model, single, c);
  return BaselineResult{task_id, r.report.accuracies.at(0), r.status, r.completed_iterations};
}

FinetuneResult finetune(const std::optional<std::filesystem::path>& checkpoint, const MultiTaskDataset& downstream,
                        int task_id, const TrainConfig& cfg, double epochs) {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= downstream.num_tasks()) {
    fail(ErrorKind::kDataset, "finetune: unknown task " + std::to_string(task_id));
  }
  const int ids[] = {task_id};
  const MultiTaskDataset single = subset(downstream, ids);
  TrainConfig c = cfg;
  c.epochs = epochs;
  c.dypa_enabled = false;
  c.schedule = AlphaSchedule{};
  c.repetition = 1;
  c.eval_points = 1;
  const HeadConfig head{cfg.heads.kind, cfg.backbone.hidden, cfg.heads.d_t, cfg.heads.attn_heads,
                        single.tasks[0].num_classes};
  MtlModel model(c.backbone, HeadAllocation{head}, c.seed);
  if (checkpoint) {
    if (!std::filesystem::exists(*checkpoint)) fail(ErrorKind::kIo, "checkpoint not found: " + checkpoint->string());
    load_checkpoint(model, *checkpoint, LoadScope::kBackboneOnly);
  }
  const TrainResult r = train(model, single, c);
  return FinetuneResult{r.report.accuracies.at(0), r.status, r.completed_iterations};
}

}  // namespace mtl

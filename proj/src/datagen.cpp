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

#include "mtlkit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mtlkit/errors.hpp"
#include "mtlkit/rng.hpp"

namespace mtl {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

struct Globals {
  std::vector<std::vector<double>> pool;          // class_max x latent_dim
  std::vector<std::vector<double>> image_matrix;  // d_img x latent_dim
  std::vector<double> image_bias;                 // d_img
};

Globals make_globals(const GenConfig& cfg) {
  Rng rng = make_stream(cfg.seed, {kStreamGlobal});
  std::normal_distribution<double> normal(0.0, 1.0);
  Globals g;
  g.pool.assign(static_cast<std::size_t>(cfg.class_max), std::vector<double>(cfg.latent_dim));
  for (auto& p : g.pool)
    for (auto& v : p) v = normal(rng);
  const double a_scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  g.image_matrix.assign(static_cast<std::size_t>(cfg.d_img), std::vector<double>(cfg.latent_dim));
  for (auto& row : g.image_matrix)
    for (auto& v : row) v = a_scale * normal(rng);
  g.image_bias.resize(static_cast<std::size_t>(cfg.d_img));
  for (auto& v : g.image_bias) v = 0.1 * normal(rng);
  return g;
}

struct GeneratedTask {
  TaskSpec spec;
  std::vector<Example> examples;
  std::vector<int> source;
  std::vector<std::vector<double>> prototypes;
};

GeneratedTask generate_task(const GenConfig& cfg, const Globals& globals, int task_id, std::optional<int> forced_size) {
  Rng rng = make_stream(cfg.seed, {kStreamTask, static_cast<std::uint64_t>(task_id)});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double log_c = std::log(cfg.class_min) + unit(rng) * (std::log(cfg.class_max) - std::log(cfg.class_min));
  const int classes = std::clamp(static_cast<int>(std::lround(std::exp(log_c))), cfg.class_min, cfg.class_max);
  int size = static_cast<int>(std::lround(std::exp(cfg.size_mu + cfg.size_sigma * normal(rng))));
  size = std::max({size, cfg.min_examples, classes, 2});
  if (cfg.max_examples > 0) size = std::min(size, std::max(cfg.max_examples, classes));
  if (forced_size) size = std::max(*forced_size, classes);

  GeneratedTask out;
  out.spec = TaskSpec{task_id, "task_" + std::to_string(task_id), classes, size, task_id / 2};
  const auto dz = static_cast<std::size_t>(cfg.latent_dim);
  out.prototypes.assign(static_cast<std::size_t>(classes), std::vector<double>(dz));
  out.source.assign(static_cast<std::size_t>(classes), -1);
  for (int c = 0; c < classes; ++c) {
    auto& proto = out.prototypes[static_cast<std::size_t>(c)];
    if (unit(rng) < cfg.correlation) {
      out.source[static_cast<std::size_t>(c)] = c;
      const auto& shared = globals.pool[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < dz; ++j) proto[j] = shared[j] + cfg.prototype_jitter * normal(rng);
    } else {
      for (auto& v : proto) v = normal(rng);
    }
  }

  const int bins = cfg.vocab_size / cfg.latent_dim;
  std::uniform_int_distribution<int> image_count(cfg.images_min, cfg.images_max);
  std::vector<double> z(dz);
  out.examples.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    Example ex;
    ex.task_id = task_id;
    ex.index = i;
    const int cls = i % classes;
    const auto& proto = out.prototypes[static_cast<std::size_t>(cls)];
    for (std::size_t j = 0; j < dz; ++j) z[j] = proto[j] + cfg.example_noise * normal(rng);
    ex.label = cls;
    if (cfg.label_noise > 0.0 && unit(rng) < cfg.label_noise) {
      std::uniform_int_distribution<int> other(0, classes - 2);
      const int o = other(rng);
      ex.label = o >= cls ? o + 1 : o;
    }
    ex.text_tokens.resize(static_cast<std::size_t>(cfg.tokens_per_example));
    for (int t = 0; t < cfg.tokens_per_example; ++t) {
      const int coord = t % cfg.latent_dim;
      const double u = (z[static_cast<std::size_t>(coord)] + cfg.token_range) / (2.0 * cfg.token_range);
      const int bin = std::clamp(static_cast<int>(std::floor(u * bins)), 0, bins - 1);
      ex.text_tokens[static_cast<std::size_t>(t)] = coord * bins + bin;
    }
    const int n_img = image_count(rng);
    ex.image_embeddings.assign(static_cast<std::size_t>(n_img), std::vector<double>(static_cast<std::size_t>(cfg.d_img)));
    for (auto& emb : ex.image_embeddings) {
      for (std::size_t r = 0; r < emb.size(); ++r) {
        double acc = globals.image_bias[r];
        for (std::size_t j = 0; j < dz; ++j) acc += globals.image_matrix[r][j] * z[j];
        emb[r] = acc + cfg.image_noise * normal(rng);
      }
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

TaskData split_task(std::vector<Example> examples, const SplitIndices& idx) {
  TaskData d;
  d.train.reserve(idx.train.size());
  d.test.reserve(idx.test.size());
  for (auto i : idx.train) d.train.push_back(std::move(examples[i]));
  for (auto i : idx.test) d.test.push_back(std::move(examples[i]));
  return d;
}

SplitIndices split_one(std::size_t n, double fraction, std::uint64_t seed, int task_id) {
  if (n < 2) {
    fail(ErrorKind::kDataset, "task " + std::to_string(task_id) + " has " + std::to_string(n) +
                                  " examples; a split needs at least 2");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(seed, {kStreamSplit, static_cast<std::uint64_t>(task_id)});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  SplitIndices s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

}  // namespace

void GenConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::kConfig, what); };
  if (num_tasks < 1) bad("num_tasks must be >= 1");
  if (latent_dim < 1) bad("latent_dim must be >= 1");
  if (vocab_size < 2) bad("vocab_size must be >= 2");
  if (!(correlation >= 0.0 && correlation <= 1.0)) bad("correlation must lie in [0,1]");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) bad("label_noise must lie in [0,0.5)");
  if (!(size_sigma >= 0.0) || !std::isfinite(size_mu)) bad("invalid task size distribution");
  if (class_min < 2 || class_max < class_min) bad("class range must satisfy 2 <= class_min <= class_max");
  if (class_max > vocab_size) {
    bad("class_max " + std::to_string(class_max) + " exceeds vocab_size " + std::to_string(vocab_size));
  }
  if (vocab_size / latent_dim < 2) bad("vocab_size must provide at least 2 token bins per latent coordinate");
  if (min_examples < 0 || max_examples < 0) bad("example bounds must be non-negative");
  if (max_examples > 0 && max_examples < min_examples) bad("max_examples < min_examples");
  if (example_noise < 0.0 || prototype_jitter < 0.0 || image_noise < 0.0) bad("noise scales must be >= 0");
  if (!(token_range > 0.0)) bad("token_range must be > 0");
  if (tokens_per_example < 1) bad("tokens_per_example must be >= 1");
  if (images_min < 0 || images_max < images_min) bad("image count range must satisfy 0 <= min <= max");
  if (d_img < 1) bad("d_img must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) bad("test_fraction must lie in (0,1)");
}

std::vector<std::int64_t> MultiTaskDataset::train_sizes() const {
  std::vector<std::int64_t> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(static_cast<std::int64_t>(d.train.size()));
  return out;
}

std::vector<std::int64_t> MultiTaskDataset::total_sizes() const {
  std::vector<std::int64_t> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(t.num_examples);
  return out;
}

std::int64_t MultiTaskDataset::total_train() const {
  std::int64_t n = 0;
  for (const auto& d : data) n += static_cast<std::int64_t>(d.train.size());
  return n;
}

void MultiTaskDataset::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::kDataset, what); };
  if (tasks.empty()) bad("dataset has no tasks");
  if (data.size() != tasks.size()) bad("task data count does not match task list");
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& spec = tasks[t];
    const std::string tag = "task " + std::to_string(spec.task_id);
    if (spec.task_id != static_cast<int>(t)) bad("task ids must be dense 0..K-1; found " + tag + " at " + std::to_string(t));
    if (spec.num_classes < 2) bad(tag + " has fewer than 2 classes");
    if (spec.num_examples < spec.num_classes) bad(tag + " has fewer examples than classes");
    const auto& d = data[t];
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * spec.num_examples));
    if (d.train.size() + d.test.size() != static_cast<std::size_t>(spec.num_examples) || d.test.size() != n_test) {
      bad(tag + " split sizes " + std::to_string(d.train.size()) + "/" + std::to_string(d.test.size()) +
          " inconsistent with num_examples " + std::to_string(spec.num_examples));
    }
    std::set<int> seen;
    for (const auto* part : {&d.train, &d.test}) {
      for (const auto& ex : *part) {
        if (ex.task_id != spec.task_id) bad(tag + " holds an example of task " + std::to_string(ex.task_id));
        if (ex.label < 0 || ex.label >= spec.num_classes) bad(tag + " example label out of range");
        if (static_cast<int>(ex.text_tokens.size()) > max_text_len) bad(tag + " example exceeds max_text_len");
        for (int tok : ex.text_tokens)
          if (tok < 0 || tok >= vocab_size) bad(tag + " token id out of range");
        for (const auto& e : ex.image_embeddings)
          if (static_cast<int>(e.size()) != d_img) bad(tag + " image embedding width mismatch");
        if (!seen.insert(ex.index).second) bad(tag + " example index " + std::to_string(ex.index) + " appears twice");
      }
    }
  }
}

MultiTaskDataset generate(const GenConfig& cfg, GenTrace* trace) {
  cfg.validate();
  const Globals globals = make_globals(cfg);
  MultiTaskDataset ds;
  ds.vocab_size = cfg.vocab_size;
  ds.d_img = cfg.d_img;
  ds.max_text_len = cfg.tokens_per_example;
  ds.test_fraction = cfg.test_fraction;
  ds.split_seed = cfg.seed;
  ds.generation = cfg;
  if (trace) {
    trace->pool = globals.pool;
    trace->prototype_source.clear();
    trace->prototypes.clear();
  }
  for (int t = 0; t < cfg.num_tasks; ++t) {
    GeneratedTask g = generate_task(cfg, globals, t, std::nullopt);
    const auto idx = split_one(g.examples.size(), cfg.test_fraction, cfg.seed, t);
    ds.tasks.push_back(g.spec);
    ds.data.push_back(split_task(std::move(g.examples), idx));
    if (trace) {
      trace->prototype_source.push_back(std::move(g.source));
      trace->prototypes.push_back(std::move(g.prototypes));
    }
  }
  return ds;
}

std::vector<SplitIndices> split(std::span<const int> task_sizes, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::kConfig, "split fraction must lie in (0,1)");
  std::vector<SplitIndices> out;
  out.reserve(task_sizes.size());
  for (std::size_t t = 0; t < task_sizes.size(); ++t) {
    if (task_sizes[t] < 0) fail(ErrorKind::kDataset, "negative task size");
    out.push_back(split_one(static_cast<std::size_t>(task_sizes[t]), fraction, seed, static_cast<int>(t)));
  }
  return out;
}

MultiTaskDataset add_oversized_task(const MultiTaskDataset& dataset, double scale_factor) {
  if (!(scale_factor >= 1.0)) fail(ErrorKind::kConfig, "oversized scale factor must be >= 1");
  if (!dataset.generation) fail(ErrorKind::kConfig, "oversized task needs a synthetic dataset (no generation parameters)");
  if (dataset.tasks.empty()) fail(ErrorKind::kDataset, "dataset has no tasks");
  const GenConfig& cfg = *dataset.generation;
  int largest = 0;
  for (const auto& t : dataset.tasks) largest = std::max(largest, t.num_examples);
  const int size = static_cast<int>(std::lround(scale_factor * largest));
  const int id = static_cast<int>(dataset.tasks.size());

  MultiTaskDataset out = dataset;
  GeneratedTask g = generate_task(cfg, make_globals(cfg), id, size);
  const auto idx = split_one(g.examples.size(), dataset.test_fraction, dataset.split_seed, id);
  out.tasks.push_back(g.spec);
  out.data.push_back(split_task(std::move(g.examples), idx));
  return out;
}

MultiTaskDataset subset(const MultiTaskDataset& dataset, std::span<const int> task_ids) {
  MultiTaskDataset out;
  out.vocab_size = dataset.vocab_size;
  out.d_img = dataset.d_img;
  out.max_text_len = dataset.max_text_len;
  out.test_fraction = dataset.test_fraction;
  out.split_seed = dataset.split_seed;
  std::set<int> used;
  for (int id : task_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= dataset.tasks.size()) {
      fail(ErrorKind::kDataset, "subset: unknown task id " + std::to_string(id));
    }
    if (!used.insert(id).second) fail(ErrorKind::kDataset, "subset: task id " + std::to_string(id) + " listed twice");
    const int new_id = static_cast<int>(out.tasks.size());
    TaskSpec spec = dataset.tasks[static_cast<std::size_t>(id)];
    spec.task_id = new_id;
    TaskData d = dataset.data[static_cast<std::size_t>(id)];
    for (auto* part : {&d.train, &d.test})
      for (auto& ex : *part) ex.task_id = new_id;
    out.tasks.push_back(std::move(spec));
    out.data.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset directory format

namespace {

json gen_to_json(const GenConfig& g) {
  return json{{"num_tasks", g.num_tasks},
              {"latent_dim", g.latent_dim},
              {"vocab_size", g.vocab_size},
              {"correlation", g.correlation},
              {"size_mu", g.size_mu},
              {"size_sigma", g.size_sigma},
              {"min_examples", g.min_examples},
              {"max_examples", g.max_examples},
              {"class_min", g.class_min},
              {"class_max", g.class_max},
              {"label_noise", g.label_noise},
              {"example_noise", g.example_noise},
              {"prototype_jitter", g.prototype_jitter},
              {"image_noise", g.image_noise},
              {"token_range", g.token_range},
              {"tokens_per_example", g.tokens_per_example},
              {"images_min", g.images_min},
              {"images_max", g.images_max},
              {"d_img", g.d_img},
              {"test_fraction", g.test_fraction},
              {"seed", g.seed}};
}

GenConfig gen_from_json(const json& j) {
  GenConfig g;
  g.num_tasks = j.at("num_tasks").get<int>();
  g.latent_dim = j.at("latent_dim").get<int>();
  g.vocab_size = j.at("vocab_size").get<int>();
  g.correlation = j.at("correlation").get<double>();
  g.size_mu = j.at("size_mu").get<double>();
  g.size_sigma = j.at("size_sigma").get<double>();
  g.min_examples = j.at("min_examples").get<int>();
  g.max_examples = j.at("max_examples").get<int>();
  g.class_min = j.at("class_min").get<int>();
  g.class_max = j.at("class_max").get<int>();
  g.label_noise = j.at("label_noise").get<double>();
  g.example_noise = j.at("example_noise").get<double>();
  g.prototype_jitter = j.at("prototype_jitter").get<double>();
  g.image_noise = j.at("image_noise").get<double>();
  g.token_range = j.at("token_range").get<double>();
  g.tokens_per_example = j.at("tokens_per_example").get<int>();
  g.images_min = j.at("images_min").get<int>();
  g.images_max = j.at("images_max").get<int>();
  g.d_img = j.at("d_img").get<int>();
  g.test_fraction = j.at("test_fraction").get<double>();
  g.seed = j.at("seed").get<std::uint64_t>();
  return g;
}

json manifest_json(const MultiTaskDataset& ds) {
  json tasks = json::array();
  for (const auto& t : ds.tasks) {
    tasks.push_back(json{{"task_id", t.task_id},
                         {"name", t.name},
                         {"num_classes", t.num_classes},
                         {"num_examples", t.num_examples},
                         {"group_id", t.group_id}});
  }
  json m{{"format", "mtlkit-dataset"},
         {"version", kFormatVersion},
         {"vocab_size", ds.vocab_size},
         {"d_img", ds.d_img},
         {"max_text_len", ds.max_text_len},
         {"test_fraction", ds.test_fraction},
         {"split_seed", ds.split_seed},
         {"tasks", std::move(tasks)}};
  if (ds.generation) m["generation"] = gen_to_json(*ds.generation);
  return m;
}

[[noreturn]] void ingest_fail(const std::string& where, const std::string& what) {
  fail(ErrorKind::kIngestion, where + ": " + what);
}

}  // namespace

std::string manifest_text(const MultiTaskDataset& dataset) { return manifest_json(dataset).dump(2) + "\n"; }

void export_dataset(const MultiTaskDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream m(dir / "manifest", std::ios::binary);
    if (!m) fail(ErrorKind::kIo, "cannot write " + (dir / "manifest").string());
    m << manifest_text(dataset);
  }
  std::ofstream out(dir / "examples.jsonl", std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + (dir / "examples.jsonl").string());
  for (const auto& d : dataset.data) {
    // "test" sorts before "train".
    for (const auto& [name, part] : {std::pair{"test", &d.test}, std::pair{"train", &d.train}}) {
      for (const auto& ex : *part) {
        json rec{{"task_id", ex.task_id},
                 {"split", name},
                 {"index", ex.index},
                 {"label", ex.label},
                 {"text_tokens", ex.text_tokens},
                 {"image_embeddings", ex.image_embeddings}};
        out << rec.dump() << '\n';
      }
    }
  }
  if (!out) fail(ErrorKind::kIo, "write failed for " + (dir / "examples.jsonl").string());
}

MultiTaskDataset ingest(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest";
  std::ifstream m(manifest_path, std::ios::binary);
  if (!m) fail(ErrorKind::kIo, "cannot open " + manifest_path.string());
  json man;
  try {
    man = json::parse(m);
  } catch (const json::exception& e) {
    ingest_fail(manifest_path.string(), std::string("malformed manifest: ") + e.what());
  }

  MultiTaskDataset ds;
  try {
    if (man.value("format", std::string{}) != "mtlkit-dataset") ingest_fail(manifest_path.string(), "unknown format tag");
    if (man.at("version").get<int>() != kFormatVersion) ingest_fail(manifest_path.string(), "unsupported version");
    ds.vocab_size = man.at("vocab_size").get<int>();
    ds.d_img = man.at("d_img").get<int>();
    ds.max_text_len = man.at("max_text_len").get<int>();
    ds.test_fraction = man.value("test_fraction", 0.2);
    ds.split_seed = man.value("split_seed", std::uint64_t{0});
    if (man.contains("generation")) ds.generation = gen_from_json(man.at("generation"));
    const auto& tasks = man.at("tasks");
    if (!tasks.is_array() || tasks.empty()) ingest_fail(manifest_path.string(), "empty task list");
    for (const auto& t : tasks) {
      TaskSpec s;
      s.task_id = t.at("task_id").get<int>();
      s.name = t.at("name").get<std::string>();
      s.num_classes = t.at("num_classes").get<int>();
      s.num_examples = t.at("num_examples").get<int>();
      s.group_id = t.at("group_id").get<int>();
      if (s.task_id != static_cast<int>(ds.tasks.size())) {
        ingest_fail(manifest_path.string(), "task ids must be dense and ordered; got " + std::to_string(s.task_id));
      }
      if (s.num_classes < 2) ingest_fail(manifest_path.string(), "task " + std::to_string(s.task_id) + " has < 2 classes");
      if (s.num_examples < s.num_classes) {
        ingest_fail(manifest_path.string(), "task " + std::to_string(s.task_id) + " has fewer examples than classes");
      }
      ds.tasks.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    ingest_fail(manifest_path.string(), std::string("malformed manifest: ") + e.what());
  }
  if (ds.vocab_size < 2 || ds.d_img < 1 || ds.max_text_len < 0) ingest_fail(manifest_path.string(), "invalid header values");
  ds.data.resize(ds.tasks.size());

  const auto examples_path = dir / "examples.jsonl";
  std::ifstream in(examples_path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + examples_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = examples_path.string() + ":" + std::to_string(line_no);
    Example ex;
    std::string split_name;
    try {
      const json rec = json::parse(line);
      ex.task_id = rec.at("task_id").get<int>();
      split_name = rec.at("split").get<std::string>();
      ex.index = rec.at("index").get<int>();
      ex.label = rec.at("label").get<int>();
      ex.text_tokens = rec.at("text_tokens").get<std::vector<int>>();
      ex.image_embeddings = rec.at("image_embeddings").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      ingest_fail(where, std::string("malformed record: ") + e.what());
    }
    if (ex.task_id < 0 || static_cast<std::size_t>(ex.task_id) >= ds.tasks.size()) {
      ingest_fail(where, "unknown task_id " + std::to_string(ex.task_id));
    }
    const auto& spec = ds.tasks[static_cast<std::size_t>(ex.task_id)];
    if (ex.label < 0 || ex.label >= spec.num_classes) {
      ingest_fail(where, "label " + std::to_string(ex.label) + " outside [0," + std::to_string(spec.num_classes) + ")");
    }
    if (static_cast<int>(ex.text_tokens.size()) > ds.max_text_len) ingest_fail(where, "text longer than max_text_len");
    for (int tok : ex.text_tokens)
      if (tok < 0 || tok >= ds.vocab_size) ingest_fail(where, "token id " + std::to_string(tok) + " outside vocabulary");
    for (const auto& e : ex.image_embeddings) {
      if (static_cast<int>(e.size()) != ds.d_img) {
        ingest_fail(where, "image embedding width " + std::to_string(e.size()) + " != d_img " + std::to_string(ds.d_img));
      }
    }
    auto& d = ds.data[static_cast<std::size_t>(ex.task_id)];
    if (split_name == "train") d.train.push_back(std::move(ex));
    else if (split_name == "test") d.test.push_back(std::move(ex));
    else ingest_fail(where, "split must be \"train\" or \"test\", got \"" + split_name + "\"");
  }

  for (auto& d : ds.data) {
    auto by_index = [](const Example& a, const Example& b) { return a.index < b.index; };
    std::sort(d.train.begin(), d.train.end(), by_index);
    std::sort(d.test.begin(), d.test.end(), by_index);
  }
  try {
    ds.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kIngestion, examples_path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace mtl

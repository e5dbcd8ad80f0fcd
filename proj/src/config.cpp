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

#include "mtlkit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mtlkit/errors.hpp"

namespace mtl {

namespace {

// Desk-scale defaults. Section order here is irrelevant; to_text() sorts.
const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"run.name", "run"},
      {"run.output_dir", ""},
      {"run.seeds", "1"},

      {"data.path", ""},
      {"data.num_tasks", "100"},
      {"data.latent_dim", "16"},
      {"data.vocab_size", "512"},
      {"data.correlation", "0.7"},
      {"data.size_median", "1000"},
      {"data.size_sigma", "1.0"},
      {"data.min_examples", "20"},
      {"data.max_examples", "0"},
      {"data.class_min", "4"},
      {"data.class_max", "128"},
      {"data.label_noise", "0.05"},
      {"data.example_noise", "0.5"},
      {"data.prototype_jitter", "0.3"},
      {"data.image_noise", "0.1"},
      {"data.token_range", "3.0"},
      {"data.tokens_per_example", "16"},
      {"data.images_min", "1"},
      {"data.images_max", "3"},
      {"data.d_img", "16"},
      {"data.test_fraction", "0.2"},
      {"data.seed", "1"},
      {"data.oversized", "0"},

      {"sampler.kind", "exponential"},
      {"sampler.alpha_start", "1.0"},
      {"sampler.alpha_end", "0.1"},
      {"sampler.exp_rate", "5.0"},
      {"sampler.demon_ref", "0.9"},
      {"sampler.repetition_k", "1"},

      {"heads.kind", "attention"},
      {"heads.d_t", "16"},
      {"heads.attn_heads", "4"},

      {"dypa.enabled", "true"},
      {"dypa.base_dt", "8"},
      {"dypa.growth", "2.0"},
      {"dypa.source", "example_count"},

      {"backbone.layers", "2"},
      {"backbone.hidden", "64"},
      {"backbone.heads", "4"},
      {"backbone.ff", "128"},
      {"backbone.max_len", "32"},
      {"backbone.max_images", "4"},

      {"trainer.batch_size", "8"},
      {"trainer.epochs", "15"},
      {"trainer.baseline_epochs", "0"},
      {"trainer.eval_points", "10"},
      {"trainer.lr_policy", "warmup_step"},
      {"trainer.lr_low", "1e-4"},
      {"trainer.lr_high", "1e-3"},
      {"trainer.weight_decay", "0.01"},
      {"trainer.beta1", "0.9"},
      {"trainer.beta2", "0.999"},
      {"trainer.adam_eps", "1e-8"},
      {"trainer.freeze_embeddings", "false"},

      {"eval.cohort_by", "train"},

      {"baseline.tasks", ""},

      {"finetune.init", "random"},
      {"finetune.task", "0"},
      {"finetune.epochs", "10"},
      {"finetune.compare", "false"},

      {"ablate.variants", "vanilla,alpha_decay,alpha_decay_dypa"},
      {"ablate.task_counts", "10,25,50,75,100"},
      {"ablate.jobs", "1"},
  };
  return d;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* type) {
  fail(ErrorKind::kConfig, "key '" + key + "' expects " + type + ", got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(defaults()) {}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::kConfig, std::string("malformed config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) fail(ErrorKind::kConfig, "key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.get_value<std::string>());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  it->second = trim(value);
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  return it->second;
}

int ExperimentConfig::get_int(const std::string& key) const {
  const auto& v = get(key);
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return out;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean (true/false/on/off)");
}

std::vector<std::uint64_t> ExperimentConfig::get_u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size()) bad_value(key, get(key), "a comma-separated integer list");
    out.push_back(v);
  }
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) os << '\n';
      os << '[' << s << "]\n";
      section = s;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

GenConfig gen_config(const ExperimentConfig& c) {
  GenConfig g;
  g.num_tasks = c.get_int("data.num_tasks");
  g.latent_dim = c.get_int("data.latent_dim");
  g.vocab_size = c.get_int("data.vocab_size");
  g.correlation = c.get_double("data.correlation");
  const double median = c.get_double("data.size_median");
  if (!(median > 0.0)) fail(ErrorKind::kConfig, "data.size_median must be > 0");
  g.size_mu = std::log(median);
  g.size_sigma = c.get_double("data.size_sigma");
  g.min_examples = c.get_int("data.min_examples");
  g.max_examples = c.get_int("data.max_examples");
  g.class_min = c.get_int("data.class_min");
  g.class_max = c.get_int("data.class_max");
  g.label_noise = c.get_double("data.label_noise");
  g.example_noise = c.get_double("data.example_noise");
  g.prototype_jitter = c.get_double("data.prototype_jitter");
  g.image_noise = c.get_double("data.image_noise");
  g.token_range = c.get_double("data.token_range");
  g.tokens_per_example = c.get_int("data.tokens_per_example");
  g.images_min = c.get_int("data.images_min");
  g.images_max = c.get_int("data.images_max");
  g.d_img = c.get_int("data.d_img");
  g.test_fraction = c.get_double("data.test_fraction");
  g.seed = c.get_u64("data.seed");
  g.validate();
  return g;
}

TrainConfig train_config(const ExperimentConfig& c) {
  TrainConfig t;
  t.backbone.layers = c.get_int("backbone.layers");
  t.backbone.hidden = c.get_int("backbone.hidden");
  t.backbone.heads = c.get_int("backbone.heads");
  t.backbone.ff = c.get_int("backbone.ff");
  t.backbone.max_len = c.get_int("backbone.max_len");
  t.backbone.max_images = c.get_int("backbone.max_images");
  t.backbone.vocab = c.get_int("data.vocab_size");
  t.backbone.d_img = c.get_int("data.d_img");

  t.heads.kind = parse_head_kind(c.get("heads.kind"));
  t.heads.d_t = c.get_int("heads.d_t");
  t.heads.attn_heads = c.get_int("heads.attn_heads");

  t.dypa_enabled = c.get_bool("dypa.enabled");
  t.dypa.base_dt = c.get_int("dypa.base_dt");
  t.dypa.growth = c.get_double("dypa.growth");
  t.dypa.attn_heads = c.get_int("heads.attn_heads");
  t.dypa.source = parse_complexity_source(c.get("dypa.source"));

  t.schedule.kind = parse_alpha_kind(c.get("sampler.kind"));
  t.schedule.alpha_start = c.get_double("sampler.alpha_start");
  t.schedule.alpha_end = c.get_double("sampler.alpha_end");
  t.schedule.exp_rate = c.get_double("sampler.exp_rate");
  t.schedule.demon_ref = c.get_double("sampler.demon_ref");
  t.repetition = c.get_int("sampler.repetition_k");

  t.lr.kind = parse_lr_kind(c.get("trainer.lr_policy"));
  t.lr.low = c.get_double("trainer.lr_low");
  t.lr.high = c.get_double("trainer.lr_high");
  t.adamw.weight_decay = c.get_double("trainer.weight_decay");
  t.adamw.beta1 = c.get_double("trainer.beta1");
  t.adamw.beta2 = c.get_double("trainer.beta2");
  t.adamw.eps = c.get_double("trainer.adam_eps");
  t.batch_size = c.get_int("trainer.batch_size");
  t.epochs = c.get_double("trainer.epochs");
  t.baseline_epochs = c.get_double("trainer.baseline_epochs");
  t.eval_points = c.get_int("trainer.eval_points");
  t.freeze_embeddings = c.get_bool("trainer.freeze_embeddings");

  const auto& cohort = c.get("eval.cohort_by");
  if (cohort != "train" && cohort != "total") fail(ErrorKind::kConfig, "eval.cohort_by must be train or total");
  t.cohort_by_total = cohort == "total";

  t.backbone.validate();
  t.schedule.validate();
  t.lr.validate();
  if (t.repetition < 1) fail(ErrorKind::kConfig, "sampler.repetition_k must be >= 1");
  if (t.batch_size < 1) fail(ErrorKind::kConfig, "trainer.batch_size must be >= 1");
  if (!(t.epochs > 0.0)) fail(ErrorKind::kConfig, "trainer.epochs must be > 0");
  return t;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

std::string run_fingerprint(const ExperimentConfig& cfg, const std::string& manifest) {
  ExperimentConfig c = cfg;
  c.set("run.output_dir", "");
  return hex64(fnv1a(c.to_text()) ^ (fnv1a(manifest) * 0x9e3779b97f4a7c15ull));
}

}  // namespace mtl

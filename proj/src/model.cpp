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

#include "mtlkit/model.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "mtlkit/errors.hpp"
#include "mtlkit/rng.hpp"

namespace mtl {

MtlModel::MtlModel(const BackboneConfig& backbone, const HeadAllocation& heads, std::uint64_t seed)
    : params_(std::make_unique<ParamStore>()) {
  Rng rng = make_stream(seed, {kStreamInit});
  backbone_ = std::make_unique<Backbone>(*params_, backbone, rng);
  heads_.reserve(heads.size());
  for (std::size_t t = 0; t < heads.size(); ++t) {
    if (heads[t].d_backbone != backbone.hidden) {
      fail(ErrorKind::kConfig, "head " + std::to_string(t) + " expects backbone width " +
                                   std::to_string(heads[t].d_backbone) + ", backbone has " +
                                   std::to_string(backbone.hidden));
    }
    Rng head_rng = make_stream(seed, {kStreamInit, t + 1});
    heads_.emplace_back(*params_, "head/" + std::to_string(t) + "/", heads[t], head_rng);
  }
}

const TaskHead& MtlModel::head(int task_id) const {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= heads_.size()) {
    fail(ErrorKind::kEvaluation, "model has no head for task " + std::to_string(task_id));
  }
  return heads_[static_cast<std::size_t>(task_id)];
}

HeadAllocation MtlModel::allocation() const {
  HeadAllocation out;
  out.reserve(heads_.size());
  for (const auto& h : heads_) out.push_back(h.config());
  return out;
}

Var MtlModel::logits(Graph& g, const Example& example) const {
  const TaskHead& h = head(example.task_id);
  InputSequence seq = backbone_->assemble(g, example);
  Var tokens = backbone_->encode(g, seq);
  return h.forward(g, tokens, seq.mask);
}

Var MtlModel::batch_loss(Graph& g, std::span<const Example* const> batch) const {
  if (batch.empty()) fail(ErrorKind::kInput, "empty batch");
  std::vector<Var> rows;
  std::vector<int> labels;
  rows.reserve(batch.size());
  labels.reserve(batch.size());
  for (const Example* ex : batch) {
    if (ex->task_id != batch.front()->task_id) fail(ErrorKind::kInput, "batch mixes tasks");
    rows.push_back(logits(g, *ex));
    labels.push_back(ex->label);
  }
  return softmax_xent(concat_rows(rows), labels);
}

int MtlModel::predict(const Example& example) const {
  Graph g;
  const Tensor& z = logits(g, example).value();
  const auto data = z.data();
  return static_cast<int>(std::max_element(data.begin(), data.end()) - data.begin());
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'M', 'T', 'L', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
  put(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(ErrorKind::kCheckpoint, "truncated file " + path.string());
  return v;
}

std::string get_string(std::istream& is, const std::filesystem::path& path) {
  const auto n = get<std::uint32_t>(is, path);
  if (n > (1u << 24)) fail(ErrorKind::kCheckpoint, "corrupt string length in " + path.string());
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) fail(ErrorKind::kCheckpoint, "truncated file " + path.string());
  return s;
}

struct StoredTensor {
  Shape shape;
  std::vector<double> data;
};

CheckpointInfo read_all(const std::filesystem::path& path, std::map<std::string, StoredTensor>* tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    fail(ErrorKind::kCheckpoint, path.string() + " is not a checkpoint file");
  }
  CheckpointInfo info;
  info.version = get<std::uint32_t>(in, path);
  if (info.version != kCheckpointVersion) {
    fail(ErrorKind::kCheckpoint, "unsupported checkpoint version " + std::to_string(info.version));
  }
  info.fingerprint = get_string(in, path);
  info.backbone = get_string(in, path);
  info.tensors = get<std::uint64_t>(in, path);
  if (!tensors) return info;
  for (std::size_t i = 0; i < info.tensors; ++i) {
    std::string name = get_string(in, path);
    StoredTensor t;
    const auto rank = get<std::uint32_t>(in, path);
    if (rank == 0 || rank > 8) fail(ErrorKind::kCheckpoint, "corrupt rank for '" + name + "'");
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(get<std::uint64_t>(in, path));
    t.data.resize(shape_size(t.shape));
    if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)))) {
      fail(ErrorKind::kCheckpoint, "truncated tensor '" + name + "' in " + path.string());
    }
    tensors->emplace(std::move(name), std::move(t));
  }
  return info;
}

}  // namespace

void save_checkpoint(const MtlModel& model, const std::filesystem::path& path, const std::string& fingerprint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  out.write(kMagic, 8);
  put(out, kCheckpointVersion);
  put_string(out, fingerprint);
  put_string(out, model.backbone().config().describe());
  put(out, static_cast<std::uint64_t>(model.params().size()));
  model.params().for_each([&](const Parameter& p) {
    put_string(out, p.name);
    put(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(p.value.ptr()), static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  });
  if (!out) fail(ErrorKind::kIo, "write failed for checkpoint " + path.string());
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) { return read_all(path, nullptr); }

CheckpointInfo load_checkpoint(MtlModel& model, const std::filesystem::path& path, LoadScope scope) {
  std::map<std::string, StoredTensor> stored;
  CheckpointInfo info = read_all(path, &stored);
  const std::string expected = model.backbone().config().describe();
  if (info.backbone != expected) {
    fail(ErrorKind::kCheckpoint, "backbone mismatch: checkpoint has '" + info.backbone + "', model has '" + expected + "'");
  }
  model.params().for_each([&](Parameter& p) {
    const bool shared = p.name.starts_with("embed/") || p.name.starts_with("backbone/");
    if (scope == LoadScope::kBackboneOnly && !shared) return;
    auto it = stored.find(p.name);
    if (it == stored.end()) fail(ErrorKind::kCheckpoint, "checkpoint lacks parameter '" + p.name + "'");
    if (it->second.shape != p.value.shape()) {
      fail(ErrorKind::kCheckpoint, "shape mismatch for '" + p.name + "': " + shape_string(it->second.shape) + " vs " +
                                       shape_string(p.value.shape()));
    }
    p.value = Tensor(it->second.shape, it->second.data);
  });
  return info;
}

}  // namespace mtl

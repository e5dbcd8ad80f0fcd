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

#include "mtlkit/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtlkit/errors.hpp"

namespace mtl {

void BackboneConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::kConfig, "backbone: " + what); };
  if (layers < 0) bad("layers must be >= 0");
  if (hidden < 1 || heads < 1 || ff < 1) bad("hidden, heads and ff must be >= 1");
  if (hidden % heads != 0) bad("hidden " + std::to_string(hidden) + " not divisible by " + std::to_string(heads) + " heads");
  if (vocab < 1 || d_img < 1) bad("vocab and d_img must be >= 1");
  if (max_images < 0) bad("max_images must be >= 0");
  if (max_len < 2 + max_images + (max_images > 0 ? 1 : 0)) bad("max_len cannot hold the special tokens and max_images");
}

std::string BackboneConfig::describe() const {
  std::ostringstream os;
  os << "layers=" << layers << ";hidden=" << hidden << ";heads=" << heads << ";ff=" << ff << ";vocab=" << vocab
     << ";max_len=" << max_len << ";d_img=" << d_img << ";max_images=" << max_images;
  return os.str();
}

namespace {

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

Tensor weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return normal_tensor({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

constexpr double kEmbedStd = 0.5;
constexpr double kLnEps = 1e-12;

Tensor normalize_rows(const Tensor& x) {
  Tensor out(x.shape());
  const std::size_t m = x.rows(), n = x.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) out(i, j) = (x(i, j) - mean) / std::sqrt(var + kLnEps);
  }
  return out;
}

}  // namespace

Backbone::Backbone(ParamStore& store, const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const auto d = static_cast<std::size_t>(cfg_.hidden);
  const auto ff = static_cast<std::size_t>(cfg_.ff);
  token_table_ = &store.add("embed/token", normal_tensor({static_cast<std::size_t>(cfg_.vocab) + 3, d}, kEmbedStd, rng));
  type_table_ = &store.add("embed/type", normal_tensor({2, d}, kEmbedStd, rng));
  position_table_ = &store.add("embed/position", normal_tensor({static_cast<std::size_t>(cfg_.max_len), d}, kEmbedStd, rng));
  image_w_ = &store.add("embed/image_w", weight(static_cast<std::size_t>(cfg_.d_img), d, rng));
  image_b_ = &store.add("embed/image_b", Tensor({d}));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string p = "backbone/layer" + std::to_string(l) + "/";
    auto& add = store;
    Layer layer{};
    layer.ln1_g = &add.add(p + "ln1_g", Tensor({d}, 1.0));
    layer.ln1_b = &add.add(p + "ln1_b", Tensor({d}));
    layer.wq = &add.add(p + "attn_q_w", weight(d, d, rng));
    layer.bq = &add.add(p + "attn_q_b", Tensor({d}));
    layer.wk = &add.add(p + "attn_k_w", weight(d, d, rng));
    layer.bk = &add.add(p + "attn_k_b", Tensor({d}));
    layer.wv = &add.add(p + "attn_v_w", weight(d, d, rng));
    layer.bv = &add.add(p + "attn_v_b", Tensor({d}));
    layer.wo = &add.add(p + "attn_o_w", weight(d, d, rng));
    layer.bo = &add.add(p + "attn_o_b", Tensor({d}));
    layer.ln2_g = &add.add(p + "ln2_g", Tensor({d}, 1.0));
    layer.ln2_b = &add.add(p + "ln2_b", Tensor({d}));
    layer.ff1_w = &add.add(p + "ff1_w", weight(d, ff, rng));
    layer.ff1_b = &add.add(p + "ff1_b", Tensor({ff}));
    layer.ff2_w = &add.add(p + "ff2_w", weight(ff, d, rng));
    layer.ff2_b = &add.add(p + "ff2_b", Tensor({d}));
    layers_.push_back(layer);
  }
}

InputSequence Backbone::assemble(Graph& g, const Example& example, std::size_t pad_to) const {
  const std::size_t n_img = std::min(example.image_embeddings.size(), static_cast<std::size_t>(cfg_.max_images));
  const std::size_t specials = 2 + (n_img > 0 ? 1 : 0);
  const auto max_len = static_cast<std::size_t>(cfg_.max_len);
  if (specials + n_img > max_len) fail(ErrorKind::kInput, "images and special tokens exceed max_len");
  const std::size_t n_text = std::min(example.text_tokens.size(), max_len - specials - n_img);
  const std::size_t len = specials + n_img + n_text;
  const std::size_t total = std::max(len, pad_to);
  if (total > max_len) {
    fail(ErrorKind::kInput, "padded length " + std::to_string(total) + " exceeds max_len " + std::to_string(max_len));
  }

  InputSequence seq;
  seq.text_count = n_text;
  seq.image_count = n_img;
  seq.token_types.assign(total, 0);
  seq.positions.assign(total, 0);
  seq.mask.assign(total, 0);

  std::vector<std::size_t> head_ids;  // START + text + SEP
  head_ids.reserve(n_text + 2);
  head_ids.push_back(cfg_.start_id());
  for (std::size_t i = 0; i < n_text; ++i) {
    const int tok = example.text_tokens[i];
    if (tok < 0 || tok >= cfg_.vocab) fail(ErrorKind::kInput, "token id " + std::to_string(tok) + " outside vocabulary");
    head_ids.push_back(static_cast<std::size_t>(tok));
  }
  head_ids.push_back(cfg_.sep_id());
  for (std::size_t i = 0; i < head_ids.size(); ++i) seq.positions[i] = static_cast<int>(i);

  Var table = g.param(*token_table_);
  std::vector<Var> parts{gather_rows(table, head_ids)};
  std::size_t cursor = head_ids.size();
  if (n_img > 0) {
    const auto d_img = static_cast<std::size_t>(cfg_.d_img);
    Tensor images({n_img, d_img});
    for (std::size_t i = 0; i < n_img; ++i) {
      const auto& emb = example.image_embeddings[i];
      if (emb.size() != d_img) fail(ErrorKind::kInput, "image embedding width " + std::to_string(emb.size()));
      std::copy(emb.begin(), emb.end(), images.ptr() + i * d_img);
    }
    parts.push_back(linear(g.constant(std::move(images)), g.param(*image_w_), g.param(*image_b_)));
    const int image_pos = static_cast<int>(n_text) + 2;
    for (std::size_t i = 0; i < n_img; ++i) {
      seq.token_types[cursor] = 1;
      seq.positions[cursor] = image_pos;
      ++cursor;
    }
    const std::size_t closing = cfg_.sep_id();
    parts.push_back(gather_rows(table, std::span<const std::size_t>(&closing, 1)));
    seq.token_types[cursor] = 1;
    seq.positions[cursor] = image_pos + 1;
    ++cursor;
  }
  std::fill(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(len), 1);
  if (total > len) {
    std::vector<std::size_t> pads(total - len, cfg_.pad_id());
    parts.push_back(gather_rows(table, pads));
  }

  std::vector<std::size_t> types(seq.token_types.begin(), seq.token_types.end());
  std::vector<std::size_t> positions(seq.positions.begin(), seq.positions.end());
  Var x = concat_rows(parts);
  x = add(x, gather_rows(g.param(*type_table_), types));
  x = add(x, gather_rows(g.param(*position_table_), positions));
  seq.embeddings = x;
  return seq;
}

Var Backbone::encode(Graph& g, const InputSequence& seq, std::vector<Tensor>* ln_outputs) const {
  const auto heads = static_cast<std::size_t>(cfg_.heads);
  Var x = seq.embeddings;
  for (const auto& L : layers_) {
    if (ln_outputs) ln_outputs->push_back(normalize_rows(x.value()));
    Var h = layer_norm(x, g.param(*L.ln1_g), g.param(*L.ln1_b), kLnEps);
    AttentionWeights w{g.param(*L.wq), g.param(*L.bq), g.param(*L.wk), g.param(*L.bk),
                       g.param(*L.wv), g.param(*L.bv), g.param(*L.wo), g.param(*L.bo)};
    x = add(x, self_attention(h, w, heads, seq.mask));
    if (ln_outputs) ln_outputs->push_back(normalize_rows(x.value()));
    h = layer_norm(x, g.param(*L.ln2_g), g.param(*L.ln2_b), kLnEps);
    h = linear(gelu(linear(h, g.param(*L.ff1_w), g.param(*L.ff1_b))), g.param(*L.ff2_w), g.param(*L.ff2_b));
    x = add(x, h);
  }
  return x;
}

void Backbone::set_frozen(bool frozen, bool include_embeddings) {
  for (auto& L : layers_) {
    for (Parameter* p : {L.ln1_g, L.ln1_b, L.wq, L.bq, L.wk, L.bk, L.wv, L.bv, L.wo, L.bo, L.ln2_g, L.ln2_b, L.ff1_w,
                         L.ff1_b, L.ff2_w, L.ff2_b}) {
      p->trainable = !frozen;
    }
  }
  for (Parameter* p : {token_table_, type_table_, position_table_}) p->trainable = !(frozen && include_embeddings);
}

}  // namespace mtl

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

#include "mtlkit/heads.hpp"

#include <cmath>

#include "mtlkit/errors.hpp"

namespace mtl {

std::string to_string(HeadKind kind) { return kind == HeadKind::kFc ? "fc" : "attention"; }

HeadKind parse_head_kind(const std::string& name) {
  if (name == "fc") return HeadKind::kFc;
  if (name == "attention") return HeadKind::kAttention;
  fail(ErrorKind::kConfig, "unknown head kind '" + name + "'");
}

void HeadConfig::validate(double width_limit) const {
  if (d_backbone < 1) fail(ErrorKind::kConfig, "head d_backbone must be >= 1");
  if (num_classes < 2) fail(ErrorKind::kConfig, "head needs at least 2 classes");
  if (kind == HeadKind::kFc) return;
  if (d_t < 1 || attn_heads < 1) fail(ErrorKind::kConfig, "attention head needs d_t >= 1 and attn_heads >= 1");
  if (static_cast<double>(d_t) > width_limit * d_backbone) {
    fail(ErrorKind::kConfig, "d_t " + std::to_string(d_t) + " exceeds " + std::to_string(width_limit) +
                                 " x backbone width " + std::to_string(d_backbone));
  }
  if (d_t % attn_heads != 0) {
    fail(ErrorKind::kConfig, "d_t " + std::to_string(d_t) + " not divisible by " + std::to_string(attn_heads) +
                                 " attention heads");
  }
}

std::int64_t param_count(const HeadConfig& cfg) {
  const std::int64_t db = cfg.d_backbone, dt = cfg.d_t, c = cfg.num_classes;
  if (cfg.kind == HeadKind::kFc) return db * db + db + db * c + c;
  return (db * dt + dt) + 4 * (dt * dt + dt) + (dt * c + c);
}

Var fc_head_forward(Var tokens, const FcHeadWeights& w, std::span<const std::uint8_t> mask) {
  Var pooled = mean_rows(tokens, mask);
  Var hidden = relu(linear(pooled, w.w_hidden, w.b_hidden));
  return linear(hidden, w.w_out, w.b_out);
}

Var attn_head_forward(Var tokens, const AttnHeadWeights& w, std::size_t heads, std::span<const std::uint8_t> mask) {
  Var projected = linear(tokens, w.w_proj, w.b_proj);
  Var attended = self_attention(projected, w.attn, heads, mask);
  return linear(mean_rows(attended, mask), w.w_out, w.b_out);
}

namespace {

Tensor init_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  Tensor t({fan_in, fan_out});
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

}  // namespace

TaskHead::TaskHead(ParamStore& store, std::string prefix, const HeadConfig& cfg, Rng& rng)
    : cfg_(cfg), prefix_(std::move(prefix)) {
  cfg_.validate();
  const auto db = static_cast<std::size_t>(cfg_.d_backbone);
  const auto c = static_cast<std::size_t>(cfg_.num_classes);
  auto add = [&](const std::string& name, Tensor t) { params_.push_back(&store.add(prefix_ + name, std::move(t))); };
  if (cfg_.kind == HeadKind::kFc) {
    add("fc_w", init_weight(db, db, rng));
    add("fc_b", Tensor({db}));
    add("out_w", init_weight(db, c, rng));
    add("out_b", Tensor({c}));
    return;
  }
  const auto dt = static_cast<std::size_t>(cfg_.d_t);
  add("proj_w", init_weight(db, dt, rng));
  add("proj_b", Tensor({dt}));
  for (const char* n : {"q", "k", "v", "o"}) {
    add(std::string("attn_") + n + "_w", init_weight(dt, dt, rng));
    add(std::string("attn_") + n + "_b", Tensor({dt}));
  }
  add("out_w", init_weight(dt, c, rng));
  add("out_b", Tensor({c}));
}

Var TaskHead::forward(Graph& g, Var tokens, std::span<const std::uint8_t> mask) const {
  auto p = [&](std::size_t i) { return g.param(*params_[i]); };
  if (cfg_.kind == HeadKind::kFc) return fc_head_forward(tokens, FcHeadWeights{p(0), p(1), p(2), p(3)}, mask);
  AttnHeadWeights w{p(0), p(1), AttentionWeights{p(2), p(3), p(4), p(5), p(6), p(7), p(8), p(9)}, p(10), p(11)};
  return attn_head_forward(tokens, w, static_cast<std::size_t>(cfg_.attn_heads), mask);
}

}  // namespace mtl

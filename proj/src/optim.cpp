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

#include "mtlkit/optim.hpp"

#include <cmath>

#include "mtlkit/errors.hpp"

namespace mtl {

void adamw_step(Parameter& param, AdamState& state, const AdamWConfig& cfg, double lr) {
  if (!param.trainable) return;
  const std::size_t n = param.value.size();
  if (param.grad.size() != n) fail(ErrorKind::kDimension, "gradient shape mismatch for '" + param.name + "'");
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) {
    fail(ErrorKind::kDimension, "optimizer state shape mismatch for '" + param.name + "'");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * cfg.weight_decay;
  double* w = param.value.ptr();
  const double* g = param.grad.ptr();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    w[i] = w[i] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

bool AdamW::step(ParamStore& params, double lr) {
  bool finite = true;
  params.for_each([&](Parameter& p) {
    if (!p.trainable || !p.has_grad) return;
    adamw_step(p, states_[p.name], cfg_, lr);
    if (!p.value.all_finite()) finite = false;
  });
  return finite;
}

const AdamState* AdamW::state(const std::string& name) const {
  auto it = states_.find(name);
  return it == states_.end() ? nullptr : &it->second;
}

}  // namespace mtl

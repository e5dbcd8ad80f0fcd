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

#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mtlkit/autograd.hpp"
#include "mtlkit/tensor.hpp"

namespace mtl::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = n(rng);
  return t;
}

struct GradCheck {
  double rel_error = 0.0;
  std::size_t checked = 0;
};

// Central differences with step h over every trainable scalar in `params`;
// returns ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-300).
inline GradCheck grad_check(ParamStore& params, const std::function<Var(Graph&)>& loss_fn, double h = 1e-6) {
  params.zero_grad();
  {
    Graph g;
    Var loss = loss_fn(g);
    g.backward(loss);
  }
  std::vector<double> analytic, numeric;
  params.for_each([&](Parameter& p) {
    if (!p.trainable) return;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      analytic.push_back(p.has_grad ? p.grad[i] : 0.0);
      const double orig = p.value[i];
      p.value[i] = orig + h;
      double up, down;
      {
        Graph g;
        up = loss_fn(g).value()[0];
      }
      p.value[i] = orig - h;
      {
        Graph g;
        down = loss_fn(g).value()[0];
      }
      p.value[i] = orig;
      numeric.push_back((up - down) / (2.0 * h));
    }
  });
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return {std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-300), analytic.size()};
}

// sum(x * w) for a fixed random w, so every output element contributes a
// distinct weight to the checked gradient.
inline Var scalarize(Var x, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Graph& g = x.graph();
  std::vector<Var> parts;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t id[] = {r};
    parts.push_back(matmul(gather_rows(x, id), g.constant(random_tensor({x.cols(), 1}, rng))));
  }
  return sum(concat_rows(parts));
}

}  // namespace mtl::testing

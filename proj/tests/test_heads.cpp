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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "mtlkit/errors.hpp"
#include "mtlkit/heads.hpp"

namespace mtl {
namespace {

using testing::grad_check;
using testing::random_tensor;

HeadConfig fc(int db, int c) { return HeadConfig{HeadKind::kFc, db, 0, 0, c}; }
HeadConfig attn(int db, int dt, int c, int heads = 4) { return HeadConfig{HeadKind::kAttention, db, dt, heads, c}; }

// Scalars registered by a live head, counted by walking the store.
std::int64_t registered(const HeadConfig& cfg) {
  ParamStore ps;
  Rng rng(1);
  TaskHead h(ps, "head/0/", cfg, rng);
  std::int64_t n = 0;
  for (const Parameter* p : h.parameters()) n += static_cast<std::int64_t>(p->value.size());
  EXPECT_EQ(static_cast<std::size_t>(n), ps.scalar_count("head/0/"));
  return n;
}

TEST(ParamCount, FcHeadOnBaseWidth) {
  EXPECT_EQ(param_count(fc(768, 10)), 598282);
  EXPECT_EQ(768 * 768 + 768, 590592);
  // 100 such heads: about 59.8M.
  EXPECT_NEAR(100.0 * param_count(fc(768, 10)) / 1e6, 59.8, 0.05);
}

TEST(ParamCount, AttentionHeadIsNineTimesSmaller) {
  EXPECT_EQ(param_count(attn(768, 64, 10)), 66506);
  const double ratio = static_cast<double>(param_count(fc(768, 10))) / static_cast<double>(param_count(attn(768, 64, 10)));
  EXPECT_NEAR(ratio, 9.0, 0.05);
}

TEST(ParamCount, FullWidthAttentionExceedsFc) {
  EXPECT_GT(param_count(attn(768, 768, 10)), param_count(fc(768, 10)));
}

TEST(ParamCount, RatioAtLeastEightForAllClassCounts) {
  for (int c = 5; c <= 100; ++c) {
    const double ratio =
        static_cast<double>(param_count(fc(768, c))) / static_cast<double>(param_count(attn(768, 64, c)));
    EXPECT_GE(ratio, 8.0) << "C=" << c;
  }
}

TEST(ParamCount, MatchesRegisteredScalars) {
  for (int c : {2, 5, 17}) {
    for (int db : {8, 16, 48}) {
      EXPECT_EQ(param_count(fc(db, c)), registered(fc(db, c)));
      for (int dt : {4, 8, 16}) {
        if (dt > 2 * db) continue;
        EXPECT_EQ(param_count(attn(db, dt, c)), registered(attn(db, dt, c)));
      }
    }
  }
}

TEST(HeadConfig, ValidationRules) {
  EXPECT_THROW(attn(16, 6, 3, 4).validate(), Error);    // not divisible
  EXPECT_THROW(attn(16, 64, 3, 4).validate(), Error);   // wider than the limit
  EXPECT_NO_THROW(attn(768, 1024, 3, 4).validate());    // top DyPA width
  EXPECT_THROW(attn(16, 8, 1, 4).validate(), Error);    // one class
  EXPECT_NO_THROW(fc(16, 2).validate());
}

TEST(FcHead, ZeroWeightsGiveZeroLogits) {
  std::mt19937_64 rng(2);
  Graph g;
  const std::size_t db = 6, c = 3;
  FcHeadWeights w{g.constant(Tensor({db, db})), g.constant(Tensor({db})), g.constant(Tensor({db, c})),
                  g.constant(Tensor({c}))};
  Tensor out = fc_head_forward(g.constant(random_tensor({4, db}, rng)), w).value();
  ASSERT_EQ(out.size(), c);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(FcHead, SingleTokenPoolingIsIdentity) {
  std::mt19937_64 rng(3);
  Graph g;
  const std::size_t db = 5, c = 4;
  FcHeadWeights w{g.constant(random_tensor({db, db}, rng)), g.constant(random_tensor({db}, rng)),
                  g.constant(random_tensor({db, c}, rng)), g.constant(random_tensor({c}, rng))};
  Tensor x = random_tensor({1, db}, rng);
  Tensor out = fc_head_forward(g.constant(x), w).value();
  Tensor expected = linear(relu(linear(g.constant(x), w.w_hidden, w.b_hidden)), w.w_out, w.b_out).value();
  for (std::size_t j = 0; j < c; ++j) EXPECT_NEAR(out[j], expected[j], 1e-14);
}

TEST(FcHead, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  ParamStore ps;
  TaskHead h(ps, "h/", fc(6, 4), rng);
  ps.add("x", random_tensor({5, 6}, rng));
  const std::uint8_t mask[] = {1, 1, 1, 0, 1};
  const int labels[] = {2};
  auto c = grad_check(ps, [&](Graph& g) { return softmax_xent(h.forward(g, g.param(ps.at("x")), mask), labels); });
  EXPECT_LT(c.rel_error, 1e-6);
}

TEST(AttnHead, SingleTokenIsProjectValueOutputClassify) {
  std::mt19937_64 rng(5);
  ParamStore ps;
  TaskHead h(ps, "h/", attn(8, 4, 3, 2), rng);
  Tensor x = random_tensor({1, 8}, rng);
  Graph g;
  Tensor out = h.forward(g, g.constant(x)).value();
  auto P = [&](const char* n) { return g.param(ps.at(std::string("h/") + n)); };
  Var z = linear(g.constant(x), P("proj_w"), P("proj_b"));
  z = linear(linear(z, P("attn_v_w"), P("attn_v_b")), P("attn_o_w"), P("attn_o_b"));
  Tensor expected = linear(z, P("out_w"), P("out_b")).value();
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out[j], expected[j], 1e-13);
}

TEST(AttnHead, TokenOrderDoesNotChangeLogits) {
  std::mt19937_64 rng(6);
  ParamStore ps;
  TaskHead h(ps, "h/", attn(8, 8, 5, 4), rng);
  Tensor x = random_tensor({6, 8}, rng);
  Tensor perm({6, 8});
  const std::size_t order[] = {3, 0, 5, 1, 4, 2};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 8; ++j) perm(i, j) = x(order[i], j);
  Graph g;
  Tensor a = h.forward(g, g.constant(x)).value();
  Tensor b = h.forward(g, g.constant(perm)).value();
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

TEST(AttnHead, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  ParamStore ps;
  TaskHead h(ps, "h/", attn(8, 4, 3, 2), rng);
  ps.add("x", random_tensor({4, 8}, rng));
  const std::uint8_t mask[] = {1, 1, 0, 1};
  const int labels[] = {1};
  auto c = grad_check(ps, [&](Graph& g) { return softmax_xent(h.forward(g, g.param(ps.at("x")), mask), labels); });
  EXPECT_LT(c.rel_error, 1e-6);
}

TEST(Heads, OutputsFiniteForBoundedInputs) {
  std::mt19937_64 rng(8);
  ParamStore ps;
  TaskHead a(ps, "a/", attn(16, 8, 7), rng);
  TaskHead f(ps, "f/", fc(16, 7), rng);
  Graph g;
  Tensor x = random_tensor({10, 16}, rng, 50.0);
  EXPECT_TRUE(a.forward(g, g.constant(x)).value().all_finite());
  EXPECT_TRUE(f.forward(g, g.constant(x)).value().all_finite());
}

}  // namespace
}  // namespace mtl

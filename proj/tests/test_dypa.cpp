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
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "mtlkit/datagen.hpp"
#include "mtlkit/dypa.hpp"
#include "mtlkit/errors.hpp"
#include "mtlkit/model.hpp"

namespace mtl {
namespace {

std::vector<int> quartiles(std::span<const std::int64_t> counts) {
  std::vector<int> q;
  for (const auto& s : score_tasks(counts)) q.push_back(s.quartile);
  return q;
}

// Sort (count, id) pairs, then cut the ranks at ceil(q*K/4).
std::vector<int> oracle_quartiles(const std::vector<std::int64_t>& counts) {
  const std::size_t k = counts.size();
  std::vector<std::pair<std::int64_t, std::size_t>> order;
  for (std::size_t i = 0; i < k; ++i) order.emplace_back(counts[i], i);
  std::sort(order.begin(), order.end());
  std::vector<int> q(k);
  for (int bin = 0; bin < 4; ++bin) {
    const auto lo = static_cast<std::size_t>(std::ceil(bin * static_cast<double>(k) / 4.0));
    const auto hi = static_cast<std::size_t>(std::ceil((bin + 1) * static_cast<double>(k) / 4.0));
    for (std::size_t r = lo; r < hi; ++r) q[order[r].second] = bin + 1;
  }
  return q;
}

TEST(ScoreTasks, FourTasksOnePerQuartile) {
  const std::int64_t counts[] = {10, 20, 30, 40};
  EXPECT_EQ(quartiles(counts), (std::vector<int>{1, 2, 3, 4}));
  const std::int64_t shuffled[] = {40, 10, 30, 20};
  EXPECT_EQ(quartiles(shuffled), (std::vector<int>{4, 1, 3, 2}));
}

TEST(ScoreTasks, EightDistinctTasksTwoPerQuartile) {
  const std::int64_t counts[] = {5, 80, 3, 41, 7, 900, 12, 60};
  auto q = quartiles(counts);
  for (int b = 1; b <= 4; ++b) EXPECT_EQ(std::count(q.begin(), q.end(), b), 2);
}

TEST(ScoreTasks, FewerThanFourTasksIsConfigError) {
  const std::int64_t counts[] = {1, 2, 3};
  try {
    score_tasks(counts);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(ScoreTasks, NormalizedIsZScoreOfLogCount) {
  const std::int64_t counts[] = {10, 100, 1000, 10000, 50};
  const auto s = score_tasks(counts);
  double mean = 0.0, var = 0.0;
  for (auto c : counts) mean += std::log(static_cast<double>(c));
  mean /= 5.0;
  for (auto c : counts) var += std::pow(std::log(static_cast<double>(c)) - mean, 2);
  const double sd = std::sqrt(var / 5.0);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(s[i].raw, counts[i]);
    EXPECT_EQ(s[i].task_id, static_cast<int>(i));
    EXPECT_NEAR(s[i].normalized, (std::log(static_cast<double>(counts[i])) - mean) / sd, 1e-12);
  }
}

TEST(ScoreTasks, MatchesSortOracleOnRandomVectors) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(4, 120);
  std::uniform_int_distribution<std::int64_t> val(1, 60);  // small range forces ties
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(len(rng)));
    for (auto& c : counts) c = val(rng);
    const auto q = quartiles(counts);
    ASSERT_EQ(q, oracle_quartiles(counts)) << "trial " << trial;
    std::vector<int> sizes(4, 0);
    for (int b : q) ++sizes[static_cast<std::size_t>(b - 1)];
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
  }
}

TEST(ScoreTasks, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<std::int64_t> val(1, 1000);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int64_t> counts(37);
    for (auto& c : counts) c = val(rng);
    std::vector<std::int64_t> squared, shifted, logged;
    for (auto c : counts) {
      squared.push_back(c * c);
      shifted.push_back(3 * c + 11);
      logged.push_back(static_cast<std::int64_t>(std::floor(1000.0 * std::log(static_cast<double>(c)))) + 1);
    }
    const auto q = quartiles(counts);
    EXPECT_EQ(q, quartiles(squared));
    EXPECT_EQ(q, quartiles(shifted));
    EXPECT_EQ(q, quartiles(logged));
  }
}

std::vector<int> widths(const HeadAllocation& a) {
  std::set<int> w;
  for (const auto& h : a) w.insert(h.d_t);
  return {w.begin(), w.end()};
}

TEST(Allocate, DefaultLadder) {
  std::vector<std::int64_t> counts(100);
  std::iota(counts.begin(), counts.end(), 1);
  const auto scores = score_tasks(counts);
  std::vector<int> classes(100, 10);
  DypaConfig cfg;  // base 128, growth 2
  const auto alloc = allocate(scores, cfg, 768, classes);
  EXPECT_EQ(widths(alloc), (std::vector<int>{128, 256, 512, 1024}));
  for (std::size_t t = 0; t < 100; ++t) {
    EXPECT_EQ(alloc[t].kind, HeadKind::kAttention);
    EXPECT_EQ(alloc[t].d_t, 128 << (scores[t].quartile - 1));
  }
}

TEST(Allocate, DeskLadderAndDegenerateGrowth) {
  std::vector<std::int64_t> counts = {9, 3, 7, 1, 5, 8, 2, 6};
  const auto scores = score_tasks(counts);
  std::vector<int> classes(8, 4);
  DypaConfig cfg;
  cfg.base_dt = 8;
  EXPECT_EQ(widths(allocate(scores, cfg, 64, classes)), (std::vector<int>{8, 16, 32, 64}));
  cfg.growth = 1.0;
  EXPECT_EQ(widths(allocate(scores, cfg, 64, classes)), (std::vector<int>{8}));
}

TEST(Allocate, WidthNonDecreasingInQuartile) {
  std::vector<std::int64_t> counts = {50, 3, 700, 12, 88, 41, 9, 1000, 5, 300, 61};
  const auto scores = score_tasks(counts);
  std::vector<int> classes(counts.size(), 3);
  DypaConfig cfg;
  cfg.base_dt = 8;
  const auto alloc = allocate(scores, cfg, 64, classes);
  for (std::size_t a = 0; a < counts.size(); ++a)
    for (std::size_t b = 0; b < counts.size(); ++b) {
      if (scores[a].quartile < scores[b].quartile) {
        EXPECT_LE(alloc[a].d_t, alloc[b].d_t);
      }
    }
}

TEST(Allocate, NonDivisibleWidthIsConfigError) {
  std::vector<std::int64_t> counts = {1, 2, 3, 4};
  std::vector<int> classes(4, 3);
  DypaConfig cfg;
  cfg.base_dt = 6;  // 6, 12, 24, 48 with 4 heads: 6 fails
  try {
    allocate(score_tasks(counts), cfg, 64, classes);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  cfg.base_dt = 64;  // 512 > 2 * 64
  EXPECT_THROW(allocate(score_tasks(counts), cfg, 64, classes), Error);
}

TEST(AllocationTotal, BaseWidthSumAndRatio) {
  std::vector<std::int64_t> counts(100);
  std::iota(counts.begin(), counts.end(), 1);
  std::vector<int> classes(100, 10);
  const auto alloc = allocate(score_tasks(counts), DypaConfig{}, 768, classes);
  auto pc = [](int dt) { return param_count(HeadConfig{HeadKind::kAttention, 768, dt, 4, 10}); };
  const std::int64_t expected = 25 * (pc(128) + pc(256) + pc(512) + pc(1024));
  EXPECT_EQ(allocation_param_total(alloc), expected);
  // Hand expansion: projection, four d_t x d_t attention maps, classifier.
  auto by_hand = [](std::int64_t dt) { return 768 * dt + dt + 4 * (dt * dt + dt) + dt * 10 + 10; };
  EXPECT_EQ(expected, 25 * (by_hand(128) + by_hand(256) + by_hand(512) + by_hand(1024)));
  const double fc_total = 100.0 * static_cast<double>(param_count(HeadConfig{HeadKind::kFc, 768, 0, 0, 10}));
  const double ratio = fc_total / static_cast<double>(expected);
  // The 1024-wide quartile alone outweighs an FC head, so at this ladder the
  // attention heads cost about 3x more than FC heads in total.
  EXPECT_NEAR(ratio, 59828200.0 / 176849000.0, 1e-12);
  RecordProperty("fc_over_dypa_ratio", std::to_string(ratio));
}

TEST(AllocationTotal, DegenerateAndEmpty) {
  std::vector<std::int64_t> counts(100, 7);
  std::vector<int> classes(100, 10);
  DypaConfig cfg;
  cfg.base_dt = 64;
  cfg.growth = 1.0;
  const auto alloc = allocate(score_tasks(counts), cfg, 768, classes);
  EXPECT_EQ(allocation_param_total(alloc), 100 * param_count(HeadConfig{HeadKind::kAttention, 768, 64, 4, 10}));
  EXPECT_EQ(allocation_param_total(HeadAllocation{}), 0);
}

TEST(AllocationTotal, EqualsLiveModelHeadScalars) {
  GenConfig g;
  g.num_tasks = 9;
  g.size_mu = std::log(40.0);
  g.class_max = 12;
  g.tokens_per_example = 4;
  const auto ds = generate(g);
  DypaConfig cfg;
  cfg.base_dt = 8;
  std::vector<int> classes;
  for (const auto& t : ds.tasks) classes.push_back(t.num_classes);
  const auto alloc = allocate(score_tasks(complexity_counts(ds, cfg.source)), cfg, 32, classes);
  BackboneConfig bb;
  bb.hidden = 32;
  bb.ff = 32;
  bb.layers = 1;
  MtlModel model(bb, alloc, 3);
  EXPECT_EQ(static_cast<std::int64_t>(model.head_param_count()), allocation_param_total(alloc));
}

TEST(ComplexityCounts, SourceSelection) {
  GenConfig g;
  g.num_tasks = 5;
  g.size_mu = std::log(40.0);
  g.class_max = 12;
  const auto ds = generate(g);
  const auto ex = complexity_counts(ds, ComplexitySource::kExampleCount);
  const auto cl = complexity_counts(ds, ComplexitySource::kClassCount);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(ex[t], static_cast<std::int64_t>(ds.data[t].train.size()));
    EXPECT_EQ(cl[t], ds.tasks[t].num_classes);
  }
}

}  // namespace
}  // namespace mtl

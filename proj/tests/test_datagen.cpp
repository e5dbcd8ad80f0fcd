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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "mtlkit/datagen.hpp"
#include "mtlkit/errors.hpp"

namespace mtl {
namespace {

namespace fs = std::filesystem;

GenConfig small_config(int tasks = 6) {
  GenConfig c;
  c.num_tasks = tasks;
  c.size_mu = std::log(60.0);
  c.size_sigma = 0.5;
  c.class_min = 3;
  c.class_max = 8;
  c.tokens_per_example = 6;
  c.seed = 17;
  return c;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mtlkit_datagen_" + name);
  fs::remove_all(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIo;
}

TEST(Generate, SameSeedIsIdentical) {
  const auto a = generate(small_config());
  const auto b = generate(small_config());
  EXPECT_EQ(a, b);
  EXPECT_EQ(manifest_text(a), manifest_text(b));
  GenConfig other = small_config();
  other.seed = 18;
  EXPECT_NE(a, generate(other));
}

TEST(Generate, SatisfiesDatasetInvariants) {
  GenConfig c = small_config(12);
  c.label_noise = 0.2;
  const auto ds = generate(c);
  ASSERT_EQ(ds.num_tasks(), 12u);
  EXPECT_NO_THROW(ds.validate());
  for (std::size_t t = 0; t < ds.num_tasks(); ++t) {
    const auto& spec = ds.tasks[t];
    EXPECT_EQ(spec.task_id, static_cast<int>(t));
    EXPECT_EQ(spec.group_id, static_cast<int>(t / 2));
    EXPECT_GE(spec.num_examples, spec.num_classes);
    EXPECT_GE(spec.num_classes, c.class_min);
    EXPECT_LE(spec.num_classes, c.class_max);
    const auto& d = ds.data[t];
    EXPECT_EQ(static_cast<long>(d.test.size()), std::lround(0.2 * spec.num_examples));
    EXPECT_EQ(static_cast<int>(d.train.size() + d.test.size()), spec.num_examples);
    std::set<int> seen;
    for (const auto* part : {&d.train, &d.test}) {
      for (const auto& ex : *part) {
        EXPECT_TRUE(seen.insert(ex.index).second) << "example in both splits";
        EXPECT_GE(ex.label, 0);
        EXPECT_LT(ex.label, spec.num_classes);
        EXPECT_EQ(static_cast<int>(ex.text_tokens.size()), c.tokens_per_example);
        for (int tok : ex.text_tokens) {
          EXPECT_GE(tok, 0);
          EXPECT_LT(tok, c.vocab_size);
        }
        EXPECT_GE(static_cast<int>(ex.image_embeddings.size()), c.images_min);
        EXPECT_LE(static_cast<int>(ex.image_embeddings.size()), c.images_max);
        for (const auto& e : ex.image_embeddings) EXPECT_EQ(static_cast<int>(e.size()), c.d_img);
      }
    }
  }
}

TEST(Generate, ClassBoundAboveVocabularyIsConfigError) {
  GenConfig c = small_config();
  c.vocab_size = 64;
  c.class_max = 65;
  EXPECT_EQ(kind_of([&] { generate(c); }), ErrorKind::kConfig);
  c = small_config();
  c.correlation = 1.5;
  EXPECT_EQ(kind_of([&] { generate(c); }), ErrorKind::kConfig);
  c = small_config();
  c.label_noise = 0.5;
  EXPECT_EQ(kind_of([&] { generate(c); }), ErrorKind::kConfig);
}

TEST(Generate, ZeroCorrelationSharesNoPrototypes) {
  GenConfig c = small_config(10);
  c.correlation = 0.0;
  GenTrace trace;
  generate(c, &trace);
  for (const auto& task : trace.prototype_source)
    for (int src : task) EXPECT_EQ(src, -1);
  // No prototype vector appears in two tasks.
  std::set<std::vector<double>> seen;
  for (const auto& task : trace.prototypes)
    for (const auto& p : task) EXPECT_TRUE(seen.insert(p).second);
}

TEST(Generate, FullCorrelationPrototypesDifferOnlyByJitter) {
  GenConfig c = small_config(6);
  c.correlation = 1.0;
  c.class_min = c.class_max = 5;
  c.prototype_jitter = 0.0;
  GenTrace trace;
  generate(c, &trace);
  for (std::size_t t = 0; t < trace.prototypes.size(); ++t) {
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_EQ(trace.prototype_source[t][k], static_cast<int>(k));
      EXPECT_EQ(trace.prototypes[t][k], trace.prototypes[0][k]);
      EXPECT_EQ(trace.prototypes[t][k], trace.pool[k]);
    }
  }
  c.prototype_jitter = 0.3;
  generate(c, &trace);
  double max_dev = 0.0;
  for (std::size_t t = 0; t < trace.prototypes.size(); ++t)
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t j = 0; j < trace.pool[k].size(); ++j)
        max_dev = std::max(max_dev, std::abs(trace.prototypes[t][k][j] - trace.pool[k][j]));
  EXPECT_GT(max_dev, 0.0);
  EXPECT_LT(max_dev, 0.3 * 6.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TEST(Generate, TaskSizesFollowLogNormal) {
  GenConfig c;
  c.num_tasks = 1200;
  c.size_mu = std::log(150.0);
  c.size_sigma = 0.8;
  c.class_min = 2;
  c.class_max = 4;
  c.min_examples = 2;
  c.tokens_per_example = 2;
  c.images_min = 0;
  c.images_max = 0;
  c.seed = 5;
  const auto ds = generate(c);
  std::vector<double> sizes;
  for (const auto& t : ds.tasks) sizes.push_back(t.num_examples);
  std::sort(sizes.begin(), sizes.end());
  const double n = static_cast<double>(sizes.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double f = normal_cdf((std::log(sizes[i]) - c.size_mu) / c.size_sigma);
    ks = std::max({ks, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  // One-sample KS critical value at the 1% level.
  EXPECT_LT(ks, 1.63 / std::sqrt(n));
}

// Multinomial logistic regression trained by full-batch gradient descent on
// the image features of one task; returns training accuracy.
double logistic_train_accuracy(const std::vector<Example>& train, int classes, int d_img) {
  const std::size_t d = static_cast<std::size_t>(d_img) + 1;
  const std::size_t C = static_cast<std::size_t>(classes);
  std::vector<std::vector<double>> x;
  for (const auto& ex : train) {
    std::vector<double> f(d, 0.0);
    for (const auto& e : ex.image_embeddings)
      for (std::size_t j = 0; j < e.size(); ++j) f[j] += e[j] / static_cast<double>(ex.image_embeddings.size());
    f[d - 1] = 1.0;
    x.push_back(f);
  }
  std::vector<double> w(C * d, 0.0);
  auto scores = [&](const std::vector<double>& f) {
    std::vector<double> s(C, 0.0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < d; ++j) s[c] += w[c * d + j] * f[j];
    return s;
  };
  for (int it = 0; it < 3000; ++it) {
    std::vector<double> grad(C * d, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto s = scores(x[i]);
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (auto& v : s) z += (v = std::exp(v - mx));
      for (std::size_t c = 0; c < C; ++c) {
        const double p = s[c] / z - (static_cast<int>(c) == train[i].label ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[c * d + j] += p * x[i][j];
      }
    }
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= 2.0 * grad[k] / static_cast<double>(x.size());
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto s = scores(x[i]);
    correct += static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin()) == train[i].label;
  }
  return static_cast<double>(correct) / static_cast<double>(x.size());
}

TEST(Generate, NoiselessDataIsLinearlySeparable) {
  GenConfig c = small_config(5);
  c.label_noise = 0.0;
  c.example_noise = 0.0;
  c.image_noise = 0.0;
  c.class_min = 3;
  c.class_max = 8;
  const auto ds = generate(c);
  for (std::size_t t = 0; t < ds.num_tasks(); ++t) {
    EXPECT_EQ(logistic_train_accuracy(ds.data[t].train, ds.tasks[t].num_classes, c.d_img), 1.0) << "task " << t;
  }
}

TEST(Split, EightyTwentyWithRounding) {
  const int sizes[] = {10, 5, 2};
  const auto s = split(sizes, 0.2, 3);
  EXPECT_EQ(s[0].train.size(), 8u);
  EXPECT_EQ(s[0].test.size(), 2u);
  EXPECT_EQ(s[1].train.size(), 4u);
  EXPECT_EQ(s[1].test.size(), 1u);
  EXPECT_EQ(s[2].train.size() + s[2].test.size(), 2u);
  for (const auto& part : s) {
    std::vector<std::size_t> all = part.train;
    all.insert(all.end(), part.test.begin(), part.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    EXPECT_TRUE(std::is_sorted(part.train.begin(), part.train.end()));
    EXPECT_TRUE(std::is_sorted(part.test.begin(), part.test.end()));
  }
}

TEST(Split, DeterministicPerSeed) {
  const int sizes[] = {40, 17};
  const auto a = split(sizes, 0.2, 9);
  const auto b = split(sizes, 0.2, 9);
  const auto c = split(sizes, 0.2, 10);
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_EQ(a[t].test, b[t].test);
    EXPECT_EQ(a[t].train, b[t].train);
  }
  EXPECT_NE(a[0].test, c[0].test);
}

TEST(Split, TooSmallTaskIsDatasetError) {
  const int sizes[] = {10, 1};
  EXPECT_EQ(kind_of([&] { split(sizes, 0.2, 1); }), ErrorKind::kDataset);
}

TEST(ExportIngest, RoundTripIsExact) {
  const auto ds = generate(small_config());
  const auto dir = scratch("roundtrip");
  export_dataset(ds, dir);
  ASSERT_TRUE(fs::exists(dir / "manifest"));
  ASSERT_TRUE(fs::exists(dir / "examples.jsonl"));
  const auto back = ingest(dir);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(manifest_text(back), manifest_text(ds));
  fs::remove_all(dir);
}

TEST(ExportIngest, LinesInCanonicalOrder) {
  const auto ds = generate(small_config(3));
  const auto dir = scratch("order");
  export_dataset(ds, dir);
  std::ifstream in(dir / "examples.jsonl");
  std::string line;
  std::vector<std::tuple<int, std::string, int>> keys;
  while (std::getline(in, line)) {
    auto field = [&](const std::string& name) {
      auto p = line.find("\"" + name + "\":");
      return line.substr(p + name.size() + 3);
    };
    const int task = std::stoi(field("task_id"));
    const std::string split_name = field("split").substr(1, field("split").find('"', 1) - 1);
    const int index = std::stoi(field("index"));
    keys.emplace_back(task, split_name, index);
  }
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  fs::remove_all(dir);
}

TEST(ExportIngest, EmptyTaskListIsIngestionError) {
  const auto dir = scratch("empty");
  fs::create_directories(dir);
  std::ofstream(dir / "manifest") << R"({"format":"mtlkit-dataset","version":1,"vocab_size":16,"d_img":4,)"
                                  << R"("max_text_len":4,"test_fraction":0.2,"split_seed":1,"tasks":[]})";
  std::ofstream(dir / "examples.jsonl") << "";
  EXPECT_EQ(kind_of([&] { ingest(dir); }), ErrorKind::kIngestion);
  fs::remove_all(dir);
}

TEST(ExportIngest, LabelEqualToClassCountNamesLine) {
  const auto ds = generate(small_config(2));
  const auto dir = scratch("badlabel");
  export_dataset(ds, dir);
  std::vector<std::string> lines;
  {
    std::ifstream in(dir / "examples.jsonl");
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  const std::size_t target = 3;  // zero-based line index -> line 4
  const int task = ds.tasks[0].num_classes;
  auto& l = lines[target];
  const auto p = l.find("\"label\":");
  const auto e = l.find(',', p);
  l = l.substr(0, p) + "\"label\":" + std::to_string(task) + l.substr(e);
  {
    std::ofstream out(dir / "examples.jsonl", std::ios::trunc);
    for (const auto& x : lines) out << x << '\n';
  }
  std::string msg;
  EXPECT_EQ(kind_of([&] { ingest(dir); }, &msg), ErrorKind::kIngestion);
  EXPECT_NE(msg.find("examples.jsonl:4"), std::string::npos) << msg;
  fs::remove_all(dir);
}

TEST(ExportIngest, WrongEmbeddingWidthAndUnknownTask) {
  const auto ds = generate(small_config(2));
  const auto dir = scratch("badrecords");
  export_dataset(ds, dir);
  auto with_line = [&](const std::string& bad) {
    std::ofstream out(dir / "examples.jsonl", std::ios::app);
    out << bad << '\n';
  };
  with_line(R"({"task_id":7,"split":"train","index":999,"label":0,"text_tokens":[1],"image_embeddings":[]})");
  std::string msg;
  EXPECT_EQ(kind_of([&] { ingest(dir); }, &msg), ErrorKind::kIngestion);
  EXPECT_NE(msg.find("unknown task_id"), std::string::npos);
  export_dataset(ds, dir);
  with_line(R"({"task_id":0,"split":"train","index":999,"label":0,"text_tokens":[1],"image_embeddings":[[1.0,2.0]]})");
  EXPECT_EQ(kind_of([&] { ingest(dir); }, &msg), ErrorKind::kIngestion);
  EXPECT_NE(msg.find("width"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Oversized, AppendsOneTaskTenTimesLargest) {
  const auto ds = generate(small_config(4));
  int largest = 0;
  for (const auto& t : ds.tasks) largest = std::max(largest, t.num_examples);
  const auto big = add_oversized_task(ds, 10.0);
  ASSERT_EQ(big.num_tasks(), ds.num_tasks() + 1);
  EXPECT_EQ(big.tasks.back().num_examples, 10 * largest);
  EXPECT_EQ(big.tasks.back().task_id, static_cast<int>(ds.num_tasks()));
  for (std::size_t t = 0; t < ds.num_tasks(); ++t) {
    EXPECT_EQ(big.tasks[t], ds.tasks[t]);
    EXPECT_EQ(big.data[t], ds.data[t]);
  }
  EXPECT_NO_THROW(big.validate());
}

TEST(Oversized, ExactScaleExample) {
  GenConfig c = small_config(1);
  c.min_examples = 500;
  c.max_examples = 500;
  const auto ds = generate(c);
  ASSERT_EQ(ds.tasks[0].num_examples, 500);
  EXPECT_EQ(add_oversized_task(ds, 10.0).tasks.back().num_examples, 5000);
}

TEST(Subset, RenumbersDensely) {
  const auto ds = generate(small_config(5));
  const int ids[] = {3, 1};
  const auto s = subset(ds, ids);
  ASSERT_EQ(s.num_tasks(), 2u);
  EXPECT_EQ(s.tasks[0].task_id, 0);
  EXPECT_EQ(s.tasks[0].num_classes, ds.tasks[3].num_classes);
  EXPECT_EQ(s.data[1].train.size(), ds.data[1].train.size());
  for (const auto& ex : s.data[0].train) EXPECT_EQ(ex.task_id, 0);
  EXPECT_NO_THROW(s.validate());
}

}  // namespace
}  // namespace mtl

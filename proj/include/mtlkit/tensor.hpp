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

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mtl {

using Shape = std::vector<std::size_t>;

/// Dense row-major tensor of doubles. Rank 1 and rank 2 are what the
/// rest of the library uses; a rank-1 tensor of length n behaves as a
/// 1 x n row wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept { return shape_.size() < 2 ? 1 : shape_[0]; }
  std::size_t cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  void fill(double value);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// A named trainable tensor. `grad` is allocated on first backward pass;
/// `has_grad` marks whether the current step produced a gradient for it,
/// so parameters that were not on the tape (other tasks' heads) are left
/// alone by the optimizer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  bool has_grad = false;

  void zero_grad();
};

/// Owns every parameter of a model. Parameter addresses are stable for the
/// lifetime of the store.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& add(std::string name, Tensor value);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::size_t size() const noexcept { return params_.size(); }
  /// Total scalar count of parameters whose name starts with `prefix`.
  std::size_t scalar_count(std::string_view prefix = {}) const;
  void zero_grad();

  template <class F>
  void for_each(F&& f) {
    for (auto& p : params_) f(*p);
  }
  template <class F>
  void for_each(F&& f) const {
    for (const auto& p : params_) f(static_cast<const Parameter&>(*p));
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mtl

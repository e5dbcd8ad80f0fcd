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

#include "mtlkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtlkit/errors.hpp"

namespace mtl {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kConfig: return "configuration";
    case ErrorKind::kProgress: return "progress";
    case ErrorKind::kDataset: return "dataset";
    case ErrorKind::kIngestion: return "ingestion";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kEvaluation: return "evaluation";
    case ErrorKind::kComparison: return "comparison";
    case ErrorKind::kCheckpoint: return "checkpoint";
    case ErrorKind::kIo: return "I/O";
  }
  return "unknown";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) fail(ErrorKind::kDimension, "tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) fail(ErrorKind::kDimension, "tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    fail(ErrorKind::kDimension, "data length " + std::to_string(data_.size()) + " does not match shape " +
                                    shape_string(shape_));
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) fail(ErrorKind::kDimension, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Parameter::zero_grad() {
  if (grad.size() != value.size()) grad = Tensor(value.shape());
  else grad.fill(0.0);
  has_grad = false;
}

Parameter& ParamStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) fail(ErrorKind::kConfig, "duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParamStore::at(std::string_view name) {
  auto* p = find(name);
  if (!p) fail(ErrorKind::kConfig, "unknown parameter '" + std::string(name) + "'");
  return *p;
}

std::size_t ParamStore::scalar_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p->name.starts_with(prefix)) n += p->value.size();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

}  // namespace mtl

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

#include "mtlkit/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mtlkit/errors.hpp"

namespace mtl {

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.ref = &p.value;
  n.param = &p;
  n.requires_grad = p.trainable;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, Backward back) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(back));
}

Var Graph::record(Tensor value, std::span<const Var> inputs, Backward back) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (&in.graph() != this) fail(ErrorKind::kDimension, "op inputs belong to different graphs");
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Graph::value(std::size_t id) const {
  const auto& n = nodes_[id];
  return n.ref ? *n.ref : n.value;
}

std::span<double> Graph::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

std::span<const double> Graph::grad_if_any(std::size_t id) const { return nodes_[id].grad; }

void Graph::backward(Var loss) {
  if (&loss.graph() != this) fail(ErrorKind::kDimension, "loss belongs to a different graph");
  if (value(loss.id()).size() != 1) fail(ErrorKind::kDimension, "backward() needs a single-element loss");
  grad(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.back) n.back(*this, i);
  }
  for (auto& n : nodes_) {
    if (!n.param || n.grad.empty() || !n.requires_grad) continue;
    Parameter& p = *n.param;
    if (p.grad.size() != p.value.size()) p.grad = Tensor(p.value.shape());
    auto* dst = p.grad.ptr();
    for (std::size_t j = 0; j < n.grad.size(); ++j) dst[j] += n.grad[j];
    p.has_grad = true;
  }
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  const auto M = static_cast<Eigen::Index>(m), K = static_cast<Eigen::Index>(k), N = static_cast<Eigen::Index>(n);
  MMap(c, M, N).noalias() += CMap(a, M, K) * CMap(b, K, N);
}

// C[m,k] += A[m,n] * B[k,n]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const auto M = static_cast<Eigen::Index>(m), K = static_cast<Eigen::Index>(k), N = static_cast<Eigen::Index>(n);
  MMap(c, M, K).noalias() += CMap(a, M, N) * CMap(b, K, N).transpose();
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  const auto M = static_cast<Eigen::Index>(m), K = static_cast<Eigen::Index>(k), N = static_cast<Eigen::Index>(n);
  MMap(c, K, N).noalias() += CMap(a, M, K).transpose() * CMap(b, M, N);
}

void require_same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) fail(ErrorKind::kDimension, "op inputs belong to different graphs");
}

std::string dims(const Tensor& t) { return shape_string(t.shape()); }

}  // namespace

Var matmul(Var a, Var b) {
  require_same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) fail(ErrorKind::kDimension, "matmul " + dims(av) + " x " + dims(bv));
  Tensor out({m, n});
  gemm_nn(m, k, n, av.ptr(), bv.ptr(), out.ptr());
  return a.graph().record(std::move(out), {a, b}, [a, b, m, k, n](Graph& g, std::size_t self) {
    auto dc = g.grad(self);
    if (g.requires_grad(a.id())) gemm_nt(m, n, k, dc.data(), b.value().ptr(), g.grad(a.id()).data());
    if (g.requires_grad(b.id())) gemm_tn(m, k, n, a.value().ptr(), dc.data(), g.grad(b.id()).data());
  });
}

Var linear(Var x, Var w, Var b) {
  require_same_graph(x, w);
  require_same_graph(x, b);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  const std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
  if (wv.rows() != k || bv.size() != n) {
    fail(ErrorKind::kDimension, "linear " + dims(xv) + " x " + dims(wv) + " + " + dims(bv));
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) std::copy(bv.ptr(), bv.ptr() + n, out.ptr() + i * n);
  gemm_nn(m, k, n, xv.ptr(), wv.ptr(), out.ptr());
  return x.graph().record(std::move(out), {x, w, b}, [x, w, b, m, k, n](Graph& g, std::size_t self) {
    auto dc = g.grad(self);
    if (g.requires_grad(x.id())) gemm_nt(m, n, k, dc.data(), w.value().ptr(), g.grad(x.id()).data());
    if (g.requires_grad(w.id())) gemm_tn(m, k, n, x.value().ptr(), dc.data(), g.grad(w.id()).data());
    if (g.requires_grad(b.id())) {
      auto db = g.grad(b.id());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) db[j] += dc[i * n + j];
    }
  });
}

Var add(Var a, Var b) {
  require_same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) fail(ErrorKind::kDimension, "add " + dims(av) + " + " + dims(bv));
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
    auto d = g.grad(self);
    for (Var in : {a, b}) {
      if (!g.requires_grad(in.id())) continue;
      auto di = g.grad(in.id());
      for (std::size_t i = 0; i < d.size(); ++i) di[i] += d[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return a.graph().record(std::move(out), {a}, [a, s](Graph& g, std::size_t self) {
    auto d = g.grad(self);
    auto da = g.grad(a.id());
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += s * d[i];
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  return x.graph().record(std::move(out), {x}, [x](Graph& g, std::size_t self) {
    auto d = g.grad(self);
    auto dx = g.grad(x.id());
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (xv[i] > 0.0) dx[i] += d[i];
  });
}

Var gelu(Var x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
  }
  return x.graph().record(std::move(out), {x}, [x](Graph& g, std::size_t self) {
    auto d = g.grad(self);
    auto dx = g.grad(x.id());
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = xv[i];
      const double t = std::tanh(kC * (v + kA * v * v * v));
      const double dt = (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
      dx[i] += d[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require_same_graph(x, gamma);
  require_same_graph(x, beta);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    fail(ErrorKind::kDimension, "layer_norm width " + std::to_string(n) + " vs gamma " + dims(gamma.value()));
  }
  Tensor out(xv.shape());
  std::vector<double> xhat(m * n), rstd(m);
  const double* gv = gamma.value().ptr();
  const double* bv = beta.value().ptr();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.ptr() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mean) * rstd[i];
      out(i, j) = gv[j] * xhat[i * n + j] + bv[j];
    }
  }
  return x.graph().record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Graph& g, std::size_t self) {
        auto dy = g.grad(self);
        const double* gv = gamma.value().ptr();
        if (g.requires_grad(gamma.id())) {
          auto dg = g.grad(gamma.id());
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) dg[j] += dy[i * n + j] * xhat[i * n + j];
        }
        if (g.requires_grad(beta.id())) {
          auto db = g.grad(beta.id());
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
        }
        if (g.requires_grad(x.id())) {
          auto dx = g.grad(x.id());
          std::vector<double> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = dy[i * n + j] * gv[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat[i * n + j];
            }
            mean_d /= static_cast<double>(n);
            mean_dx /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j)
              dx[i * n + j] += rstd[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx);
          }
        }
      });
}

Tensor softmax(const Tensor& logits) {
  Tensor out(logits.shape());
  const std::size_t m = logits.rows(), n = logits.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = logits.ptr() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (out(i, j) = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= z;
  }
  return out;
}

Var softmax_rows(Var x) {
  Tensor out = softmax(x.value());
  const std::size_t m = out.rows(), n = out.cols();
  return x.graph().record(out, {x}, [x, m, n, p = out](Graph& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(x.id());
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[i * n + j] * p(i, j);
      for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += p(i, j) * (dy[i * n + j] - dot);
    }
  });
}

Var mean_rows(Var x, std::span<const std::uint8_t> row_mask) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (!row_mask.empty() && row_mask.size() != m) {
    fail(ErrorKind::kDimension, "mean_rows mask length " + std::to_string(row_mask.size()) + " vs " + dims(xv));
  }
  std::vector<std::uint8_t> mask(row_mask.begin(), row_mask.end());
  if (mask.empty()) mask.assign(m, 1);
  const auto count = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
  if (count == 0) fail(ErrorKind::kDimension, "mean_rows over an empty row set");
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    for (std::size_t j = 0; j < n; ++j) out[j] += xv(i, j);
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
  return x.graph().record(std::move(out), {x}, [x, m, n, inv, mask = std::move(mask)](Graph& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(x.id());
    for (std::size_t i = 0; i < m; ++i) {
      if (!mask[i]) continue;
      for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += dy[j] * inv;
    }
  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const Tensor& tv = table.value();
  const std::size_t rows = tv.rows(), n = tv.cols();
  if (ids.empty()) fail(ErrorKind::kDimension, "gather_rows with no ids");
  Tensor out({ids.size(), n});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      fail(ErrorKind::kDimension, "gather_rows id " + std::to_string(ids[i]) + " outside table " + dims(tv));
    }
    std::copy(tv.ptr() + ids[i] * n, tv.ptr() + (ids[i] + 1) * n, out.ptr() + i * n);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return table.graph().record(std::move(out), {table}, [table, n, idx = std::move(idx)](Graph& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dt = g.grad(table.id());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) dt[idx[i] * n + j] += dy[i * n + j];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kDimension, "concat_rows with no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_same_graph(parts.front(), p);
    if (p.cols() != n) fail(ErrorKind::kDimension, "concat_rows column mismatch " + dims(p.value()));
    m += p.rows();
  }
  Tensor out({m, n});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.ptr(), v.ptr() + v.size(), out.ptr() + offset);
    offset += v.size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().graph().record(std::move(out), parts, [inputs](Graph& g, std::size_t self) {
    auto dy = g.grad(self);
    std::size_t offset = 0;
    for (const auto& in : inputs) {
      const std::size_t sz = in.value().size();
      if (g.requires_grad(in.id())) {
        auto di = g.grad(in.id());
        for (std::size_t j = 0; j < sz; ++j) di[j] += dy[offset + j];
      }
      offset += sz;
    }
  });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  return x.graph().record(Tensor({1}, {s}), {x}, [x](Graph& g, std::size_t self) {
    const double d = g.grad(self)[0];
    auto dx = g.grad(x.id());
    for (auto& v : dx) v += d;
  });
}

Var softmax_xent(Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  const std::size_t batch = lv.rows(), classes = lv.cols();
  if (labels.size() != batch) {
    fail(ErrorKind::kDimension, "softmax_xent: " + std::to_string(labels.size()) + " labels for " + dims(lv));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorKind::kLabel, "label " + std::to_string(y) + " outside [0," + std::to_string(classes) + ")");
    }
  }
  Tensor probs = softmax(lv);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = lv.ptr() + i * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t j = 0; j < classes; ++j) z += std::exp(row[j] - mx);
    loss += mx + std::log(z) - row[labels[i]];
  }
  loss /= static_cast<double>(batch);
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.graph().record(
      Tensor({1}, {loss}), {logits},
      [logits, batch, classes, probs = std::move(probs), ys = std::move(ys)](Graph& g, std::size_t self) {
        const double d = g.grad(self)[0] / static_cast<double>(batch);
        auto dl = g.grad(logits.id());
        for (std::size_t i = 0; i < batch; ++i) {
          for (std::size_t j = 0; j < classes; ++j) dl[i * classes + j] += d * probs(i, j);
          dl[i * classes + static_cast<std::size_t>(ys[i])] -= d;
        }
      });
}

Var attention_core(Var q, Var k, Var v, std::size_t heads, std::span<const std::uint8_t> key_mask) {
  require_same_graph(q, k);
  require_same_graph(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t s = qv.rows(), d = qv.cols();
  if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) {
    fail(ErrorKind::kDimension, "attention q/k/v shapes " + dims(qv) + " " + dims(kv) + " " + dims(vv));
  }
  if (heads == 0 || d % heads != 0) {
    fail(ErrorKind::kConfig, "width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  }
  if (!key_mask.empty() && key_mask.size() != s) fail(ErrorKind::kDimension, "attention mask length mismatch");
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<std::uint8_t> mask(key_mask.begin(), key_mask.end());
  if (mask.empty()) mask.assign(s, 1);
  if (std::none_of(mask.begin(), mask.end(), [](auto m) { return m != 0; })) {
    fail(ErrorKind::kDimension, "attention with every key masked");
  }

  // probs[h][i][j]
  std::vector<double> probs(heads * s * s, 0.0);
  Tensor out({s, d});
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    double* ph = probs.data() + h * s * s;
    for (std::size_t i = 0; i < s; ++i) {
      double* prow = ph + i * s;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s; ++j) {
        if (!mask[j]) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += qv(i, off + c) * kv(j, off + c);
        prow[j] = dot * sc;
        mx = std::max(mx, prow[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        prow[j] = mask[j] ? std::exp(prow[j] - mx) : 0.0;
        z += prow[j];
      }
      for (std::size_t j = 0; j < s; ++j) prow[j] /= z;
      for (std::size_t j = 0; j < s; ++j) {
        if (prow[j] == 0.0) continue;
        for (std::size_t c = 0; c < dh; ++c) out(i, off + c) += prow[j] * vv(j, off + c);
      }
    }
  }
  return q.graph().record(
      std::move(out), {q, k, v},
      [q, k, v, s, d, dh, heads, sc, probs = std::move(probs)](Graph& g, std::size_t self) {
        auto dy = g.grad(self);
        const Tensor& qv = q.value();
        const Tensor& kv = k.value();
        const Tensor& vv = v.value();
        const bool need_q = g.requires_grad(q.id());
        const bool need_k = g.requires_grad(k.id());
        const bool need_v = g.requires_grad(v.id());
        std::span<double> dq, dk, dv;
        if (need_q) dq = g.grad(q.id());
        if (need_k) dk = g.grad(k.id());
        if (need_v) dv = g.grad(v.id());
        std::vector<double> dp(s);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * dh;
          const double* ph = probs.data() + h * s * s;
          for (std::size_t i = 0; i < s; ++i) {
            const double* prow = ph + i * s;
            double dot = 0.0;
            for (std::size_t j = 0; j < s; ++j) {
              double acc = 0.0;
              for (std::size_t c = 0; c < dh; ++c) acc += dy[i * d + off + c] * vv(j, off + c);
              dp[j] = acc;
              dot += acc * prow[j];
            }
            for (std::size_t j = 0; j < s; ++j) {
              if (prow[j] == 0.0) continue;
              if (need_v)
                for (std::size_t c = 0; c < dh; ++c) dv[j * d + off + c] += prow[j] * dy[i * d + off + c];
              const double ds = prow[j] * (dp[j] - dot) * sc;
              if (need_q)
                for (std::size_t c = 0; c < dh; ++c) dq[i * d + off + c] += ds * kv(j, off + c);
              if (need_k)
                for (std::size_t c = 0; c < dh; ++c) dk[j * d + off + c] += ds * qv(i, off + c);
            }
          }
        }
      });
}

Var self_attention(Var x, const AttentionWeights& w, std::size_t heads, std::span<const std::uint8_t> key_mask) {
  const std::size_t d = w.wq.cols();
  if (heads == 0 || d % heads != 0) {
    fail(ErrorKind::kConfig, "attention width " + std::to_string(d) + " not divisible by " +
                                 std::to_string(heads) + " heads");
  }
  Var q = linear(x, w.wq, w.bq);
  Var k = linear(x, w.wk, w.bk);
  Var v = linear(x, w.wv, w.bv);
  return linear(attention_core(q, k, v, heads, key_mask), w.wo, w.bo);
}

}  // namespace mtl

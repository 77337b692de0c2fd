// Copyright 2026 The motas-lab Authors
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

#include "motas/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "motas/error.hpp"
#include "motas/rng.hpp"

namespace motas::grad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

ConstMatMap as_mat(const Tensor& t) {
  return ConstMatMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

MatMap as_mat(std::vector<double>& buf, std::size_t rows, std::size_t cols) {
  return MatMap(buf.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatMap grad_mat(const Node& n) {
  return ConstMatMap(n.grad.data(), static_cast<Eigen::Index>(n.value.rows()),
                     static_cast<Eigen::Index>(n.value.cols()));
}

MatMap grad_mat(Node& n) {
  return as_mat(n.grad_buffer(), n.value.rows(), n.value.cols());
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw InvalidArgument(std::string(op) + ": " + detail);
}

// Wraps a freshly computed value; keeps the backward closure only when some
// parent participates in differentiation.
Var make_result(Tensor value, std::vector<std::shared_ptr<Node>> parents,
                std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const auto& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Var::from_node(std::move(node));
}

inline double sigmoid_scalar(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw InvalidArgument("Tensor: " + std::to_string(values_.size()) +
                          " values do not fill shape " + shape_string());
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::parameter(Tensor value, std::string name) {
  Var v(std::move(value), true);
  v.node_->name = std::move(name);
  return v;
}

Var Var::from_node(std::shared_ptr<Node> node) {
  Var v;
  v.node_ = std::move(node);
  return v;
}

double Var::item() const {
  require(value().size() == 1, "item", "tensor is " + value().shape_string());
  return value()[0];
}

void Var::zero_grad() { node_->grad.clear(); }

void Var::backward() {
  require(value().size() == 1, "backward", "loss must be scalar, got " + value().shape_string());
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul",
          a.value().shape_string() + " x " + b.value().shape_string());
  Tensor out(a.rows(), b.cols());
  std::vector<double> buf(a.rows() * b.cols());
  as_mat(buf, a.rows(), b.cols()).noalias() = as_mat(a.value()) * as_mat(b.value());
  out = Tensor(a.rows(), b.cols(), std::move(buf));
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), {pa, pb}, [pa, pb](Node& self) {
    auto g = grad_mat(static_cast<const Node&>(self));
    if (pa->requires_grad) grad_mat(*pa).noalias() += g * as_mat(pb->value).transpose();
    if (pb->requires_grad) grad_mat(*pb).noalias() += as_mat(pa->value).transpose() * g;
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  require(x.cols() == weight.cols(), "linear",
          "input " + x.value().shape_string() + " vs weight " + weight.value().shape_string());
  require(bias.value().size() == weight.rows(), "linear",
          "bias size " + std::to_string(bias.value().size()) + " vs " +
              std::to_string(weight.rows()) + " outputs");
  const std::size_t batch = x.rows(), out_dim = weight.rows();
  std::vector<double> buf(batch * out_dim);
  auto y = as_mat(buf, batch, out_dim);
  y.noalias() = as_mat(x.value()) * as_mat(weight.value()).transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(bias.value().values().data(),
                                         static_cast<Eigen::Index>(out_dim));
  y.rowwise() += b;
  auto px = x.node(), pw = weight.node(), pb = bias.node();
  return make_result(Tensor(batch, out_dim, std::move(buf)), {px, pw, pb},
                     [px, pw, pb, out_dim](Node& self) {
                       auto g = grad_mat(static_cast<const Node&>(self));
                       if (px->requires_grad)
                         grad_mat(*px).noalias() += g * as_mat(pw->value);
                       if (pw->requires_grad)
                         grad_mat(*pw).noalias() += g.transpose() * as_mat(px->value);
                       if (pb->requires_grad) {
                         VecMap db(pb->grad_buffer().data(), static_cast<Eigen::Index>(out_dim));
                         db += g.colwise().sum();
                       }
                     });
}

Var add(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "add",
          a.value().shape_string() + " vs " + b.value().shape_string());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), {pa, pb}, [pa, pb](Node& self) {
    for (auto* p : {pa.get(), pb.get()}) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "mul",
          a.value().shape_string() + " vs " + b.value().shape_string());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  auto pa = a.node(), pb = b.node();
  return make_result(std::move(out), {pa, pb}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= s;
  auto pa = a.node();
  return make_result(std::move(out), {pa}, [pa, s](Node& self) {
    auto& g = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  auto px = x.node();
  return make_result(std::move(out), {px}, [px](Node& self) {
    auto& g = px->grad_buffer();
    // Subgradient 0 at the kink.
    for (std::size_t i = 0; i < g.size(); ++i)
      if (px->value[i] > 0.0) g[i] += self.grad[i];
  });
}

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  // Kept strictly inside (0, 1) so downstream probabilities never saturate.
  constexpr double kLo = std::numeric_limits<double>::min();
  constexpr double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  for (auto& v : out.values()) v = std::clamp(sigmoid_scalar(v), kLo, kHi);
  auto px = x.node();
  return make_result(std::move(out), {px}, [px](Node& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Var tanh(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = std::tanh(v);
  auto px = x.node();
  return make_result(std::move(out), {px}, [px](Node& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax", "empty input");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  // Floor at the smallest normal double so far-below-peak entries stay positive.
  for (auto& v : out) v = std::max(v / total, std::numeric_limits<double>::min());
  return out;
}

Var softmax_rows(const Var& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  require(cols > 0, "softmax_rows", "zero-width input");
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto probs = softmax(x.value().row_span(r));
    std::copy(probs.begin(), probs.end(), out.values().begin() + r * cols);
  }
  auto px = x.node();
  return make_result(std::move(out), {px}, [px, rows, cols](Node& self) {
    auto& g = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = &self.value(r, 0);
      const double* dy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * dy[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (dy[c] - dot);
    }
  });
}

Var dropout(const Var& x, double p, bool training, Rng& rng) {
  require(p >= 0.0 && p < 1.0, "dropout", "probability must be in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.value().size());
  for (auto& m : mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  auto px = x.node();
  return make_result(std::move(out), {px}, [px, mask = std::move(mask)](Node& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", "row count mismatch");
    offsets.push_back(total);
    total += p.cols();
  }
  Tensor out(rows, total);
  std::vector<std::shared_ptr<Node>> parents;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.values().data() + r * v.cols(), v.cols(), &out(r, offsets[k]));
    parents.push_back(parts[k].node());
  }
  return make_result(std::move(out), parents, [parents, offsets, rows, total](Node& self) {
    for (std::size_t k = 0; k < parents.size(); ++k) {
      auto& p = *parents[k];
      if (!p.requires_grad) continue;
      auto& g = p.grad_buffer();
      const std::size_t w = p.value.cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c) g[r * w + c] += self.grad[r * total + offsets[k] + c];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column count mismatch");
    rows += p.rows();
  }
  std::vector<double> buf;
  buf.reserve(rows * cols);
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    buf.insert(buf.end(), p.value().values().begin(), p.value().values().end());
    parents.push_back(p.node());
  }
  return make_result(Tensor(rows, cols, std::move(buf)), parents, [parents](Node& self) {
    std::size_t offset = 0;
    for (const auto& p : parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  require(begin < end && end <= x.cols(), "slice_cols",
          "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
              x.value().shape_string());
  const std::size_t rows = x.rows(), width = end - begin, cols = x.cols();
  Tensor out(rows, width);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(x.value().values().data() + r * cols + begin, width, &out(r, 0));
  auto px = x.node();
  return make_result(std::move(out), {px}, [px, begin, width, rows, cols](Node& self) {
    auto& g = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < width; ++c) g[r * cols + begin + c] += self.grad[r * width + c];
  });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  auto px = x.node();
  return make_result(Tensor(1, 1, total), {px}, [px](Node& self) {
    auto& g = px->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Var weighted_sum(const Var& weights, std::span<const Var> experts) {
  require(!experts.empty(), "weighted_sum", "no experts");
  require(weights.cols() == experts.size(), "weighted_sum",
          "weights " + weights.value().shape_string() + " for " + std::to_string(experts.size()) +
              " experts");
  const std::size_t batch = weights.rows(), width = experts[0].cols();
  for (const auto& e : experts)
    require(e.rows() == batch && e.cols() == width, "weighted_sum", "expert shape mismatch");
  const std::size_t k = experts.size();
  Tensor out(batch, width);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& y = experts[i].value();
    for (std::size_t b = 0; b < batch; ++b) {
      const double w = weights.value()(b, i);
      for (std::size_t c = 0; c < width; ++c) out(b, c) += w * y(b, c);
    }
  }
  std::vector<std::shared_ptr<Node>> parents{weights.node()};
  for (const auto& e : experts) parents.push_back(e.node());
  return make_result(std::move(out), parents, [parents, batch, width, k](Node& self) {
    const auto& pw = *parents[0];
    for (std::size_t i = 0; i < k; ++i) {
      auto& pe = *parents[i + 1];
      for (std::size_t b = 0; b < batch; ++b) {
        const double* dout = self.grad.data() + b * width;
        if (pw.requires_grad) {
          double dot = 0.0;
          for (std::size_t c = 0; c < width; ++c) dot += dout[c] * pe.value(b, c);
          parents[0]->grad_buffer()[b * k + i] += dot;
        }
        if (pe.requires_grad) {
          auto& g = pe.grad_buffer();
          const double w = pw.value(b, i);
          for (std::size_t c = 0; c < width; ++c) g[b * width + c] += w * dout[c];
        }
      }
    }
  });
}

double bce_value(std::span<const double> probs, std::span<const double> labels) {
  require(probs.size() == labels.size(), "bce_loss",
          std::to_string(probs.size()) + " predictions vs " + std::to_string(labels.size()) +
              " labels");
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kBceClamp, 1.0 - kBceClamp);
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return loss;
}

Var bce_loss(const Var& probs, std::span<const double> labels) {
  const double loss = bce_value(probs.value().values(), labels);
  auto pp = probs.node();
  std::vector<double> y(labels.begin(), labels.end());
  return make_result(Tensor(1, 1, loss), {pp}, [pp, y = std::move(y)](Node& self) {
    auto& g = pp->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double p = std::clamp(pp->value[i], kBceClamp, 1.0 - kBceClamp);
      g[i] += self.grad[0] * (p - y[i]) / (p * (1.0 - p));
    }
  });
}

Var lstm_cell(const Var& x, const Var& h_prev, const Var& c_prev, const Var& w_ih,
              const Var& w_hh, const Var& bias) {
  const std::size_t batch = x.rows(), hidden = h_prev.cols();
  require(w_ih.rows() == 4 * hidden && w_ih.cols() == x.cols(), "lstm_cell",
          "w_ih " + w_ih.value().shape_string() + " for input " + x.value().shape_string() +
              " and hidden " + std::to_string(hidden));
  require(w_hh.rows() == 4 * hidden && w_hh.cols() == hidden, "lstm_cell",
          "w_hh " + w_hh.value().shape_string());
  require(bias.value().size() == 4 * hidden, "lstm_cell", "bias size");
  require(h_prev.rows() == batch && c_prev.rows() == batch && c_prev.cols() == hidden,
          "lstm_cell", "state shape");

  const std::size_t g4 = 4 * hidden;
  std::vector<double> gates(batch * g4);
  auto pre = as_mat(gates, batch, g4);
  pre.noalias() = as_mat(x.value()) * as_mat(w_ih.value()).transpose();
  pre.noalias() += as_mat(h_prev.value()) * as_mat(w_hh.value()).transpose();
  pre.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().values().data(),
                                                         static_cast<Eigen::Index>(g4));

  // Activated gates overwrite the pre-activations in place.
  Tensor out(batch, 2 * hidden);
  std::vector<double> tanh_c(batch * hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    double* gt = gates.data() + b * g4;
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i = sigmoid_scalar(gt[j]);
      const double f = sigmoid_scalar(gt[hidden + j]);
      const double g = std::tanh(gt[2 * hidden + j]);
      const double o = sigmoid_scalar(gt[3 * hidden + j]);
      gt[j] = i;
      gt[hidden + j] = f;
      gt[2 * hidden + j] = g;
      gt[3 * hidden + j] = o;
      const double c = f * c_prev.value()(b, j) + i * g;
      const double tc = std::tanh(c);
      tanh_c[b * hidden + j] = tc;
      out(b, j) = o * tc;
      out(b, hidden + j) = c;
    }
  }

  auto px = x.node(), ph = h_prev.node(), pc = c_prev.node();
  auto pwi = w_ih.node(), pwh = w_hh.node(), pb = bias.node();
  return make_result(
      std::move(out), {px, ph, pc, pwi, pwh, pb},
      [=, gates = std::move(gates), tanh_c = std::move(tanh_c)](Node& self) {
        std::vector<double> dgates(batch * g4);
        std::vector<double>* dc_prev = pc->requires_grad ? &pc->grad_buffer() : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* gt = gates.data() + b * g4;
          double* dg = dgates.data() + b * g4;
          const double* dout = self.grad.data() + b * 2 * hidden;
          for (std::size_t j = 0; j < hidden; ++j) {
            const double i = gt[j], f = gt[hidden + j], g = gt[2 * hidden + j],
                         o = gt[3 * hidden + j];
            const double tc = tanh_c[b * hidden + j];
            const double dh = dout[j];
            const double dc = dout[hidden + j] + dh * o * (1.0 - tc * tc);
            dg[j] = dc * g * i * (1.0 - i);
            dg[hidden + j] = dc * pc->value(b, j) * f * (1.0 - f);
            dg[2 * hidden + j] = dc * i * (1.0 - g * g);
            dg[3 * hidden + j] = dh * tc * o * (1.0 - o);
            if (dc_prev) (*dc_prev)[b * hidden + j] += dc * f;
          }
        }
        auto dG = as_mat(dgates, batch, g4);
        if (px->requires_grad) grad_mat(*px).noalias() += dG * as_mat(pwi->value);
        if (ph->requires_grad) grad_mat(*ph).noalias() += dG * as_mat(pwh->value);
        if (pwi->requires_grad) grad_mat(*pwi).noalias() += dG.transpose() * as_mat(px->value);
        if (pwh->requires_grad) grad_mat(*pwh).noalias() += dG.transpose() * as_mat(ph->value);
        if (pb->requires_grad) {
          VecMap db(pb->grad_buffer().data(), static_cast<Eigen::Index>(g4));
          db += dG.colwise().sum();
        }
      });
}

}  // namespace motas::grad

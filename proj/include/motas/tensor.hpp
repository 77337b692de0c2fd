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

// Dense double-precision tensors with a dynamic reverse-mode tape.
//
// Every op builds a node holding its value and a closure that pushes the
// node's gradient into its parents. Parameters are long-lived leaf nodes;
// the rest of the graph lives as long as the Var returned by the loss.
// All ops work on rank-2 row-major tensors; a bias is any tensor whose
// size matches the output width.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace motas {
class Rng;
}

namespace motas::grad {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor row(std::vector<double> values);
  static Tensor column(std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  bool all_finite() const;
  std::string shape_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Node {
  Tensor value;
  std::vector<double> grad;  // empty until something flows in
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  std::string name;

  std::vector<double>& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var parameter(Tensor value, std::string name);
  static Var from_node(std::shared_ptr<Node> node);

  const Tensor& value() const { return node_->value; }
  // Direct write access for optimizers and finite-difference probes.
  Tensor& mutable_value() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::string& name() const { return node_->name; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  double item() const;

  void zero_grad();
  // Seeds d(self)/d(self) = 1; self must be 1x1.
  void backward();

  const std::shared_ptr<Node>& node() const { return node_; }
  bool valid() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

Var matmul(const Var& a, const Var& b);
// x (B x in), weight (out x in), bias (out) -> x weight^T + bias.
Var linear(const Var& x, const Var& weight, const Var& bias);
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var softmax_rows(const Var& x);
// Inverted dropout; identity when !training or p == 0.
Var dropout(const Var& x, double p, bool training, Rng& rng);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);
Var sum(const Var& x);
// out[b] = sum_i weights[b, i] * experts[i][b]
Var weighted_sum(const Var& weights, std::span<const Var> experts);
// Summed binary cross-entropy over all entries of probs.
Var bce_loss(const Var& probs, std::span<const double> labels);

inline constexpr double kBceClamp = 1e-7;

// One LSTM step, gates ordered (input, forget, cell, output).
// x: B x in, h_prev/c_prev: B x H, w_ih: 4H x in, w_hh: 4H x H, bias: 4H.
// Returns B x 2H laid out as [h_t | c_t].
Var lstm_cell(const Var& x, const Var& h_prev, const Var& c_prev, const Var& w_ih,
              const Var& w_hh, const Var& bias);

// Plain-value helpers.
std::vector<double> softmax(std::span<const double> logits);
double bce_value(std::span<const double> probs, std::span<const double> labels);

}  // namespace motas::grad

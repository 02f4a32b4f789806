// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Var is a shared handle to a graph node. Operations on Vars record a
// backward closure only when at least one input requires a gradient, so
// inference over frozen parameters builds no graph. Calling backward() on a
// 1x1 result accumulates d(result)/d(leaf) into every reachable leaf's grad.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aigcvqa::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Node;

class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const;
  /// Direct write access for optimizers and checkpoint loading. Only valid on
  /// leaves; mutating an intermediate does not invalidate recorded closures.
  Matrix& mutable_value();
  const Matrix& grad() const;
  bool requires_grad() const;
  void set_requires_grad(bool flag);
  void zero_grad();

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Backward = std::function<void(const Matrix& grad_out)>;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  Backward backward;
};

/// Builds the result node of a custom op. `fn` receives d(root)/d(output)
/// and is expected to call accumulate() on each input.
Var make_op(Matrix value, std::vector<Var> inputs, Backward fn);

/// Adds `contribution` into v's gradient; no-op when v needs none.
void accumulate(const Var& v, const Matrix& contribution);

Var constant(Matrix value);
Var parameter(Matrix value);

/// Reverse sweep from a scalar root.
void backward(const Var& root);

// Elementwise and linear algebra.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
/// a (n x k) + row (1 x k) broadcast over rows.
Var add_row(const Var& a, const Var& row);
Var transpose(const Var& a);

// Activations.
Var gelu(const Var& a);
Var sigmoid(const Var& a);
/// Softmax along each row independently.
Var softmax_rows(const Var& a);

// Reductions and reshaping.
/// Column-wise mean: (n x k) -> (1 x k).
Var mean_rows(const Var& a);
Var sum(const Var& a);
Var slice_cols(const Var& a, Index begin, Index count);
Var concat_cols(std::span<const Var> parts);
Var stack_rows(std::span<const Var> rows);
Var element(const Var& a, Index row, Index col);
/// Weighted sum of 1x1 Vars with fixed coefficients.
Var linear_combination(std::span<const Var> scalars,
                       std::span<const double> weights);

// Scalar helpers (no graph).
double gelu_value(double x) noexcept;
double gelu_derivative(double x) noexcept;
double sigmoid_value(double x) noexcept;

}  // namespace aigcvqa::ad

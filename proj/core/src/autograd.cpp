// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/autograd.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "aigcvqa/error.hpp"

namespace aigcvqa::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::shape, std::string(op) + ": shape (" + std::to_string(a.rows()) + "x" +
                               std::to_string(a.cols()) + ") vs (" + std::to_string(b.rows()) +
                               "x" + std::to_string(b.cols()) + ")");
}

}  // namespace

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Matrix& Var::value() const { return node_->value; }
Matrix& Var::mutable_value() { return node_->value; }

const Matrix& Var::grad() const {
  if (node_->grad.size() == 0) node_->grad = Matrix::Zero(rows(), cols());
  return node_->grad;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }
void Var::set_requires_grad(bool flag) { node_->requires_grad = flag; }
void Var::zero_grad() { node_->grad = Matrix::Zero(rows(), cols()); }

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) fail(ErrorKind::shape, "scalar() on non-1x1 Var");
  return value()(0, 0);
}

Var make_op(Matrix value, std::vector<Var> inputs, Backward fn) {
  Var out(std::move(value));
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.parents.reserve(inputs.size());
  for (auto& in : inputs)
    if (in.requires_grad()) node.parents.push_back(in.node());
  node.backward = std::move(fn);
  return out;
}

void accumulate(const Var& v, const Matrix& contribution) {
  if (!v.requires_grad()) return;
  auto& node = *v.node();
  if (node.grad.size() == 0) {
    node.grad = contribution;
  } else {
    node.grad += contribution;
  }
}

Var constant(Matrix value) { return Var(std::move(value), false); }
Var parameter(Matrix value) { return Var(std::move(value), true); }

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1)
    fail(ErrorKind::shape, "backward() requires a scalar root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
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

  // Intermediate gradients start fresh; leaves keep accumulating.
  for (Node* node : order)
    if (node->backward) node->grad = Matrix::Zero(node->value.rows(), node->value.cols());
  root.node()->grad = Matrix::Ones(1, 1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(node->grad);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    fail(ErrorKind::shape, "matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                               std::to_string(b.rows()));
  return make_op(a.value() * b.value(), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) accumulate(b, a.value().transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  return make_op(a.value() + b.value(), {a, b}, [a, b](const Matrix& g) {
    accumulate(a, g);
    accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  return make_op(a.value() - b.value(), {a, b}, [a, b](const Matrix& g) {
    accumulate(a, g);
    if (b.requires_grad()) accumulate(b, -g);
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(const Var& a, double factor) {
  return make_op(a.value() * factor, {a},
                 [a, factor](const Matrix& g) { accumulate(a, g * factor); });
}

Var add_scalar(const Var& a, double offset) {
  return make_op(a.value().array() + offset, {a}, [a](const Matrix& g) { accumulate(a, g); });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    fail(ErrorKind::shape, "add_row: row must be 1x" + std::to_string(a.cols()));
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(out), {a, row}, [a, row](const Matrix& g) {
    accumulate(a, g);
    if (row.requires_grad()) accumulate(row, g.colwise().sum());
  });
}

Var transpose(const Var& a) {
  return make_op(a.value().transpose(), {a},
                 [a](const Matrix& g) { accumulate(a, g.transpose()); });
}

double gelu_value(double x) noexcept {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_derivative(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double sigmoid_value(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var gelu(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) { return gelu_value(x); });
  return make_op(std::move(out), {a}, [a](const Matrix& g) {
    accumulate(a, g.cwiseProduct(a.value().unaryExpr([](double x) { return gelu_derivative(x); })));
  });
}

Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) { return sigmoid_value(x); });
  Matrix local = out.array() * (1.0 - out.array());
  return make_op(std::move(out), {a},
                 [a, local](const Matrix& g) { accumulate(a, g.cwiseProduct(local)); });
}

Var softmax_rows(const Var& a) {
  Matrix out(a.rows(), a.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    const double peak = a.value().row(r).maxCoeff();
    out.row(r) = (a.value().row(r).array() - peak).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  Matrix probs = out;
  return make_op(std::move(out), {a}, [a, probs](const Matrix& g) {
    // dL/dx = p * (g - <g, p>) per row.
    Matrix dx(probs.rows(), probs.cols());
    for (Index r = 0; r < probs.rows(); ++r) {
      const double inner = g.row(r).dot(probs.row(r));
      dx.row(r) = probs.row(r).cwiseProduct((g.row(r).array() - inner).matrix());
    }
    accumulate(a, dx);
  });
}

Var mean_rows(const Var& a) {
  if (a.rows() == 0) fail(ErrorKind::input, "mean_rows: empty input");
  const double n = static_cast<double>(a.rows());
  return make_op(a.value().colwise().mean(), {a}, [a, n](const Matrix& g) {
    accumulate(a, g.replicate(a.rows(), 1) / n);
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_op(std::move(out), {a}, [a](const Matrix& g) {
    accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var slice_cols(const Var& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols())
    fail(ErrorKind::shape, "slice_cols: range out of bounds");
  return make_op(a.value().middleCols(begin, count), {a}, [a, begin, count](const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full.middleCols(begin, count) = g;
    accumulate(a, full);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::input, "concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) fail(ErrorKind::shape, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_op(std::move(out), inputs, [inputs](const Matrix& g) {
    Index at = 0;
    for (const auto& p : inputs) {
      if (p.requires_grad()) accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) fail(ErrorKind::input, "stack_rows: no inputs");
  const Index cols = rows.front().cols();
  Matrix out(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rows() != 1 || rows[i].cols() != cols)
      fail(ErrorKind::shape, "stack_rows: every input must be 1x" + std::to_string(cols));
    out.row(static_cast<Index>(i)) = rows[i].value().row(0);
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return make_op(std::move(out), inputs, [inputs](const Matrix& g) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i].requires_grad()) accumulate(inputs[i], g.row(static_cast<Index>(i)));
  });
}

Var element(const Var& a, Index row, Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols())
    fail(ErrorKind::shape, "element: index out of range");
  Matrix out(1, 1);
  out(0, 0) = a.value()(row, col);
  return make_op(std::move(out), {a}, [a, row, col](const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    full(row, col) = g(0, 0);
    accumulate(a, full);
  });
}

Var linear_combination(std::span<const Var> scalars, std::span<const double> weights) {
  if (scalars.size() != weights.size())
    fail(ErrorKind::shape, "linear_combination: size mismatch");
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < scalars.size(); ++i) out(0, 0) += weights[i] * scalars[i].scalar();
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return make_op(std::move(out), inputs, [inputs, w](const Matrix& g) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (inputs[i].requires_grad()) accumulate(inputs[i], g * w[i]);
  });
}

}  // namespace aigcvqa::ad

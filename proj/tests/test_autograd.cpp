// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "aigcvqa/autograd.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace aigcvqa;
namespace ad = aigcvqa::ad;

namespace {

ad::Var leaf(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return ad::parameter(m);
}

// Reduces a matrix to a scalar with fixed, uneven weights so every entry's
// gradient differs.
ad::Var weighted_sum(const ad::Var& m) {
  Eigen::MatrixXd w(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.3 + 0.17 * static_cast<double>(i % 7);
  return ad::sum(ad::hadamard(m, ad::constant(w)));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST(Autograd, ElementwiseAndLinearOps) {
  std::mt19937_64 gen(1);
  ad::Var a = leaf(gen, 3, 4), b = leaf(gen, 3, 4), w = leaf(gen, 4, 2), row = leaf(gen, 1, 4);
  const auto f = [&] {
    ad::Var x = ad::add(ad::hadamard(a, b), ad::scale(ad::sub(a, b), 0.7));
    x = ad::add_row(ad::add_scalar(x, 0.2), row);
    return weighted_sum(ad::matmul(x, w));
  };
  EXPECT_LT(gradcheck::check({a, b, w, row}, f).max_rel_error, kTol);
}

TEST(Autograd, Activations) {
  std::mt19937_64 gen(2);
  ad::Var a = leaf(gen, 2, 5);
  EXPECT_LT(gradcheck::check({a}, [&] { return weighted_sum(ad::gelu(a)); }).max_rel_error, kTol);
  EXPECT_LT(gradcheck::check({a}, [&] { return weighted_sum(ad::sigmoid(a)); }).max_rel_error, kTol);
  EXPECT_LT(gradcheck::check({a}, [&] { return weighted_sum(ad::softmax_rows(a)); }).max_rel_error,
            kTol);
}

TEST(Autograd, ReshapingOps) {
  std::mt19937_64 gen(3);
  ad::Var a = leaf(gen, 3, 6), b = leaf(gen, 1, 6), c = leaf(gen, 1, 6);
  const auto f = [&] {
    std::vector<ad::Var> rows{b, c, ad::mean_rows(a)};
    std::vector<ad::Var> cols{ad::slice_cols(a, 1, 3), ad::transpose(ad::transpose(a))};
    return ad::add(weighted_sum(ad::stack_rows(rows)), weighted_sum(ad::concat_cols(cols)));
  };
  EXPECT_LT(gradcheck::check({a, b, c}, f).max_rel_error, kTol);
}

TEST(Autograd, ElementAndLinearCombination) {
  std::mt19937_64 gen(4);
  ad::Var a = leaf(gen, 2, 2), s = leaf(gen, 1, 1);
  const auto f = [&] {
    std::vector<ad::Var> parts{ad::element(a, 1, 0), s, ad::element(a, 0, 1)};
    std::vector<double> w{0.5, -2.0, 3.0};
    return ad::linear_combination(parts, w);
  };
  EXPECT_LT(gradcheck::check({a, s}, f).max_rel_error, kTol);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  ad::Var x = ad::parameter(Eigen::MatrixXd::Constant(1, 1, 3.0));
  ad::Var y = ad::hadamard(x, x);  // x^2 used twice below
  ad::backward(ad::add(y, y));
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 12.0);
}

TEST(Autograd, FrozenLeavesBuildNoGraph) {
  ad::Var frozen = ad::constant(Eigen::MatrixXd::Ones(2, 2));
  ad::Var out = ad::gelu(ad::matmul(frozen, frozen));
  EXPECT_FALSE(out.requires_grad());
  EXPECT_TRUE(out.node()->parents.empty());
}

TEST(Autograd, ScalarHelpersMatchOracles) {
  for (double x : {-3.0, -0.5, 0.0, 0.25, 2.0}) {
    EXPECT_NEAR(ad::gelu_value(x), oracle::gelu(x), 1e-15);
    EXPECT_NEAR(ad::sigmoid_value(x), oracle::sigmoid(x), 1e-15);
    const double h = 1e-6;
    EXPECT_NEAR(ad::gelu_derivative(x), (oracle::gelu(x + h) - oracle::gelu(x - h)) / (2 * h), 1e-8);
  }
  EXPECT_EQ(ad::sigmoid_value(ad::gelu_value(0.0)), 0.5);
}

TEST(Autograd, SoftmaxRowsMatchesLoop) {
  Eigen::MatrixXd z(2, 3);
  z << 1, 2, 3, -1, 0, 1000;
  const Eigen::MatrixXd s = ad::softmax_rows(ad::constant(z)).value();
  for (int r = 0; r < 2; ++r) {
    const auto ref = oracle::softmax({z(r, 0), z(r, 1), z(r, 2)});
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(s(r, c), ref[c], 1e-15);
  }
}

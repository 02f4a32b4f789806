// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/objectives.hpp"

#include <cmath>
#include <vector>

#include "aigcvqa/dataset.hpp"
#include "aigcvqa/error.hpp"

namespace aigcvqa {

namespace {

void require_column(const ad::Var& pred, const Eigen::VectorXd& target, const char* op) {
  if (pred.cols() != 1 || pred.rows() != target.size())
    fail(ErrorKind::shape, std::string(op) + ": pred must be n x 1 matching target length");
  if (target.size() < 2) fail(ErrorKind::input, std::string(op) + ": need at least 2 samples");
}

}  // namespace

ad::Var plcc_loss(const ad::Var& pred, const Eigen::VectorXd& target) {
  require_column(pred, target, "plcc_loss");
  const Eigen::VectorXd a = pred.value().col(0).array() - pred.value().col(0).mean();
  const Eigen::VectorXd b = target.array() - target.mean();
  const double na = a.norm();
  const double nb = b.norm();
  if (!(nb > 0)) fail(ErrorKind::degenerate, "plcc_loss: constant target in batch");
  if (!(na > 0)) fail(ErrorKind::degenerate, "plcc_loss: constant predictions in batch");
  const double r = a.dot(b) / (na * nb);
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = (1.0 - r) / 2.0;
  // Both terms already sum to zero, so the centering Jacobian is a no-op.
  const Eigen::VectorXd dr = b / (na * nb) - r * a / (na * na);
  return ad::make_op(std::move(out), {pred}, [pred, dr](const ad::Matrix& g) {
    ad::accumulate(pred, (-0.5 * g(0, 0)) * dr);
  });
}

double plcc_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  return plcc_loss(ad::constant(pred), target).scalar();
}

ad::Var rank_loss(const ad::Var& pred, const Eigen::VectorXd& target, double margin) {
  require_column(pred, target, "rank_loss");
  const Eigen::Index n = target.size();
  const auto& p = pred.value();
  double total = 0.0;
  std::size_t pairs = 0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(target(i) > target(j))) continue;
      ++pairs;
      const double hinge = margin - (p(i, 0) - p(j, 0));
      if (hinge > 0) {
        total += hinge;
        grad(i) -= 1.0;
        grad(j) += 1.0;
      }
    }
  }
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = pairs ? total / static_cast<double>(pairs) : 0.0;
  if (pairs) grad /= static_cast<double>(pairs);
  return ad::make_op(std::move(out), {pred},
                     [pred, grad](const ad::Matrix& g) { ad::accumulate(pred, g(0, 0) * grad); });
}

double rank_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, double margin) {
  return rank_loss(ad::constant(pred), target, margin).scalar();
}

ad::Var aux_ce_loss(const ad::Var& logits, std::span<const int> labels) {
  if (logits.cols() != kDomainCount)
    fail(ErrorKind::shape, "aux_ce_loss: logits must have exactly 10 columns");
  if (logits.rows() != static_cast<Eigen::Index>(labels.size()) || labels.empty())
    fail(ErrorKind::shape, "aux_ce_loss: one label per logits row required");
  for (int label : labels)
    if (label < 0 || label >= kDomainCount)
      fail(ErrorKind::label, "aux_ce_loss: label " + std::to_string(label) + " outside [0, 9]");

  const auto& z = logits.value();
  const double batch = static_cast<double>(z.rows());
  Eigen::MatrixXd probs(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double peak = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - peak).exp().matrix();
    const double norm = probs.row(r).sum();
    probs.row(r) /= norm;
    total += peak + std::log(norm) - z(r, labels[static_cast<std::size_t>(r)]);
  }
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = total / batch;
  Eigen::MatrixXd grad = probs;
  for (Eigen::Index r = 0; r < z.rows(); ++r) grad(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  grad /= batch;
  return ad::make_op(std::move(out), {logits},
                     [logits, grad](const ad::Matrix& g) { ad::accumulate(logits, g(0, 0) * grad); });
}

double aux_ce_loss(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  return aux_ce_loss(ad::constant(logits), labels).scalar();
}

CombinedLoss combined_loss(const ad::Var& pred, const Eigen::VectorXd& target,
                           const ad::Var& logits, std::span<const int> labels,
                           const LossWeights& weights) {
  if (weights.alpha < 0 || weights.beta < 0)
    fail(ErrorKind::config, "loss weights alpha and beta must be >= 0");
  CombinedLoss out;
  const ad::Var lp = plcc_loss(pred, target);
  const ad::Var lr = rank_loss(pred, target, weights.rank_margin);
  out.parts.plcc = lp.scalar();
  out.parts.rank = lr.scalar();
  std::vector<ad::Var> terms{lp, lr};
  std::vector<double> coeffs{1.0, weights.alpha};
  if (logits.defined()) {
    const ad::Var lc = aux_ce_loss(logits, labels);
    out.parts.cls = lc.scalar();
    terms.push_back(lc);
    coeffs.push_back(weights.beta);
  }
  out.total = ad::linear_combination(terms, coeffs);
  out.parts.total = out.total.scalar();
  return out;
}

}  // namespace aigcvqa

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include <Eigen/Dense>

#include "aigcvqa/autograd.hpp"

namespace aigcvqa {

/// Total loss = plcc + alpha * rank + beta * cls.
struct LossWeights {
  double alpha = 0.3;
  double beta = 0.2;
  double rank_margin = 0.0;
};

/// (1 - pearson(pred, target)) / 2. pred is n x 1.
/// Throws ErrorKind::degenerate on a constant target or constant pred.
ad::Var plcc_loss(const ad::Var& pred, const Eigen::VectorXd& target);
double plcc_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

/// Mean pairwise hinge over ordered pairs with target_i > target_j:
/// max(0, margin - (pred_i - pred_j)). Ties in target form no pair.
ad::Var rank_loss(const ad::Var& pred, const Eigen::VectorXd& target, double margin = 0.0);
double rank_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, double margin = 0.0);

/// Mean softmax cross-entropy of (batch x 10) logits.
ad::Var aux_ce_loss(const ad::Var& logits, std::span<const int> labels);
double aux_ce_loss(const Eigen::MatrixXd& logits, std::span<const int> labels);

struct LossBreakdown {
  double plcc = 0.0;
  double rank = 0.0;
  double cls = 0.0;
  double total = 0.0;
};

struct CombinedLoss {
  ad::Var total;
  LossBreakdown parts;
};

/// `logits` may be undefined, in which case the classification term is 0.
CombinedLoss combined_loss(const ad::Var& pred, const Eigen::VectorXd& target,
                           const ad::Var& logits, std::span<const int> labels,
                           const LossWeights& weights);

}  // namespace aigcvqa

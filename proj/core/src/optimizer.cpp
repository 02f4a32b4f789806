// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/optimizer.hpp"

#include <cmath>

namespace aigcvqa {

AdamW::AdamW(ParameterList params, const OptimizerConfig& config)
    : params_(std::move(params)), config_(config), moments_(params_.size()) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& value = params_[i].var.value();
    moments_[i].m = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    moments_[i].v = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
}

double AdamW::learning_rate(ParamGroup group) const {
  return group == ParamGroup::backbone ? config_.lr_backbone : config_.lr_heads;
}

double global_grad_norm(const ParameterList& params) {
  double total = 0.0;
  for (const auto& p : params)
    if (p.var.requires_grad()) total += p.var.grad().squaredNorm();
  return std::sqrt(total);
}

double AdamW::step() {
  const double norm = global_grad_norm(params_);
  const double clip_scale =
      (config_.grad_clip > 0 && norm > config_.grad_clip) ? config_.grad_clip / norm : 1.0;

  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.var.requires_grad()) continue;
    auto& mo = moments_[i];
    const Eigen::MatrixXd g = p.var.grad() * clip_scale;
    ++mo.steps;
    mo.m = config_.beta1 * mo.m + (1.0 - config_.beta1) * g;
    mo.v = config_.beta2 * mo.v + (1.0 - config_.beta2) * g.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(mo.steps));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(mo.steps));
    const double lr = learning_rate(p.group);
    Eigen::MatrixXd& w = p.var.mutable_value();
    if (config_.weight_decay > 0 && w.rows() > 1) w *= 1.0 - lr * config_.weight_decay;
    const Eigen::MatrixXd m_hat = mo.m / bc1;
    const Eigen::MatrixXd v_hat = mo.v / bc2;
    w.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + config_.eps);
  }
  return norm;
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

}  // namespace aigcvqa

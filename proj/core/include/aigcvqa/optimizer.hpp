// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unordered_map>

#include "aigcvqa/config.hpp"
#include "aigcvqa/parameters.hpp"

namespace aigcvqa {

/// Adam with decoupled weight decay and per-group learning rates.
///
/// Parameters whose requires_grad flag is off are skipped entirely: no
/// moment update, no decay, no step count, so frozen arrays stay bit-identical.
/// Weight decay applies to matrices only; 1-row arrays (biases, combiner
/// weights) are not decayed.
class AdamW {
 public:
  AdamW(ParameterList params, const OptimizerConfig& config);

  /// Clips the global gradient norm (when configured), applies one update and
  /// returns the pre-clip norm.
  double step();
  void zero_grad();

  const ParameterList& parameters() const { return params_; }
  double learning_rate(ParamGroup group) const;

 private:
  struct Moments {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
    long steps = 0;
  };

  ParameterList params_;
  OptimizerConfig config_;
  std::vector<Moments> moments_;
};

/// L2 norm over the gradients of every parameter that requires one.
double global_grad_norm(const ParameterList& params);

}  // namespace aigcvqa

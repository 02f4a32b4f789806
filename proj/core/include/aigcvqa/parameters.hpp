// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "aigcvqa/autograd.hpp"

namespace aigcvqa {

/// Optimizer groups: encoders ("backbone") train at a lower rate than heads.
enum class ParamGroup { backbone, head };

struct NamedParameter {
  std::string name;
  ad::Var var;
  ParamGroup group = ParamGroup::head;
};

using ParameterList = std::vector<NamedParameter>;

}  // namespace aigcvqa

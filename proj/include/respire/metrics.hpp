#pragma once

#include <vector>

#include "respire/random.hpp"

namespace respire::eval {

/// Step-wise average precision: sum over recall steps of (R_i - R_{i-1}) * P_i in descending
/// score order. Within a group of tied scores the result is the expectation over every ordering
/// of the group, so it does not depend on input order. Throws kSingleClass or kDimensionMismatch.
double pr_auc(const std::vector<double>& scores, const Labels& labels);

}  // namespace respire::eval

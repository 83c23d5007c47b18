#pragma once

#include <Eigen/Core>
#include <vector>

namespace omnikit {

// Entries at or above this value mark forbidden pairs.
constexpr double kForbiddenCost = 1e15;

// Minimum-cost assignment (rectangular; padded internally). Returns, per row,
// the assigned column or -1 when the row ends up on a dummy or forbidden pair.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

}  // namespace omnikit

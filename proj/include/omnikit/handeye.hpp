#pragma once

#include <cstdint>
#include <vector>

#include "omnikit/geometry.hpp"

namespace omnikit::calib {

struct HandEyeSolution {
  RigidPose Z;  // robot base -> world
  RigidPose X;  // flange -> board
  double residual_max = 0.0;      // max Frobenius norm over the absolute chains
  double rot_residual_max = 0.0;  // max rotation residual, rad
};

// Inputs per configuration i: board pose in the world frame (board -> world)
// and forward kinematics of the flange (flange -> base). Z comes from the
// relative constraints (closed-form init + robust refinement over all pairs),
// X from the absolute chains with Z held fixed.
HandEyeSolution solve_hand_eye(const std::vector<RigidPose>& board_world,
                               const std::vector<RigidPose>& flange_base);

// base pose in the anchor-board frame, from one anchor observation
RigidPose localize_anchor(const RigidPose& world_anchor, const RigidPose& Z);

// perturbed configurations around a center pose: translation uniform in a
// cube of half-width r_p, rotation as a right-multiplied local wobble
std::vector<RigidPose> sample_handeye_configs(const RigidPose& center, int n, double r_p,
                                              double r_theta, std::uint64_t seed);

}  // namespace omnikit::calib

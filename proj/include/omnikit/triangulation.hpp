#pragma once

#include <Eigen/Core>
#include <vector>

#include "omnikit/geometry.hpp"
#include "omnikit/rng.hpp"

namespace omnikit {

struct View {
  Pixel pixel;
  const CameraModel* camera = nullptr;
};

// Homogeneous DLT over >= 2 views; pixels must already be undistorted.
// Throws Degenerate when the widest ray pair is within 2e-4 rad of parallel.
Eigen::Vector3d triangulate_dlt(const std::vector<View>& views);

struct RansacResult {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  std::vector<int> inliers;  // ascending view indices
};

// 3-view minimal samples, up to `iters` draws, reprojection gate in pixels,
// final DLT refit on the best inlier set. Deterministic for a given rng.
// Throws NoConsensus when the best model has < 2 inliers.
RansacResult triangulate_ransac(const std::vector<View>& views, SplitRng rng,
                                double threshold_px = 2.0, int iters = 30);

}  // namespace omnikit

#include "omnikit/triangulation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "omnikit/error.hpp"

namespace omnikit {

namespace {

Eigen::Matrix<double, 3, 4> projection_matrix(const CameraModel& cam) {
  Eigen::Matrix3d K;
  K << cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1;
  Eigen::Matrix<double, 3, 4> Rt;
  Rt.leftCols<3>() = cam.pose.R;
  Rt.col(3) = cam.pose.t;
  return K * Rt;
}

// pinhole only: inputs are undistorted pixels, so the gate must match
Eigen::Vector2d reproject_pinhole(const CameraModel& cam, const Eigen::Vector3d& world) {
  const Eigen::Vector3d c = cam.pose.apply(world);
  if (c.z() <= 1e-9) return {1e12, 1e12};
  return {cam.fx * c.x() / c.z() + cam.cx, cam.fy * c.y() / c.z() + cam.cy};
}

Eigen::Vector3d ray_dir_world(const View& v) {
  const Eigen::Vector3d d((v.pixel.u - v.camera->cx) / v.camera->fx,
                          (v.pixel.v - v.camera->cy) / v.camera->fy, 1.0);
  return (v.camera->pose.R.transpose() * d).normalized();
}

Eigen::Vector3d dlt_solve(const std::vector<View>& views, const std::vector<int>& idx) {
  Eigen::MatrixXd A(2 * idx.size(), 4);
  for (size_t k = 0; k < idx.size(); ++k) {
    const View& v = views[static_cast<size_t>(idx[k])];
    const auto P = projection_matrix(*v.camera);
    A.row(2 * k) = v.pixel.u * P.row(2) - P.row(0);
    A.row(2 * k + 1) = v.pixel.v * P.row(2) - P.row(1);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X[3]) < 1e-14) fail("Degenerate", "triangulated point at infinity");
  return X.head<3>() / X[3];
}

}  // namespace

Eigen::Vector3d triangulate_dlt(const std::vector<View>& views) {
  if (views.size() < 2) fail("Degenerate", "need at least 2 views");
  double max_angle = 0.0;
  for (size_t i = 0; i < views.size(); ++i) {
    const Eigen::Vector3d di = ray_dir_world(views[i]);
    for (size_t j = i + 1; j < views.size(); ++j) {
      const double c = std::clamp(di.dot(ray_dir_world(views[j])), -1.0, 1.0);
      max_angle = std::max(max_angle, std::acos(std::abs(c)));
    }
  }
  // 0.2 mrad keeps rays crossing at a hundredth of a degree out
  if (max_angle < 2e-4) fail("Degenerate", "rays are parallel");
  std::vector<int> all(views.size());
  for (size_t i = 0; i < views.size(); ++i) all[i] = static_cast<int>(i);
  return dlt_solve(views, all);
}

RansacResult triangulate_ransac(const std::vector<View>& views, SplitRng rng, double threshold_px,
                                int iters) {
  const int n = static_cast<int>(views.size());
  if (n < 3) fail("NoConsensus", "need at least 3 views");

  auto gate = [&](const Eigen::Vector3d& point, std::vector<int>& inliers, double& err_sum) {
    inliers.clear();
    err_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d rp = reproject_pinhole(*views[static_cast<size_t>(i)].camera, point);
      const double e = (rp - Eigen::Vector2d(views[static_cast<size_t>(i)].pixel.u,
                                             views[static_cast<size_t>(i)].pixel.v))
                           .norm();
      if (e < threshold_px) {
        inliers.push_back(i);
        err_sum += e;
      }
    }
  };

  std::vector<int> best_inliers;
  double best_err = 0.0;
  for (int it = 0; it < iters; ++it) {
    const std::vector<int> sample = rng.sample_subset(n, 3);
    Eigen::Vector3d point;
    try {
      point = dlt_solve(views, sample);
    } catch (const Error&) {
      continue;
    }
    std::vector<int> inliers;
    double err_sum = 0.0;
    gate(point, inliers, err_sum);
    const bool better = inliers.size() > best_inliers.size() ||
                        (inliers.size() == best_inliers.size() && !inliers.empty() &&
                         err_sum < best_err);
    if (better) {
      best_inliers = inliers;
      best_err = err_sum;
      if (static_cast<int>(best_inliers.size()) == n) break;
    }
  }

  if (best_inliers.size() < 2) fail("NoConsensus", "fewer than 2 consistent views");
  RansacResult result;
  result.inliers = best_inliers;
  result.point = dlt_solve(views, best_inliers);
  return result;
}

}  // namespace omnikit

#include "omnikit/geometry.hpp"

#include <cmath>

#include "omnikit/error.hpp"

namespace omnikit {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return S;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    return Eigen::Matrix3d::Identity() + skew(w);
  }
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

RigidPose RigidPose::from_matrix(const Eigen::Matrix4d& M) {
  RigidPose p;
  p.R = M.topLeftCorner<3, 3>();
  p.t = M.topRightCorner<3, 1>();
  return p;
}

Eigen::Matrix4d RigidPose::matrix() const {
  Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
  M.topLeftCorner<3, 3>() = R;
  M.topRightCorner<3, 1>() = t;
  return M;
}

bool RigidPose::is_valid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  if ((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

RigidPose retract_pose(const RigidPose& base, const Eigen::Vector3d& w, const Eigen::Vector3d& v) {
  return {so3_exp(w) * base.R, base.t + v};
}

PoseDelta pose_delta(const RigidPose& a, const RigidPose& b) {
  return {so3_log(a.R.transpose() * b.R).norm(), (a.t - b.t).norm()};
}

bool CameraModel::has_distortion() const {
  for (double d : dist)
    if (d != 0.0) return true;
  return false;
}

Eigen::Vector2d CameraModel::distort(const Eigen::Vector2d& xn) const {
  const double x = xn.x(), y = xn.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (dist[0] + r2 * (dist[1] + r2 * dist[4]));
  const double p1 = dist[2], p2 = dist[3];
  return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
          y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

Pixel CameraModel::project_camera(const Eigen::Vector3d& cam) const {
  if (cam.z() <= 1e-9) fail("BehindCamera", "camera-frame z = " + std::to_string(cam.z()));
  const Eigen::Vector2d xd = distort({cam.x() / cam.z(), cam.y() / cam.z()});
  return {fx * xd.x() + cx, fy * xd.y() + cy};
}

Pixel CameraModel::project(const Eigen::Vector3d& world) const {
  return project_camera(pose.apply(world));
}

Eigen::Vector2d CameraModel::undistort(const Pixel& px) const {
  const Eigen::Vector2d target((px.u - cx) / fx, (px.v - cy) / fy);
  if (!has_distortion()) return target;
  Eigen::Vector2d x = target;
  for (int i = 0; i < 50; ++i) {
    // invert x_d = x * radial(x) + tangential(x) by fixed point on x
    const double r2 = x.squaredNorm();
    const double radial = 1.0 + r2 * (dist[0] + r2 * (dist[1] + r2 * dist[4]));
    const double p1 = dist[2], p2 = dist[3];
    const Eigen::Vector2d tang(2.0 * p1 * x.x() * x.y() + p2 * (r2 + 2.0 * x.x() * x.x()),
                               p1 * (r2 + 2.0 * x.y() * x.y()) + 2.0 * p2 * x.x() * x.y());
    const Eigen::Vector2d next = (target - tang) / radial;
    if ((next - x).norm() < 1e-10) return next;
    x = next;
  }
  fail("NoConvergence", "undistort did not converge in 50 iterations");
}

Eigen::Vector3d CameraModel::ray_world(const Pixel& px) const {
  const Eigen::Vector2d xn = undistort(px);
  const Eigen::Vector3d dir_cam(xn.x(), xn.y(), 1.0);
  return (pose.R.transpose() * dir_cam).normalized();
}

bool CameraModel::frustum_visible(const Eigen::Vector3d& world, double d_min, double d_max) const {
  const Eigen::Vector3d cam = pose.apply(world);
  if (cam.z() <= 0.0 || cam.z() < d_min || cam.z() > d_max) return false;
  if (cam.z() <= 1e-9) return false;
  const Pixel px = project_camera(cam);
  return px.u >= 0.0 && px.u < width && px.v >= 0.0 && px.v < height;
}

}  // namespace omnikit

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <string>

namespace omnikit {

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Rigid transform p_out = R * p_in + t.
struct RigidPose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static RigidPose identity() { return {}; }
  static RigidPose from_rt(const Eigen::Matrix3d& R, const Eigen::Vector3d& t) { return {R, t}; }
  static RigidPose from_matrix(const Eigen::Matrix4d& M);

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
  RigidPose inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
  Eigen::Matrix4d matrix() const;
  bool is_valid(double tol = 1e-9) const;
};

inline RigidPose compose(const RigidPose& a, const RigidPose& b) {
  return {a.R * b.R, a.R * b.t + a.t};
}

// 6-vector [w; v], rotation applied on the left: T' = (exp(w), v + t)
RigidPose retract_pose(const RigidPose& base, const Eigen::Vector3d& w, const Eigen::Vector3d& v);

// ||log(Ra^T Rb)|| and ||ta - tb|| as a pair
struct PoseDelta {
  double rot_rad;
  double trans;
};
PoseDelta pose_delta(const RigidPose& a, const RigidPose& b);

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Pinhole camera with 5-coefficient radial-tangential distortion.
// pose maps world coordinates into the camera frame (x right, y down, z forward).
struct CameraModel {
  std::string id;
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::array<double, 5> dist{};  // k1, k2, p1, p2, k3
  RigidPose pose;

  Eigen::Vector3d center() const { return pose.inverse().t; }
  bool has_distortion() const;

  // normalized camera plane -> distorted normalized
  Eigen::Vector2d distort(const Eigen::Vector2d& xn) const;

  // throws BehindCamera when camera-frame z <= 1e-9
  Pixel project(const Eigen::Vector3d& world) const;
  Pixel project_camera(const Eigen::Vector3d& cam) const;

  // distorted pixel -> undistorted normalized coords; fixed point iteration,
  // at most 50 iterations, terminates when the update falls below 1e-10;
  // throws NoConvergence otherwise
  Eigen::Vector2d undistort(const Pixel& px) const;

  // unit ray in world coordinates through the (distorted) pixel
  Eigen::Vector3d ray_world(const Pixel& px) const;

  bool frustum_visible(const Eigen::Vector3d& world, double d_min, double d_max) const;
};

}  // namespace omnikit

#include "omnikit/handeye.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "omnikit/error.hpp"
#include "omnikit/optim.hpp"
#include "omnikit/rng.hpp"

namespace omnikit::calib {

namespace {

struct PosePair {
  RigidPose A;  // relative board motion, world frame
  RigidPose B;  // relative flange motion, base frame
};

// Tsai-Lenz closed form for R in A R = R B (rotation part)
Eigen::Matrix3d tsai_lenz_rotation(const std::vector<PosePair>& pairs) {
  Eigen::MatrixXd M(3 * pairs.size(), 3);
  Eigen::VectorXd rhs(3 * pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::AngleAxisd aa(pairs[i].A.R);
    const Eigen::AngleAxisd bb(pairs[i].B.R);
    const Eigen::Vector3d pa = 2.0 * std::sin(aa.angle() / 2) * aa.axis();
    const Eigen::Vector3d pb = 2.0 * std::sin(bb.angle() / 2) * bb.axis();
    M.middleRows<3>(3 * i) = skew(pa + pb);
    rhs.segment<3>(3 * i) = pb - pa;
  }
  const Eigen::Vector3d x = M.colPivHouseholderQr().solve(rhs);
  const Eigen::Vector3d p = 2.0 * x / std::sqrt(1.0 + x.squaredNorm());
  const double alpha = std::sqrt(4.0 - p.squaredNorm());
  return (1.0 - p.squaredNorm() / 2.0) * Eigen::Matrix3d::Identity() +
         0.5 * (p * p.transpose() + alpha * skew(p));
}

Eigen::Vector3d tsai_lenz_translation(const std::vector<PosePair>& pairs,
                                      const Eigen::Matrix3d& Rz) {
  Eigen::MatrixXd M(3 * pairs.size(), 3);
  Eigen::VectorXd rhs(3 * pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    M.middleRows<3>(3 * i) = pairs[i].A.R - Eigen::Matrix3d::Identity();
    rhs.segment<3>(3 * i) = Rz * pairs[i].B.t - pairs[i].A.t;
  }
  return M.colPivHouseholderQr().solve(rhs);
}

// residual per pair: A Z vs Z B, 6-vector [rot; trans]
class RelativeProblem : public LeastSquaresProblem {
 public:
  RelativeProblem(RigidPose init, const std::vector<PosePair>* pairs) : Z_(init), pairs_(pairs) {}
  int num_params() const override { return 6; }
  int num_residuals() const override { return 6 * static_cast<int>(pairs_->size()); }
  int num_blocks() const override { return static_cast<int>(pairs_->size()); }
  Block block(int b) const override { return {6 * b, 6, {0, 1, 2, 3, 4, 5}}; }
  void eval_block(int b, const Eigen::VectorXd& p, double* out) const override {
    const RigidPose Z = retract_pose(Z_, p.head<3>(), p.tail<3>());
    const auto& pr = (*pairs_)[static_cast<size_t>(b)];
    const RigidPose lhs = compose(pr.A, Z);
    const RigidPose rhs = compose(Z, pr.B);
    Eigen::Map<Eigen::Vector3d> rot(out), trans(out + 3);
    rot = so3_log(rhs.R.transpose() * lhs.R);
    trans = lhs.t - rhs.t;
  }
  void retract(Eigen::VectorXd& p) override {
    Z_ = retract_pose(Z_, p.head<3>(), p.tail<3>());
    p.setZero();
  }
  const RigidPose& pose() const { return Z_; }

 private:
  RigidPose Z_;
  const std::vector<PosePair>* pairs_;
};

// residual per sample: X vs candidate X_i
class AbsoluteProblem : public LeastSquaresProblem {
 public:
  AbsoluteProblem(RigidPose init, const std::vector<RigidPose>* candidates)
      : X_(init), candidates_(candidates) {}
  int num_params() const override { return 6; }
  int num_residuals() const override { return 6 * static_cast<int>(candidates_->size()); }
  int num_blocks() const override { return static_cast<int>(candidates_->size()); }
  Block block(int b) const override { return {6 * b, 6, {0, 1, 2, 3, 4, 5}}; }
  void eval_block(int b, const Eigen::VectorXd& p, double* out) const override {
    const RigidPose X = retract_pose(X_, p.head<3>(), p.tail<3>());
    const RigidPose& c = (*candidates_)[static_cast<size_t>(b)];
    Eigen::Map<Eigen::Vector3d> rot(out), trans(out + 3);
    rot = so3_log(c.R.transpose() * X.R);
    trans = X.t - c.t;
  }
  void retract(Eigen::VectorXd& p) override {
    X_ = retract_pose(X_, p.head<3>(), p.tail<3>());
    p.setZero();
  }
  const RigidPose& pose() const { return X_; }

 private:
  RigidPose X_;
  const std::vector<RigidPose>* candidates_;
};

RigidPose mean_pose(const std::vector<RigidPose>& poses) {
  Eigen::Vector4d qsum = Eigen::Vector4d::Zero();
  Eigen::Vector3d tsum = Eigen::Vector3d::Zero();
  Eigen::Quaterniond first(poses.front().R);
  for (const auto& p : poses) {
    Eigen::Quaterniond q(p.R);
    if (q.coeffs().dot(first.coeffs()) < 0) q.coeffs() *= -1;
    qsum += q.coeffs();
    tsum += p.t;
  }
  Eigen::Quaterniond qm;
  qm.coeffs() = qsum.normalized();
  return {qm.toRotationMatrix(), tsum / static_cast<double>(poses.size())};
}

}  // namespace

HandEyeSolution solve_hand_eye(const std::vector<RigidPose>& board_world,
                               const std::vector<RigidPose>& flange_base) {
  const size_t n = board_world.size();
  if (n != flange_base.size()) fail("TooFewPoses", "pose lists differ in length");
  if (n < 3) fail("TooFewPoses", "need at least 3 pose pairs");

  std::vector<PosePair> pairs;
  std::vector<Eigen::Vector3d> axes;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      PosePair pr;
      pr.A = compose(board_world[i], board_world[j].inverse());
      pr.B = compose(flange_base[i], flange_base[j].inverse());
      pairs.push_back(pr);
      const Eigen::AngleAxisd aa(pr.A.R);
      if (aa.angle() > 1e-8) axes.push_back(aa.axis());
    }
  }

  double max_axis_angle = 0.0;
  for (size_t i = 0; i < axes.size(); ++i)
    for (size_t j = i + 1; j < axes.size(); ++j) {
      const double c = std::min(1.0, std::abs(axes[i].dot(axes[j])));
      max_axis_angle = std::max(max_axis_angle, std::acos(c));
    }
  if (axes.size() < 2 || max_axis_angle < M_PI / 180.0)
    fail("DegenerateMotion", "relative rotation axes are within 1 degree of parallel");

  const Eigen::Matrix3d Rz = tsai_lenz_rotation(pairs);
  const Eigen::Vector3d tz = tsai_lenz_translation(pairs, Rz);

  RelativeProblem relative({Rz, tz}, &pairs);
  {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
    LmOptions opts;
    opts.loss = RobustLoss::huber(0.01);
    lm_solve(relative, p, opts);
  }
  const RigidPose Z = relative.pose();

  std::vector<RigidPose> candidates;
  for (size_t i = 0; i < n; ++i)
    candidates.push_back(compose(board_world[i].inverse(), compose(Z, flange_base[i])));

  AbsoluteProblem absolute(mean_pose(candidates), &candidates);
  {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
    LmOptions opts;
    opts.loss = RobustLoss::huber(0.01);
    lm_solve(absolute, p, opts);
  }

  HandEyeSolution sol;
  sol.Z = Z;
  sol.X = absolute.pose();
  for (size_t i = 0; i < n; ++i) {
    const RigidPose lhs = compose(board_world[i], sol.X);
    const RigidPose rhs = compose(Z, flange_base[i]);
    sol.residual_max =
        std::max(sol.residual_max, (lhs.matrix() - rhs.matrix()).norm());
    sol.rot_residual_max =
        std::max(sol.rot_residual_max, so3_log(lhs.R.transpose() * rhs.R).norm());
  }
  return sol;
}

RigidPose localize_anchor(const RigidPose& world_anchor, const RigidPose& Z) {
  return compose(world_anchor.inverse(), Z);
}

std::vector<RigidPose> sample_handeye_configs(const RigidPose& center, int n, double r_p,
                                              double r_theta, std::uint64_t seed) {
  if (n < 1) fail("BadArgument", "need n >= 1");
  SplitRng rng(seed);
  std::vector<RigidPose> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d dt(rng.uniform(-r_p, r_p), rng.uniform(-r_p, r_p),
                             rng.uniform(-r_p, r_p));
    const Eigen::Vector3d w(rng.uniform(-r_theta, r_theta), rng.uniform(-r_theta, r_theta),
                            rng.uniform(-r_theta, r_theta));
    out.push_back({center.R * so3_exp(w), center.t + dt});
  }
  return out;
}

}  // namespace omnikit::calib

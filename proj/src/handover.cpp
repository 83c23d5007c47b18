#include "omnikit/handover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omnikit/error.hpp"
#include "omnikit/parallel.hpp"

namespace omnikit::handover {

namespace {

void check_chain(const KinematicChain& chain) {
  if (chain.dof() < 2) fail("BadInput", "kinematic chain needs at least two joints");
  for (const auto& j : chain.joints) {
    if (!(j.lo < j.hi)) fail("BadInput", "joint limits must satisfy lo < hi");
    if (!j.pre.is_valid()) fail("BadInput", "joint pre-transform is not a rigid pose");
  }
}

void check_q(const KinematicChain& chain, const Eigen::VectorXd& q) {
  if (q.size() != chain.dof()) fail("BadInput", "joint vector size does not match chain");
}

Eigen::Matrix3d rot_x(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

Eigen::Matrix3d rot_y(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

Eigen::Matrix3d rot_z(double a) {
  return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

}  // namespace

Eigen::VectorXd KinematicChain::neutral() const {
  Eigen::VectorXd q(dof());
  for (int i = 0; i < dof(); ++i) {
    q[i] = 0.5 * (joints[static_cast<size_t>(i)].lo + joints[static_cast<size_t>(i)].hi);
  }
  return q;
}

Eigen::VectorXd KinematicChain::clamped(Eigen::VectorXd q) const {
  for (int i = 0; i < dof() && i < q.size(); ++i) {
    q[i] = std::clamp(q[i], joints[static_cast<size_t>(i)].lo, joints[static_cast<size_t>(i)].hi);
  }
  return q;
}

bool KinematicChain::within_limits(const Eigen::VectorXd& q, double slack) const {
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i) {
    const auto& j = joints[static_cast<size_t>(i)];
    if (q[i] < j.lo - slack || q[i] > j.hi + slack) return false;
  }
  return true;
}

KinematicChain planar_two_link(const RigidPose& base) {
  // Joint z axes map onto world +y; links run along local +x.
  KinematicChain chain;
  chain.joints.push_back({RigidPose::from_rt(rot_x(-M_PI / 2), Eigen::Vector3d::Zero()), -3.0, 3.0});
  chain.joints.push_back({RigidPose::from_rt(Eigen::Matrix3d::Identity(), {0.5, 0, 0}), -3.0, 3.0});
  chain.tool = RigidPose::from_rt(rot_x(M_PI / 2), {0.5, 0, 0});
  chain.base = base;
  return chain;
}

KinematicChain serial_seven(const RigidPose& base) {
  // Modified-DH geometry of a 7-axis collaborative arm, link translations
  // folded into the next joint's pre-transform.
  KinematicChain chain;
  auto add = [&](const Eigen::Matrix3d& R, const Eigen::Vector3d& t, double lo, double hi) {
    chain.joints.push_back({RigidPose::from_rt(R, t), lo, hi});
  };
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  add(I, {0, 0, 0}, -2.74, 2.74);
  add(rot_x(-M_PI / 2), {0, 0, 0.333}, -1.78, 1.78);
  add(rot_x(M_PI / 2), {0, 0, 0}, -2.90, 2.90);
  add(rot_x(M_PI / 2), {0.0825, 0, 0.316}, -3.04, -0.15);
  add(rot_x(-M_PI / 2), {-0.0825, 0, 0}, -2.81, 2.81);
  add(rot_x(M_PI / 2), {0, 0, 0.384}, 0.54, 4.52);
  add(rot_x(M_PI / 2), {0.088, 0, 0}, -3.02, 3.02);
  chain.tool = RigidPose::from_rt(I, {0, 0, 0.107});
  chain.base = base;
  return chain;
}

RigidPose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q) {
  check_chain(chain);
  check_q(chain, q);
  RigidPose T = chain.base;
  for (int i = 0; i < chain.dof(); ++i) {
    T = compose(T, chain.joints[static_cast<size_t>(i)].pre);
    T = compose(T, RigidPose::from_rt(rot_z(q[i]), Eigen::Vector3d::Zero()));
  }
  return compose(T, chain.tool);
}

Eigen::MatrixXd geometric_jacobian(const KinematicChain& chain, const Eigen::VectorXd& q) {
  check_chain(chain);
  check_q(chain, q);
  const int n = chain.dof();
  std::vector<Eigen::Vector3d> axes(static_cast<size_t>(n));
  std::vector<Eigen::Vector3d> origins(static_cast<size_t>(n));
  RigidPose T = chain.base;
  for (int i = 0; i < n; ++i) {
    T = compose(T, chain.joints[static_cast<size_t>(i)].pre);
    axes[static_cast<size_t>(i)] = T.R.col(2);
    origins[static_cast<size_t>(i)] = T.t;
    T = compose(T, RigidPose::from_rt(rot_z(q[i]), Eigen::Vector3d::Zero()));
  }
  const Eigen::Vector3d tcp = compose(T, chain.tool).t;
  Eigen::MatrixXd J(6, n);
  for (int i = 0; i < n; ++i) {
    J.block<3, 1>(0, i) = axes[static_cast<size_t>(i)];
    J.block<3, 1>(3, i) = axes[static_cast<size_t>(i)].cross(tcp - origins[static_cast<size_t>(i)]);
  }
  return J;
}

double manipulability(const KinematicChain& chain, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd J = geometric_jacobian(chain, q);
  double det = 0;
  if (chain.dof() >= 6) {
    det = (J * J.transpose()).determinant();
  } else {
    const Eigen::MatrixXd Jv = J.bottomRows(3);
    det = (Jv.transpose() * Jv).determinant();
  }
  return std::sqrt(std::max(det, 0.0));
}

double limit_margin(const KinematicChain& chain, const Eigen::VectorXd& q) {
  check_chain(chain);
  check_q(chain, q);
  double m = 1.0;
  for (int i = 0; i < chain.dof(); ++i) {
    const auto& j = chain.joints[static_cast<size_t>(i)];
    const double d = std::min(q[i] - j.lo, j.hi - q[i]) * 2.0 / (j.hi - j.lo);
    m = std::min(m, d);
  }
  return std::clamp(m, 0.0, 1.0);
}

namespace {

struct Attempt {
  Eigen::VectorXd q;
  double pos_err = std::numeric_limits<double>::infinity();
  double rot_err = std::numeric_limits<double>::infinity();
};

// One damped least-squares descent with adaptive damping: steps that raise
// the residual are rejected and retried stiffer. Chains shorter than six
// joints drop the orientation rows when orientation success is not required;
// otherwise any orientation pull drags the underactuated arm off the
// position target.
Attempt dls_descent(const KinematicChain& chain, const RigidPose& target, Eigen::VectorXd q,
                    const IkOptions& opts) {
  const int n = chain.dof();
  const bool use_rot = opts.require_orientation || n >= 6;
  const int m = use_rot ? 6 : 3;
  const Eigen::VectorXd neutral = chain.neutral();

  const auto residual = [&](const Eigen::VectorXd& qq, Eigen::Vector3d& ep, Eigen::Vector3d& er) {
    const RigidPose T = forward_kinematics(chain, qq);
    ep = target.t - T.t;
    er = so3_log(target.R * T.R.transpose());
    return ep.squaredNorm() + (use_rot ? er.squaredNorm() : 0.0);
  };

  q = chain.clamped(std::move(q));
  Eigen::Vector3d ep, er;
  double cost = residual(q, ep, er);
  Attempt best{q, ep.norm(), er.norm()};
  double lambda = opts.damping;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (ep.norm() < 1e-10 && (!use_rot || er.norm() < 1e-10)) break;

    const Eigen::MatrixXd J = geometric_jacobian(chain, q);
    const Eigen::MatrixXd A = use_rot ? J : Eigen::MatrixXd(J.bottomRows(3));
    Eigen::VectorXd e(m);
    if (use_rot) {
      e << er, ep;
    } else {
      e = ep;
    }
    const Eigen::MatrixXd H =
        A * A.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(m, m);
    const Eigen::LLT<Eigen::MatrixXd> llt(H);
    Eigen::VectorXd dq = A.transpose() * llt.solve(e);
    // weak mid-range pull through the damped null space keeps joints off
    // their limits; it fades with the task error so it cannot bias the
    // converged pose
    const Eigen::VectorXd pull =
        0.05 * std::min(1.0, (ep.norm() + er.norm()) / 1e-2) * (neutral - q);
    dq += pull - A.transpose() * llt.solve(A * pull);
    const double step = dq.cwiseAbs().maxCoeff();
    if (step > 0.5) dq *= 0.5 / step;

    const Eigen::VectorXd qn = chain.clamped(q + dq);
    Eigen::Vector3d epn, ern;
    const double cost_n = residual(qn, epn, ern);
    if (cost_n < cost) {
      const bool tiny = (qn - q).norm() < 1e-13;
      q = qn;
      cost = cost_n;
      ep = epn;
      er = ern;
      if (ep.norm() + er.norm() < best.pos_err + best.rot_err) best = {q, ep.norm(), er.norm()};
      lambda = std::max(lambda / 3.0, 1e-4);
      if (tiny) break;
    } else {
      lambda *= 8.0;
      if (lambda > 1e8) break;
    }
  }
  return best;
}

bool attempt_success(const Attempt& a, const IkOptions& opts) {
  return a.pos_err < opts.pos_tol && (!opts.require_orientation || a.rot_err < opts.rot_tol);
}

}  // namespace

std::optional<IkResult> ik_best(const KinematicChain& chain, const RigidPose& target, int restarts,
                                SplitRng rng, const IkOptions& opts) {
  check_chain(chain);
  if (!target.t.allFinite() || !target.is_valid()) fail("BadInput", "ik target is not a finite pose");
  if (restarts < 1) fail("BadInput", "ik needs at least one restart");
  if (opts.init && opts.init->size() != chain.dof()) {
    fail("BadInput", "ik init size does not match chain");
  }
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd q0;
    if (r == 0) {
      q0 = opts.init ? *opts.init : chain.neutral();
    } else {
      SplitRng rs = rng.split(r);
      q0.resize(chain.dof());
      for (int i = 0; i < chain.dof(); ++i) {
        const auto& j = chain.joints[static_cast<size_t>(i)];
        q0[i] = rs.uniform(j.lo, j.hi);
      }
    }
    const Attempt a = dls_descent(chain, target, std::move(q0), opts);
    if (attempt_success(a, opts)) return IkResult{a.q, a.pos_err, a.rot_err};
  }
  return std::nullopt;
}

Eigen::VectorXd ik_solve(const KinematicChain& chain, const RigidPose& target, int restarts,
                         std::uint64_t seed, const IkOptions& opts) {
  auto res = ik_best(chain, target, restarts, SplitRng(seed), opts);
  if (!res) fail("NoSolution", "ik did not converge within tolerance from any restart");
  return res->q;
}

ObjectCategory category_from_string(const std::string& name) {
  if (name == "spherical") return ObjectCategory::spherical;
  if (name == "elongated") return ObjectCategory::elongated;
  fail("BadInput", "unknown object category: " + name);
}

std::string to_string(ObjectCategory category) {
  return category == ObjectCategory::spherical ? "spherical" : "elongated";
}

Eigen::Matrix3d category_rotation(ObjectCategory category) {
  Eigen::Matrix3d R;
  if (category == ObjectCategory::spherical) {
    R << 0, 1, 0, 1, 0, 0, 0, 0, -1;
  } else {
    R = Eigen::Vector3d(-1, 1, -1).asDiagonal();
  }
  return R;
}

Eigen::Vector3d category_offset(ObjectCategory category) {
  return category == ObjectCategory::spherical ? Eigen::Vector3d(0.03, 0, 0.01)
                                               : Eigen::Vector3d(0.06, 0, 0);
}

double retract_distance(ObjectCategory category) {
  return category == ObjectCategory::spherical ? 0.05 : 0.08;
}

RigidPose receiver_pose(const RigidPose& giver, ObjectCategory category) {
  if (!giver.is_valid()) fail("BadInput", "giver pose is not a rigid pose");
  return RigidPose::from_rt(giver.R * category_rotation(category),
                            giver.t + giver.R * category_offset(category));
}

double tcp_score(const Eigen::Matrix3d& giver_axes, const Eigen::Matrix3d& receiver_axes,
                 ObjectCategory category) {
  if (category == ObjectCategory::spherical) {
    const double sz = 0.5 * (1.0 - giver_axes.col(2).dot(receiver_axes.col(2)));
    const double sx = 1.0 - std::abs(giver_axes.col(0).dot(receiver_axes.col(0)));
    return 0.6 * sz + 0.4 * sx;
  }
  const double sy = std::abs(giver_axes.col(1).dot(receiver_axes.col(1)));
  const double sx = 0.5 * (1.0 - giver_axes.col(0).dot(receiver_axes.col(0)));
  return 0.5 * sy + 0.5 * sx;
}

std::vector<Eigen::Vector3d> sample_candidate_positions(const RigidPose& base_g,
                                                        const RigidPose& base_r) {
  if ((base_g.t - base_r.t).norm() < 1e-12) fail("BadInput", "robot bases coincide");
  const Eigen::Vector2d bg = base_g.t.head<2>(), br = base_r.t.head<2>();
  Eigen::Vector3d c;
  c.head<2>() = 0.5 * (bg + br);
  c.z() = std::max(0.5 * (base_g.t.z() + base_r.t.z()) + 0.45, 0.4);

  const int nxy = static_cast<int>(std::round(kGridExtentXy / kGridPitch));
  const int nz = static_cast<int>(std::round(kGridExtentZ / kGridPitch));
  std::vector<Eigen::Vector3d> out;
  for (int ix = -nxy; ix <= nxy; ++ix) {
    for (int iy = -nxy; iy <= nxy; ++iy) {
      for (int iz = -nz; iz <= nz; ++iz) {
        const Eigen::Vector3d p = c + Eigen::Vector3d(ix, iy, iz) * kGridPitch;
        const double dg = (p.head<2>() - bg).norm();
        const double dr = (p.head<2>() - br).norm();
        if (dg >= kAnnulusMin && dg <= kAnnulusMax && dr >= kAnnulusMin && dr <= kAnnulusMax) {
          out.push_back(p);
        }
      }
    }
  }
  if (out.empty()) fail("EmptyCandidateSet", "no grid point lies in both reach annuli");
  return out;
}

double weighted_total(const CandidateScores& s, const ScoreWeights& w) {
  return w.continuity * s.continuity + w.manipulability * s.manipulability +
         w.limit_margin * s.limit_margin + w.tcp * s.tcp + w.z_down * s.z_down;
}

namespace {

double z_down_score(const Eigen::Matrix3d& R) {
  return 0.5 * (1.0 - R.col(2).dot(Eigen::Vector3d(0, 0, -1)));
}

}  // namespace

double score_candidate(const KinematicChain& giver_chain, const KinematicChain& receiver_chain,
                       HandoverCandidate& cand, const Eigen::VectorXd& q_ref_g,
                       const Eigen::VectorXd& q_ref_r, const ScoreWeights& weights) {
  check_q(giver_chain, cand.q_giver);
  check_q(receiver_chain, cand.q_receiver);
  check_q(giver_chain, q_ref_g);
  check_q(receiver_chain, q_ref_r);
  CandidateScores s;
  s.tcp = tcp_score(cand.giver.R, cand.receiver.R, cand.category);
  s.continuity = 0.5 * (std::exp(-(cand.q_giver - q_ref_g).norm()) +
                        std::exp(-(cand.q_receiver - q_ref_r).norm()));
  s.manipulability = 0.5 * (manipulability(giver_chain, cand.q_giver) +
                            manipulability(receiver_chain, cand.q_receiver));
  s.limit_margin = 0.5 * (limit_margin(giver_chain, cand.q_giver) +
                          limit_margin(receiver_chain, cand.q_receiver));
  s.z_down = 0.5 * (z_down_score(forward_kinematics(giver_chain, cand.q_giver).R) +
                    z_down_score(forward_kinematics(receiver_chain, cand.q_receiver).R));
  cand.scores = s;
  cand.total = weighted_total(s, weights);
  return cand.total;
}

Eigen::VectorXd prehandover(const Eigen::VectorXd& q_handover, const KinematicChain& chain,
                            ObjectCategory category, int restarts, std::uint64_t seed) {
  check_chain(chain);
  check_q(chain, q_handover);
  if (!chain.within_limits(q_handover)) fail("BadInput", "handover configuration out of limits");
  const RigidPose T = forward_kinematics(chain, q_handover);
  const RigidPose target =
      RigidPose::from_rt(T.R, T.t - retract_distance(category) * T.R.col(2));
  IkOptions opts;
  opts.init = q_handover;
  auto res = ik_best(chain, target, restarts, SplitRng(seed), opts);
  if (!res) fail("NoSolution", "no configuration reaches the retracted pose");
  return res->q;
}

HandoverCandidate plan_handover(const KinematicChain& giver, const KinematicChain& receiver,
                                ObjectCategory category, const PlanOptions& opts) {
  check_chain(giver);
  check_chain(receiver);
  if (opts.yaw_samples < 1 || opts.tilt_samples < 1) {
    fail("BadInput", "orientation grid needs at least one sample per axis");
  }
  std::vector<Eigen::Vector3d> positions;
  try {
    positions = sample_candidate_positions(giver.base, receiver.base);
  } catch (const Error& e) {
    if (e.name() == "EmptyCandidateSet") {
      fail("NoFeasibleCandidate", "no mutually reachable handover position");
    }
    throw;
  }

  const Eigen::VectorXd ref_g = giver.neutral(), ref_r = receiver.neutral();
  const int n_orient = opts.yaw_samples * opts.tilt_samples;
  const int total = static_cast<int>(positions.size()) * n_orient;
  std::vector<std::optional<HandoverCandidate>> results(static_cast<size_t>(total));

  IkOptions ik_opts;
  ik_opts.require_orientation = false;
  const SplitRng root(opts.seed);
  parallel_ranges(total, 16, [&](int lo, int hi) {
    for (int idx = lo; idx < hi; ++idx) {
      const Eigen::Vector3d& p = positions[static_cast<size_t>(idx / n_orient)];
      const int rem = idx % n_orient;
      const double yaw = 2.0 * M_PI * (rem / opts.tilt_samples) / opts.yaw_samples;
      const double tilt = opts.tilt_samples == 1
                              ? 0.0
                              : opts.tilt_max * (rem % opts.tilt_samples) / (opts.tilt_samples - 1);
      const RigidPose giver_target = RigidPose::from_rt(rot_z(yaw) * rot_y(tilt), p);
      const RigidPose receiver_target = receiver_pose(giver_target, category);

      SplitRng rng = root.split(idx);
      auto g_res = ik_best(giver, giver_target, opts.ik_restarts, rng.split(0), ik_opts);
      if (!g_res) continue;
      auto r_res = ik_best(receiver, receiver_target, opts.ik_restarts, rng.split(1), ik_opts);
      if (!r_res) continue;

      HandoverCandidate cand;
      cand.index = idx;
      cand.category = category;
      cand.position = p;
      cand.giver = giver_target;
      cand.receiver = receiver_target;
      cand.q_giver = g_res->q;
      cand.q_receiver = r_res->q;
      score_candidate(giver, receiver, cand, ref_g, ref_r, opts.weights);
      results[static_cast<size_t>(idx)] = std::move(cand);
    }
  });

  int best = -1;
  for (int idx = 0; idx < total; ++idx) {
    if (!results[static_cast<size_t>(idx)]) continue;
    if (best < 0 || results[static_cast<size_t>(idx)]->total > results[static_cast<size_t>(best)]->total) {
      best = idx;
    }
  }
  if (best < 0) fail("NoFeasibleCandidate", "no candidate passed bimanual reachability");
  return *results[static_cast<size_t>(best)];
}

}  // namespace omnikit::handover

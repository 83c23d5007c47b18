#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "omnikit/geometry.hpp"
#include "omnikit/rng.hpp"

namespace omnikit::handover {

// Serial revolute chain. Each joint rotates about its local +z axis after a
// fixed pre-transform from the previous joint frame; link translations are
// folded into the following joint's pre-transform (or into `tool`).
struct Joint {
  RigidPose pre;
  double lo = 0;
  double hi = 0;
};

struct KinematicChain {
  std::vector<Joint> joints;
  RigidPose tool = RigidPose::identity();
  RigidPose base = RigidPose::identity();

  int dof() const { return static_cast<int>(joints.size()); }
  Eigen::VectorXd neutral() const;
  Eigen::VectorXd clamped(Eigen::VectorXd q) const;
  bool within_limits(const Eigen::VectorXd& q, double slack = 1e-9) const;
};

// Two-joint arm rotating about +y, link lengths 0.5 m each, reach 1.0 m.
KinematicChain planar_two_link(const RigidPose& base = RigidPose::identity());
// Seven-axis serial arm with FR3-like link geometry and joint limits.
KinematicChain serial_seven(const RigidPose& base = RigidPose::identity());

RigidPose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q);

// 6 x n, rows 0..2 angular and rows 3..5 linear velocity, world frame.
Eigen::MatrixXd geometric_jacobian(const KinematicChain& chain, const Eigen::VectorXd& q);

// Yoshikawa measure: sqrt(det(J J^T)) for chains with >= 6 joints; shorter
// chains use the position-block Gram sqrt(det(Jv^T Jv)) so the measure still
// vanishes at fold-out singularities.
double manipulability(const KinematicChain& chain, const Eigen::VectorXd& q);

// Min over joints of the distance to the nearest limit, normalized so the
// mid-range posture scores 1 and any joint at a limit scores 0.
double limit_margin(const KinematicChain& chain, const Eigen::VectorXd& q);

struct IkOptions {
  int max_iters = 300;  // counts rejected steps too
  double pos_tol = 1e-3;
  double rot_tol = 0.5 * std::numbers::pi / 180.0;
  double damping = 0.1;  // initial value; adapted as steps succeed or fail
  // When false, success is gated on position alone; chains with fewer than
  // six joints also drop the orientation residual entirely, since any
  // orientation pull would drag an underactuated arm off the position target.
  bool require_orientation = true;
  std::optional<Eigen::VectorXd> init;  // first restart; defaults to neutral
};

struct IkResult {
  Eigen::VectorXd q;
  double pos_err = 0;
  double rot_err = 0;
};

// Damped least squares from `restarts` start states (the first from
// IkOptions::init or neutral, the rest uniform within limits). Returns the
// first restart that meets the tolerances, or nullopt.
std::optional<IkResult> ik_best(const KinematicChain& chain, const RigidPose& target, int restarts,
                                SplitRng rng, const IkOptions& opts = {});

// Throwing wrapper: fails with NoSolution when no restart converges.
Eigen::VectorXd ik_solve(const KinematicChain& chain, const RigidPose& target, int restarts = 8,
                         std::uint64_t seed = 0, const IkOptions& opts = {});

enum class ObjectCategory { spherical, elongated };

ObjectCategory category_from_string(const std::string& name);
std::string to_string(ObjectCategory category);

// Fixed giver-to-receiver grasp geometry per category.
Eigen::Matrix3d category_rotation(ObjectCategory category);
Eigen::Vector3d category_offset(ObjectCategory category);
double retract_distance(ObjectCategory category);

// p_r = p_g + R_g * offset; R_r = R_g * category_rotation.
RigidPose receiver_pose(const RigidPose& giver, ObjectCategory category);

// Grasp-compatibility score in [0, 1] from the two TCP rotation matrices.
// Spherical rewards antiparallel z axes and perpendicular x axes; elongated
// rewards antiparallel x axes and parallel y axes.
double tcp_score(const Eigen::Matrix3d& giver_axes, const Eigen::Matrix3d& receiver_axes,
                 ObjectCategory category);

inline constexpr double kAnnulusMin = 0.35;
inline constexpr double kAnnulusMax = 0.75;
inline constexpr double kGridExtentXy = 0.15;
inline constexpr double kGridExtentZ = 0.10;
inline constexpr double kGridPitch = 0.05;

// Lattice around the mid-base center (z raised to max(mean_z + 0.45, 0.4)),
// keeping points whose xy distance to both bases lies in the annulus.
// Order: x-major, then y, then z. Throws EmptyCandidateSet when no point
// survives and BadInput when the bases coincide.
std::vector<Eigen::Vector3d> sample_candidate_positions(const RigidPose& base_g,
                                                        const RigidPose& base_r);

struct ScoreWeights {
  double continuity = 0.15;
  double manipulability = 0.15;
  double limit_margin = 0.15;
  double tcp = 0.4;
  double z_down = 0.15;
};

struct CandidateScores {
  double tcp = 0;
  double continuity = 0;
  double manipulability = 0;
  double limit_margin = 0;
  double z_down = 0;
};

double weighted_total(const CandidateScores& scores, const ScoreWeights& weights);

struct HandoverCandidate {
  int index = -1;  // enumeration index in the planner grid
  ObjectCategory category = ObjectCategory::spherical;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  RigidPose giver;     // giver TCP target in world
  RigidPose receiver;  // receiver TCP target in world
  Eigen::VectorXd q_giver;
  Eigen::VectorXd q_receiver;
  CandidateScores scores;
  double total = 0;
};

// Fills cand.scores and cand.total. Continuity is exp(-|q - q_ref|) per arm;
// manipulability, limit margin and the downward-z term average the two arms;
// the tcp term scores the stored target orientations.
double score_candidate(const KinematicChain& giver_chain, const KinematicChain& receiver_chain,
                       HandoverCandidate& cand, const Eigen::VectorXd& q_ref_g,
                       const Eigen::VectorXd& q_ref_r, const ScoreWeights& weights = {});

// Retracts along the TCP z axis by the category distance, holding orientation,
// and re-solves IK warm-started from q_handover. Throws NoSolution.
Eigen::VectorXd prehandover(const Eigen::VectorXd& q_handover, const KinematicChain& chain,
                            ObjectCategory category, int restarts = 16, std::uint64_t seed = 0);

struct PlanOptions {
  int yaw_samples = 8;                    // yaw angles over [0, 2pi)
  int tilt_samples = 3;                   // tilt angles from 0 to tilt_max
  double tilt_max = 20.0 * std::numbers::pi / 180.0;
  int ik_restarts = 6;
  ScoreWeights weights;
  std::uint64_t seed = 0;
};

// Exhaustive search over position x orientation grid. Giver orientations are
// R = Rz(yaw) * Ry(tilt); the receiver target follows from the category rule.
// A candidate is kept when both arms reach their target positions within the
// IK position tolerance. Ties break toward the lower candidate index.
// Throws NoFeasibleCandidate when nothing is reachable.
HandoverCandidate plan_handover(const KinematicChain& giver, const KinematicChain& receiver,
                                ObjectCategory category, const PlanOptions& opts = {});

}  // namespace omnikit::handover

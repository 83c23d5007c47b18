#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omnikit/tracking.hpp"

namespace omnikit::safety {

struct HumanCylinder {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // hip, cylinder mid-height
  double radius = 0.3;
  double height = 1.8;
};

struct TcpSphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.08;
};

inline std::array<Eigen::Vector3d, track::kNumJoints> zero_joints() {
  std::array<Eigen::Vector3d, track::kNumJoints> joints;
  joints.fill(Eigen::Vector3d::Zero());
  return joints;
}

struct SkeletonFrame {
  double t = 0;
  std::array<Eigen::Vector3d, track::kNumJoints> joints = zero_joints();
  std::array<bool, track::kNumJoints> valid{};
};

struct SkeletonRecording {
  std::vector<SkeletonFrame> frames;  // strictly increasing t
  double duration() const { return frames.empty() ? 0.0 : frames.back().t - frames.front().t; }
};

// Body joints only (head through legs); hands and feet extras are excluded.
constexpr int kBodyJointEnd = 23;

// Mean of the valid body joints. Throws NoValidJoints if none are valid.
Eigen::Vector3d human_center(const SkeletonFrame& frame);

// Chebyshev-style decomposition: the larger of radial and axial clearance to
// the cylinder surface, minus the sphere radius. Collision iff negative.
double sphere_cylinder_distance(const TcpSphere& s, const HumanCylinder& h);

// Direction of the distance gradient at the sphere center (away from the
// cylinder): radial when the radial clearance binds, axial otherwise.
Eigen::Vector3d cylinder_outward_normal(const Eigen::Vector3d& point, const HumanCylinder& h);

// Linear interpolation at time t; exact frames at recorded timestamps. A
// joint is valid between frames only if valid in both neighbours. Clamps to
// the first/last frame outside the recorded span.
SkeletonFrame interpolate_recording(const SkeletonRecording& rec, double t);

struct MemoryParams {
  double zone_radius = 2.0;        // episode entry distance to the handover center, xy
  double exit_factor = 1.2;        // episode ends beyond zone_radius * exit_factor
  double episode_timeout_s = 30.0;
  double intrusion_dist = 0.3;     // min human-tcp distance classifying an intrusion
  double decay = 0.95;
  int decay_every = 20;            // episodes between decays
  double active_min = 2.0;         // smoothed episode mass before a bin modulates
  int warmup_episodes = 3;         // total episodes before learned mode engages
  double boost = 0.8;              // max fractional radius increase
};

struct PolicyConfig {
  enum class Kind { non_aware, static_cylinder, dynamic_cylinder, dynamic_learned };
  Kind kind = Kind::non_aware;
  double radius = 0.5;   // static
  double height = 2.0;   // static
  double r_base = 0.6;   // dynamic
  double k = 0.6;        // dynamic, m per m/s of approach speed
  double r_min = 0.3;
  double r_max = 0.6;
  MemoryParams memory;   // dynamic_learned
};

PolicyConfig::Kind policy_kind_from_string(const std::string& name);
std::string policy_kind_to_string(PolicyConfig::Kind kind);

struct BehaviorBin {
  double n_intr = 0;
  double n_pass = 0;
  double mass() const { return n_intr + n_pass; }
  double intrusion_ratio() const { return mass() > 0 ? n_intr / mass() : 0.0; }
};

struct BehaviorMemory {
  std::array<BehaviorBin, 12> bins{};
  int total_episodes = 0;
  // current episode
  bool inside = false;
  int entry_bin = 0;
  double entry_time = 0;
  double min_tcp_dist = 0;
};

// 30 degree sector of the xy bearing (atan2) from the handover center.
int bearing_bin(const Eigen::Vector2d& from_center);

// Per-step episode bookkeeping: entry into the zone opens an episode at the
// entry bearing; leaving past the hysteresis radius or timing out closes it,
// crediting the entry bin and both neighbours as intrusion or passthrough.
// Counters decay by the configured factor every decay_every episodes.
void update_behavior_memory(BehaviorMemory& memory, const Eigen::Vector3d& human,
                            const Eigen::Vector3d& center, double min_tcp_dist, double t,
                            const MemoryParams& params = {});

// Radius boost from learned intrusion statistics: base * (1 + boost * ratio)
// when the bin is active and warmup has passed, base otherwise. Never shrinks.
double modulated_radius(const BehaviorMemory& memory, double bearing_rad, double base_radius,
                        const MemoryParams& params = {});

// Effective speed for cylinder sizing over a uniformly sampled xy history:
// max of the EMA-smoothed speed and the speed of a constant-acceleration
// extrapolation over the horizon. Needs at least two samples.
double effective_velocity(const std::vector<Eigen::Vector2d>& xy, double dt,
                          double horizon = 0.5, double alpha = 0.15);

struct TriggerRegion {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0;
};

struct TriggerDecision {
  bool trigger = false;
  TriggerRegion region;
};

// Evaluates one policy against the human-center history (uniform spacing dt,
// latest last) and the current TCP positions. Dynamic kinds require at least
// two history samples; dynamic_learned additionally requires a memory.
TriggerDecision policy_trigger(const PolicyConfig& policy,
                               const std::vector<Eigen::Vector3d>& human_history, double dt,
                               const std::vector<Eigen::Vector3d>& tcps,
                               const Eigen::Vector3d& handover_center,
                               const BehaviorMemory* memory = nullptr);

constexpr double kCbfAlpha = 2.0;
constexpr double kCbfMargin = 0.05;
constexpr double kCbfInfluence = 0.3;

struct QpResult {
  Eigen::VectorXd qdot;
  bool feasible = true;
  bool constrained = false;  // projection applied
};

// Single-constraint velocity QP: minimizes the correction to qdot_ref subject
// to J qdot . n_hat >= -alpha * h, with n_hat the unit direction from the
// obstacle toward the TCP. Returns qdot_ref itself when already feasible.
// Infeasible (zero velocity, flag) only when J^T n_hat vanishes while the
// constraint is violated.
QpResult qp_cbf_step(const Eigen::VectorXd& qdot_ref, const Eigen::Matrix<double, 3, Eigen::Dynamic>& jac,
                     const Eigen::Vector3d& n_hat, double h, double alpha = kCbfAlpha);

enum class WaypointTag { transit, pick, exchange, place };

struct Waypoint {
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  double speed = 0.5;    // m/s toward the target
  double dwell_s = 0;    // hold after arrival
  WaypointTag tag = WaypointTag::transit;
};

struct ArmScript {
  std::vector<Waypoint> waypoints;  // one task cycle, repeated
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d fallback = Eigen::Vector3d::Zero();
  double retreat_speed = 1.8;
};

struct SimScenario {
  SkeletonRecording recording;
  std::string skeleton_path;  // source file, if loaded
  double time_offset_s = 0;
  PolicyConfig policy;
  ArmScript giver;
  ArmScript receiver;
  Eigen::Vector3d handover_center = Eigen::Vector3d::Zero();
  int cycles = 4;
  double duration_cap_s = 240.0;
  double exchange_dwell_s = 1.0;
  std::uint64_t seed = 0;
};

struct SimMetrics {
  double avg_cycle_s = 0;
  int human_hits = 0;
  int triggers = 0;
  double fallback_s = 0;
  int cycles_completed = 0;
  double elapsed_s = 0;
};

struct SimEvent {
  double t = 0;
  std::string kind;
  double value = 0;
};

struct SimResult {
  SimMetrics metrics;
  std::vector<SimEvent> events;
};

constexpr double kSimDt = 1e-3;        // internal integration step
constexpr int kCheckEvery = 20;        // collision / policy cadence in steps
constexpr double kResumeDebounce = 0.5;

// Deterministic replay of the scripted bimanual cycle against the recorded
// human, with the configured trigger policy governing fallback. The trigger
// is suppressed during the grasp exchange dwell; collision checks are not.
SimResult simulate(const SimScenario& scenario);

// Optional learning freeze for ablations: memory updates stop once sim time
// exceeds the given fraction of the recording span.
SimResult simulate(const SimScenario& scenario, std::optional<double> freeze_fraction);

struct FreezePoint {
  double fraction = 0;
  SimMetrics metrics;
};

// One simulation per freeze fraction; requires a dynamic_learned policy.
// Runs points in parallel with isolated state.
std::vector<FreezePoint> memory_freeze_sweep(const SimScenario& scenario,
                                             const std::vector<double>& fractions);

// Mixed wandering plus occasional slow approaches toward the handover zone;
// the four policy families separate cleanly on hit and cycle ordering.
SimScenario make_benchmark_scenario(std::uint64_t seed, const PolicyConfig& policy);

// Fast rushes concentrated in one bearing sector, the regime where learned
// radius modulation pays off.
SimScenario make_adversarial_scenario(std::uint64_t seed, const PolicyConfig& policy);

// Wraps a center trajectory into full skeleton frames whose body joints
// average back to the given centers exactly.
SkeletonRecording recording_from_centers(const std::vector<Eigen::Vector3d>& centers, double fps);

SkeletonRecording load_recording(const std::string& path);
void save_recording(const SkeletonRecording& rec, const std::string& path);

SimScenario load_scenario(const std::string& path);
void save_scenario(const SimScenario& scenario, const std::string& path,
                   const std::string& skeleton_path);

}  // namespace omnikit::safety

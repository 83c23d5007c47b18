#pragma once

#include <Eigen/Dense>
#include <string>

namespace omnikit::contact {

struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N*m
  std::string frame;

  bool finite() const { return force.allFinite() && torque.allFinite(); }
};

// Shifts the torque reference point: tau_ee = tau - r x F, where r points
// from the end-effector origin to the frame the wrench was reported in.
Eigen::Vector3d shift_torque_to_ee(const Wrench& w, const Eigen::Vector3d& r_ee_to_k);

struct EmaState {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();
};

// Per-axis recursion f = alpha * (in - baseline) + (1 - alpha) * f_prev on
// both force and torque. Requires alpha in (0, 1]. Updates state in place and
// returns the filtered wrench in the input's frame.
Wrench ema_wrench(EmaState& state, const Wrench& w, const Wrench& baseline, double alpha);

inline constexpr double kMinNormalForce = 2.0;  // N

// Lateral contact point estimate under a dominant vertical force:
// x_est = -tau_y / |F_z|, y_est = -tau_x / |F_z|. Throws
// InsufficientNormalForce when |F_z| <= f_min.
Eigen::Vector2d contact_offset(const Eigen::Vector3d& force_filtered,
                               const Eigen::Vector3d& torque_filtered,
                               double f_min = kMinNormalForce);

// Vertical descent speed profile: linear ramp-in over t_acc, hold at -v_d,
// linear ramp-out to zero starting at t_s over t_dec. Continuous at t_s when
// t_s >= t_acc. Zero before t = 0.
double descent_velocity(double t, double v_d, double t_acc, double t_s, double t_dec);

inline constexpr double kComplianceVelocityCap = 0.02;  // m/s

// Dead-band admittance on the compliant axis: pushes away from the measured
// force above the threshold, servos the position error below it. The output
// jumps at |f_y| = f_thresh by design. Clamped to +-v_cap.
double admittance_velocity(double f_y, double e_pos_y, double k_adm, double k_p, double f_thresh,
                           double v_cap = kComplianceVelocityCap);

// Per-axis acceleration limit: each component moves toward v_new by at most
// a_lim * dt. Idempotent once the remaining difference fits in one step.
Eigen::VectorXd rate_limit(const Eigen::VectorXd& v_new, const Eigen::VectorXd& v_prev,
                           double a_lim, double dt);

enum class ContactSide { none, left, right };

// Label flips only after `stable_cycles` consecutive observations of the
// same new side, suppressing oscillation under noise.
struct HysteresisState {
  ContactSide label = ContactSide::none;
  ContactSide pending = ContactSide::none;
  int streak = 0;
};

ContactSide update_hysteresis(HysteresisState& state, ContactSide observed,
                              int stable_cycles = 5);

inline constexpr double kMaxCompliantDisplacement = 0.05;  // m

// Accumulates |step| of motion along the compliant axis; compliance latches
// off once the total exceeds the bound and stays off.
struct ComplianceTracker {
  double accumulated = 0;
  double bound = kMaxCompliantDisplacement;
  bool active = true;
};

bool update_compliance(ComplianceTracker& tracker, double step);

}  // namespace omnikit::contact

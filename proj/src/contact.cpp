#include "omnikit/contact.hpp"

#include <algorithm>
#include <cmath>

#include "omnikit/error.hpp"

namespace omnikit::contact {

Eigen::Vector3d shift_torque_to_ee(const Wrench& w, const Eigen::Vector3d& r_ee_to_k) {
  if (!w.finite() || !r_ee_to_k.allFinite()) fail("BadInput", "non-finite wrench or offset");
  return w.torque - r_ee_to_k.cross(w.force);
}

Wrench ema_wrench(EmaState& state, const Wrench& w, const Wrench& baseline, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("BadInput", "alpha must be in (0, 1]");
  if (!w.finite() || !baseline.finite()) fail("BadInput", "non-finite wrench");
  state.force = alpha * (w.force - baseline.force) + (1.0 - alpha) * state.force;
  state.torque = alpha * (w.torque - baseline.torque) + (1.0 - alpha) * state.torque;
  Wrench out;
  out.force = state.force;
  out.torque = state.torque;
  out.frame = w.frame;
  return out;
}

Eigen::Vector2d contact_offset(const Eigen::Vector3d& force_filtered,
                               const Eigen::Vector3d& torque_filtered, double f_min) {
  if (!force_filtered.allFinite() || !torque_filtered.allFinite())
    fail("BadInput", "non-finite filtered wrench");
  if (!(f_min > 0.0)) fail("BadInput", "f_min must be positive");
  const double fz = std::abs(force_filtered.z());
  if (fz <= f_min) fail("InsufficientNormalForce", "normal force too small for offset estimate");
  return {-torque_filtered.y() / fz, -torque_filtered.x() / fz};
}

double descent_velocity(double t, double v_d, double t_acc, double t_s, double t_dec) {
  if (!(t_acc > 0.0) || !(t_dec > 0.0)) fail("BadInput", "ramp durations must be positive");
  if (t <= 0.0) return 0.0;
  if (t <= t_s) return -v_d * std::min(1.0, t / t_acc);
  return -v_d * std::max(0.0, 1.0 - (t - t_s) / t_dec);
}

double admittance_velocity(double f_y, double e_pos_y, double k_adm, double k_p, double f_thresh,
                           double v_cap) {
  if (!(k_adm > 0.0) || !(k_p > 0.0)) fail("BadInput", "gains must be positive");
  if (!(f_thresh >= 0.0) || !(v_cap > 0.0)) fail("BadInput", "bad threshold or cap");
  const double v = std::abs(f_y) > f_thresh ? -k_adm * f_y : k_p * e_pos_y;
  return std::clamp(v, -v_cap, v_cap);
}

Eigen::VectorXd rate_limit(const Eigen::VectorXd& v_new, const Eigen::VectorXd& v_prev,
                           double a_lim, double dt) {
  if (v_new.size() != v_prev.size()) fail("BadInput", "velocity size mismatch");
  if (!(a_lim >= 0.0) || !(dt > 0.0)) fail("BadInput", "bad rate limit parameters");
  const double dv_max = a_lim * dt;
  Eigen::VectorXd out(v_new.size());
  for (Eigen::Index i = 0; i < v_new.size(); ++i)
    out[i] = v_prev[i] + std::clamp(v_new[i] - v_prev[i], -dv_max, dv_max);
  return out;
}

ContactSide update_hysteresis(HysteresisState& state, ContactSide observed, int stable_cycles) {
  if (stable_cycles < 1) fail("BadInput", "stable_cycles must be at least 1");
  if (observed == state.label) {
    state.pending = state.label;
    state.streak = 0;
    return state.label;
  }
  if (observed == state.pending) {
    ++state.streak;
  } else {
    state.pending = observed;
    state.streak = 1;
  }
  if (state.streak >= stable_cycles) {
    state.label = state.pending;
    state.streak = 0;
  }
  return state.label;
}

bool update_compliance(ComplianceTracker& tracker, double step) {
  if (!std::isfinite(step)) fail("BadInput", "non-finite displacement step");
  tracker.accumulated += std::abs(step);
  if (tracker.accumulated > tracker.bound) tracker.active = false;
  return tracker.active;
}

}  // namespace omnikit::contact

#include "omnikit/safety.hpp"

#include <algorithm>
#include <cmath>

#include "omnikit/error.hpp"

namespace omnikit::safety {

namespace {

constexpr double kTau = 2.0 * M_PI;

double wrap_angle(double a) {
  a = std::fmod(a, kTau);
  return a < 0 ? a + kTau : a;
}

}  // namespace

Eigen::Vector3d human_center(const SkeletonFrame& frame) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  int count = 0;
  for (int j = 0; j < kBodyJointEnd; ++j) {
    if (!frame.valid[j]) continue;
    sum += frame.joints[j];
    ++count;
  }
  if (count == 0) fail("NoValidJoints", "no valid body joints in skeleton frame");
  return sum / count;
}

double sphere_cylinder_distance(const TcpSphere& s, const HumanCylinder& h) {
  const double radial = (s.center.head<2>() - h.center.head<2>()).norm() - h.radius;
  const double axial = std::abs(s.center.z() - h.center.z()) - 0.5 * h.height;
  return std::max(radial, axial) - s.radius;
}

Eigen::Vector3d cylinder_outward_normal(const Eigen::Vector3d& point, const HumanCylinder& h) {
  const Eigen::Vector2d dxy = point.head<2>() - h.center.head<2>();
  const double radial = dxy.norm() - h.radius;
  const double axial = std::abs(point.z() - h.center.z()) - 0.5 * h.height;
  if (radial >= axial && dxy.norm() > 1e-12)
    return {dxy.x() / dxy.norm(), dxy.y() / dxy.norm(), 0.0};
  return {0.0, 0.0, point.z() >= h.center.z() ? 1.0 : -1.0};
}

SkeletonFrame interpolate_recording(const SkeletonRecording& rec, double t) {
  if (rec.frames.empty()) fail("BadInput", "empty skeleton recording");
  const auto& frames = rec.frames;
  if (t <= frames.front().t) return frames.front();
  if (t >= frames.back().t) return frames.back();
  const auto it = std::upper_bound(frames.begin(), frames.end(), t,
                                   [](double v, const SkeletonFrame& f) { return v < f.t; });
  const SkeletonFrame& b = *it;
  const SkeletonFrame& a = *(it - 1);
  if (t == a.t) return a;
  const double u = (t - a.t) / (b.t - a.t);
  SkeletonFrame out;
  out.t = t;
  for (int j = 0; j < track::kNumJoints; ++j) {
    out.valid[j] = a.valid[j] && b.valid[j];
    if (out.valid[j]) out.joints[j] = (1.0 - u) * a.joints[j] + u * b.joints[j];
  }
  return out;
}

int bearing_bin(const Eigen::Vector2d& from_center) {
  const double bearing = wrap_angle(std::atan2(from_center.y(), from_center.x()));
  return std::min(11, static_cast<int>(bearing / (kTau / 12.0)));
}

PolicyConfig::Kind policy_kind_from_string(const std::string& name) {
  if (name == "non_aware") return PolicyConfig::Kind::non_aware;
  if (name == "static") return PolicyConfig::Kind::static_cylinder;
  if (name == "dynamic") return PolicyConfig::Kind::dynamic_cylinder;
  if (name == "dynamic_learned") return PolicyConfig::Kind::dynamic_learned;
  fail("SchemaError", "unknown policy kind: " + name);
}

std::string policy_kind_to_string(PolicyConfig::Kind kind) {
  switch (kind) {
    case PolicyConfig::Kind::non_aware: return "non_aware";
    case PolicyConfig::Kind::static_cylinder: return "static";
    case PolicyConfig::Kind::dynamic_cylinder: return "dynamic";
    case PolicyConfig::Kind::dynamic_learned: return "dynamic_learned";
  }
  fail("SchemaError", "invalid policy kind");
}

void update_behavior_memory(BehaviorMemory& memory, const Eigen::Vector3d& human,
                            const Eigen::Vector3d& center, double min_tcp_dist, double t,
                            const MemoryParams& params) {
  const Eigen::Vector2d delta = human.head<2>() - center.head<2>();
  const double dist = delta.norm();
  if (!memory.inside) {
    if (dist <= params.zone_radius) {
      memory.inside = true;
      memory.entry_bin = bearing_bin(delta);
      memory.entry_time = t;
      memory.min_tcp_dist = min_tcp_dist;
    }
    return;
  }
  memory.min_tcp_dist = std::min(memory.min_tcp_dist, min_tcp_dist);
  const bool left = dist > params.zone_radius * params.exit_factor;
  const bool timed_out = t - memory.entry_time >= params.episode_timeout_s;
  if (!left && !timed_out) return;

  const bool intrusion = memory.min_tcp_dist < params.intrusion_dist;
  for (int d = -1; d <= 1; ++d) {
    BehaviorBin& bin = memory.bins[(memory.entry_bin + d + 12) % 12];
    (intrusion ? bin.n_intr : bin.n_pass) += 1.0;
  }
  memory.inside = false;
  ++memory.total_episodes;
  if (params.decay_every > 0 && memory.total_episodes % params.decay_every == 0) {
    for (BehaviorBin& bin : memory.bins) {
      bin.n_intr *= params.decay;
      bin.n_pass *= params.decay;
    }
  }
}

double modulated_radius(const BehaviorMemory& memory, double bearing_rad, double base_radius,
                        const MemoryParams& params) {
  if (memory.total_episodes < params.warmup_episodes) return base_radius;
  const double wrapped = wrap_angle(bearing_rad);
  const int bin = std::min(11, static_cast<int>(wrapped / (kTau / 12.0)));
  const BehaviorBin& b = memory.bins[bin];
  if (b.mass() < params.active_min) return base_radius;
  return base_radius * (1.0 + params.boost * b.intrusion_ratio());
}

double effective_velocity(const std::vector<Eigen::Vector2d>& xy, double dt, double horizon,
                          double alpha) {
  if (xy.size() < 2) fail("BadInput", "need at least two position samples");
  if (!(dt > 0.0) || !(alpha > 0.0 && alpha <= 1.0) || !(horizon >= 0.0))
    fail("BadInput", "bad velocity estimator parameters");
  Eigen::Vector2d prev_v = (xy[1] - xy[0]) / dt;
  Eigen::Vector2d ema = prev_v;
  Eigen::Vector2d last_v = prev_v;
  for (std::size_t i = 2; i < xy.size(); ++i) {
    prev_v = last_v;
    last_v = (xy[i] - xy[i - 1]) / dt;
    ema = alpha * last_v + (1.0 - alpha) * ema;
  }
  Eigen::Vector2d accel = Eigen::Vector2d::Zero();
  if (xy.size() >= 3) accel = (last_v - prev_v) / dt;
  const double v_raw = ema.norm();
  const double v_pred = (ema + 0.5 * horizon * accel).norm();
  return std::max(v_raw, v_pred);
}

namespace {

TriggerDecision static_trigger(const PolicyConfig& policy, const Eigen::Vector3d& human,
                               const std::vector<Eigen::Vector3d>& tcps) {
  TriggerDecision out;
  double best = std::numeric_limits<double>::infinity();
  for (const Eigen::Vector3d& tcp : tcps) {
    const double dxy = (human.head<2>() - tcp.head<2>()).norm();
    const double dz = std::abs(human.z() - tcp.z());
    const bool hit = dxy < policy.radius && dz <= 0.5 * policy.height;
    if (dxy < best) {
      best = dxy;
      out.region = {tcp, policy.radius};
    }
    if (hit) {
      out.trigger = true;
      out.region = {tcp, policy.radius};
      return out;
    }
  }
  return out;
}

TriggerDecision dynamic_trigger(const PolicyConfig& policy,
                                const std::vector<Eigen::Vector3d>& history, double dt,
                                const Eigen::Vector3d& center, const BehaviorMemory* memory) {
  const Eigen::Vector3d& human = history.back();
  const Eigen::Vector2d delta = human.head<2>() - center.head<2>();
  const double dist = delta.norm();
  const Eigen::Vector2d hdot =
      (human.head<2>() - history[history.size() - 2].head<2>()) / dt;

  Eigen::Vector2d dir = Eigen::Vector2d::Zero();
  double v_app = 0;
  if (dist > 1e-9) {
    dir = delta / dist;
    v_app = -hdot.dot(dir);
  }

  const bool learned = policy.kind == PolicyConfig::Kind::dynamic_learned && memory != nullptr &&
                       memory->total_episodes >= policy.memory.warmup_episodes;
  double v_used = v_app;
  if (learned && v_app > 0.0) {
    std::vector<Eigen::Vector2d> xy(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) xy[i] = history[i].head<2>();
    v_used = effective_velocity(xy, dt);
  }

  double radius = std::clamp(policy.r_base + policy.k * v_used, policy.r_min, policy.r_max);
  if (learned)
    radius = modulated_radius(*memory, std::atan2(delta.y(), delta.x()), radius, policy.memory);

  // far edge stays at r_base behind the center; only growth shifts it
  const double shift = std::max(0.0, radius - policy.r_base);
  Eigen::Vector3d moved = center;
  moved.head<2>() += shift * dir;

  TriggerDecision out;
  out.region = {moved, radius};
  out.trigger = (human.head<2>() - moved.head<2>()).norm() < radius;
  return out;
}

}  // namespace

TriggerDecision policy_trigger(const PolicyConfig& policy,
                               const std::vector<Eigen::Vector3d>& human_history, double dt,
                               const std::vector<Eigen::Vector3d>& tcps,
                               const Eigen::Vector3d& handover_center,
                               const BehaviorMemory* memory) {
  if (human_history.empty()) fail("BadInput", "empty human history");
  switch (policy.kind) {
    case PolicyConfig::Kind::non_aware:
      return {false, {handover_center, 0.0}};
    case PolicyConfig::Kind::static_cylinder:
      if (tcps.empty()) fail("BadInput", "static policy needs at least one tcp");
      return static_trigger(policy, human_history.back(), tcps);
    case PolicyConfig::Kind::dynamic_cylinder:
    case PolicyConfig::Kind::dynamic_learned:
      if (human_history.size() < 2 || !(dt > 0.0))
        fail("BadInput", "dynamic policies need at least two history samples");
      if (policy.kind == PolicyConfig::Kind::dynamic_learned && memory == nullptr)
        fail("BadInput", "dynamic_learned policy needs a behavior memory");
      return dynamic_trigger(policy, human_history, dt, handover_center, memory);
  }
  fail("BadInput", "invalid policy kind");
}

QpResult qp_cbf_step(const Eigen::VectorXd& qdot_ref,
                     const Eigen::Matrix<double, 3, Eigen::Dynamic>& jac,
                     const Eigen::Vector3d& n_hat, double h, double alpha) {
  if (jac.cols() != qdot_ref.size()) fail("BadInput", "jacobian / velocity size mismatch");
  if (!qdot_ref.allFinite() || !jac.allFinite() || !n_hat.allFinite() || !std::isfinite(h))
    fail("BadInput", "non-finite qp inputs");
  const Eigen::VectorXd g = jac.transpose() * n_hat;
  const double lhs = g.dot(qdot_ref);
  const double rhs = -alpha * h;
  QpResult out;
  if (lhs >= rhs) {
    out.qdot = qdot_ref;
    return out;
  }
  out.constrained = true;
  const double g2 = g.squaredNorm();
  if (g2 < 1e-18) {
    out.qdot = Eigen::VectorXd::Zero(qdot_ref.size());
    out.feasible = false;
    return out;
  }
  out.qdot = qdot_ref + ((rhs - lhs) / g2) * g;
  return out;
}

}  // namespace omnikit::safety

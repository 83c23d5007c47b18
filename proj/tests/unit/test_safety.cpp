#include "omnikit/safety.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "omnikit/error.hpp"
#include "omnikit/handover.hpp"
#include "omnikit/tracking.hpp"

using namespace omnikit;
using namespace omnikit::safety;

namespace {

template <typename Fn>
std::string thrown_name(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.name();
  } catch (...) {
    return "<other>";
  }
  return "<none>";
}

SkeletonFrame frame_all_at(const Eigen::Vector3d& p, double t = 0.0) {
  SkeletonFrame f;
  f.t = t;
  f.joints.fill(p);
  f.valid.fill(true);
  return f;
}

bool metrics_equal(const SimMetrics& a, const SimMetrics& b) {
  return a.avg_cycle_s == b.avg_cycle_s && a.human_hits == b.human_hits &&
         a.triggers == b.triggers && a.fallback_s == b.fallback_s &&
         a.cycles_completed == b.cycles_completed && a.elapsed_s == b.elapsed_s;
}

bool events_equal(const std::vector<SimEvent>& a, const std::vector<SimEvent>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].t != b[i].t || a[i].kind != b[i].kind || a[i].value != b[i].value) return false;
  return true;
}

SkeletonRecording parked_recording(const Eigen::Vector3d& where, double duration_s) {
  std::vector<Eigen::Vector3d> centers;
  const double fps = 30.0;
  const int n = static_cast<int>(duration_s * fps) + 1;
  centers.assign(static_cast<std::size_t>(n), where);
  return recording_from_centers(centers, fps);
}

}  // namespace

TEST_SUITE("safety geometry") {
  TEST_CASE("human center averages valid body joints") {
    const Eigen::Vector3d p(0.4, -1.2, 0.9);
    CHECK((human_center(frame_all_at(p)) - p).norm() < 1e-12);

    SkeletonFrame two;
    two.valid.fill(false);
    two.joints[0] = Eigen::Vector3d(0, 0, 0);
    two.joints[1] = Eigen::Vector3d(2, 0, 0);
    two.valid[0] = two.valid[1] = true;
    CHECK(human_center(two) == Eigen::Vector3d(1, 0, 0));

    SkeletonFrame hand = frame_all_at(p);
    hand.joints[30] = Eigen::Vector3d(100, 100, 100);
    CHECK((human_center(hand) - p).norm() < 1e-12);

    SkeletonFrame legs = frame_all_at(p);
    legs.joints[22] = Eigen::Vector3d(50, 0, 0);
    CHECK((human_center(legs) - p).norm() > 1.0);

    SkeletonFrame none;
    none.valid.fill(false);
    CHECK(thrown_name([&] { human_center(none); }) == "NoValidJoints");
  }

  TEST_CASE("sphere cylinder distance worked values") {
    HumanCylinder h;
    h.center = Eigen::Vector3d(0, 0, 0.9);
    TcpSphere s;

    s.center = Eigen::Vector3d(1.0, 0, 0.9);
    CHECK(sphere_cylinder_distance(s, h) == doctest::Approx(0.62).epsilon(1e-12));

    s.center = h.center;
    CHECK(sphere_cylinder_distance(s, h) == doctest::Approx(-0.38).epsilon(1e-12));

    s.center = Eigen::Vector3d(0, 0, h.center.z() + 0.9 + 0.5);
    CHECK(sphere_cylinder_distance(s, h) == doctest::Approx(0.42).epsilon(1e-12));
  }

  TEST_CASE("sphere cylinder distance is translation invariant") {
    HumanCylinder h;
    h.center = Eigen::Vector3d(0.3, -0.4, 1.1);
    TcpSphere s;
    s.center = Eigen::Vector3d(1.0, 0.2, 0.6);
    const double d0 = sphere_cylinder_distance(s, h);
    const Eigen::Vector3d shift(2.5, -7.0, 0.4);
    h.center += shift;
    s.center += shift;
    CHECK(sphere_cylinder_distance(s, h) == doctest::Approx(d0).epsilon(1e-12));
  }

  TEST_CASE("outward normal picks the binding face") {
    HumanCylinder h;
    h.center = Eigen::Vector3d(0, 0, 0.9);
    const Eigen::Vector3d side = cylinder_outward_normal(Eigen::Vector3d(1, 0, 0.9), h);
    CHECK((side - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
    const Eigen::Vector3d top = cylinder_outward_normal(Eigen::Vector3d(0, 0, 2.5), h);
    CHECK((top - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
    const Eigen::Vector3d bottom = cylinder_outward_normal(Eigen::Vector3d(0, 0, -1.0), h);
    CHECK((bottom - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
  }

  TEST_CASE("interpolation is exact at recorded frames") {
    SkeletonRecording rec;
    rec.frames.push_back(frame_all_at(Eigen::Vector3d(0, 0, 0), 0.0));
    rec.frames.push_back(frame_all_at(Eigen::Vector3d(1, 2, 3), 0.5));
    rec.frames.push_back(frame_all_at(Eigen::Vector3d(-1, 0, 1), 1.25));
    rec.frames[1].valid[7] = false;

    for (const SkeletonFrame& f : rec.frames) {
      const SkeletonFrame got = interpolate_recording(rec, f.t);
      CHECK(got.t == f.t);
      for (int j = 0; j < track::kNumJoints; ++j) {
        CHECK(got.valid[j] == f.valid[j]);
        if (f.valid[j]) CHECK(got.joints[j] == f.joints[j]);
      }
    }

    const SkeletonFrame mid = interpolate_recording(rec, 0.25);
    CHECK((mid.joints[0] - Eigen::Vector3d(0.5, 1.0, 1.5)).norm() < 1e-12);
    CHECK_FALSE(mid.valid[7]);  // invalid in one neighbour
    CHECK(mid.valid[8]);

    CHECK(interpolate_recording(rec, -5.0).joints[0] == rec.frames.front().joints[0]);
    CHECK(interpolate_recording(rec, 9.0).joints[0] == rec.frames.back().joints[0]);
  }
}

TEST_SUITE("safety behavior memory") {
  TEST_CASE("bearing bins cover 30 degree sectors") {
    CHECK(bearing_bin(Eigen::Vector2d(1, 0)) == 0);
    CHECK(bearing_bin(Eigen::Vector2d(std::cos(15.0 * M_PI / 180), std::sin(15.0 * M_PI / 180))) == 0);
    CHECK(bearing_bin(Eigen::Vector2d(std::cos(31.0 * M_PI / 180), std::sin(31.0 * M_PI / 180))) == 1);
    CHECK(bearing_bin(Eigen::Vector2d(0, 1)) == 3);
    CHECK(bearing_bin(Eigen::Vector2d(-1, 0)) == 6);
    CHECK(bearing_bin(Eigen::Vector2d(0, -1)) == 9);
    CHECK(bearing_bin(Eigen::Vector2d(std::cos(-1.0 * M_PI / 180), std::sin(-1.0 * M_PI / 180))) == 11);
  }

  TEST_CASE("episode lifecycle credits entry bin and neighbours") {
    BehaviorMemory mem;
    const Eigen::Vector3d center(0, 0, 0.85);
    const double deg = M_PI / 180.0;
    auto at_bearing = [&](double bearing_rad, double dist) -> Eigen::Vector3d {
      return center + dist * Eigen::Vector3d(std::cos(bearing_rad), std::sin(bearing_rad), 0);
    };

    // intrusion episode entering at 15 degrees
    update_behavior_memory(mem, at_bearing(15 * deg, 2.5), center, 5.0, 0.0);
    CHECK_FALSE(mem.inside);
    update_behavior_memory(mem, at_bearing(15 * deg, 1.9), center, 0.8, 0.1);
    CHECK(mem.inside);
    update_behavior_memory(mem, at_bearing(15 * deg, 1.0), center, 0.25, 0.2);
    update_behavior_memory(mem, at_bearing(15 * deg, 2.1), center, 5.0, 0.3);
    CHECK(mem.inside);  // 2.1 < 2.4, hysteresis holds the episode open
    update_behavior_memory(mem, at_bearing(15 * deg, 2.5), center, 5.0, 0.4);
    CHECK_FALSE(mem.inside);
    CHECK(mem.total_episodes == 1);
    CHECK(mem.bins[0].n_intr == 1.0);
    CHECK(mem.bins[1].n_intr == 1.0);
    CHECK(mem.bins[11].n_intr == 1.0);
    CHECK(mem.bins[2].mass() == 0.0);

    // passthrough episode at the same bearing
    update_behavior_memory(mem, at_bearing(15 * deg, 1.9), center, 0.8, 1.0);
    update_behavior_memory(mem, at_bearing(15 * deg, 2.5), center, 0.5, 1.1);
    CHECK(mem.total_episodes == 2);
    CHECK(mem.bins[0].n_pass == 1.0);
    CHECK(mem.bins[0].intrusion_ratio() == doctest::Approx(0.5));

    // timeout closes an episode that never leaves
    update_behavior_memory(mem, at_bearing(15 * deg, 1.0), center, 0.1, 10.0);
    CHECK(mem.inside);
    update_behavior_memory(mem, at_bearing(15 * deg, 1.0), center, 0.1, 40.0);
    CHECK_FALSE(mem.inside);
    CHECK(mem.total_episodes == 3);
    CHECK(mem.bins[0].n_intr == 2.0);
  }

  TEST_CASE("counts decay every twentieth episode") {
    BehaviorMemory mem;
    const Eigen::Vector3d center(0, 0, 0.85);
    const Eigen::Vector3d in = center + Eigen::Vector3d(1.0, 0, 0);
    const Eigen::Vector3d out = center + Eigen::Vector3d(3.0, 0, 0);
    double t = 0;
    for (int e = 0; e < 19; ++e) {
      update_behavior_memory(mem, in, center, 5.0, t += 1);
      update_behavior_memory(mem, out, center, 5.0, t += 1);
    }
    CHECK(mem.total_episodes == 19);
    CHECK(mem.bins[0].n_pass == doctest::Approx(19.0));
    update_behavior_memory(mem, in, center, 5.0, t += 1);
    update_behavior_memory(mem, out, center, 5.0, t += 1);
    CHECK(mem.total_episodes == 20);
    CHECK(mem.bins[0].n_pass == doctest::Approx(20.0 * 0.95));
  }

  TEST_CASE("modulated radius boosts only active bins after warmup") {
    BehaviorMemory mem;
    const double base = 0.6;
    CHECK(modulated_radius(mem, 0.0, base) == base);  // warmup

    mem.total_episodes = 3;
    CHECK(modulated_radius(mem, 0.0, base) == base);  // empty bin

    mem.bins[0] = {2.0, 0.0};
    CHECK(modulated_radius(mem, 0.1, base) == doctest::Approx(1.8 * base));
    CHECK(modulated_radius(mem, 0.1, base) <= 1.8 * base + 1e-15);

    mem.bins[0] = {0.0, 2.0};
    CHECK(modulated_radius(mem, 0.1, base) == base);  // pure passthrough history

    mem.bins[0] = {1.0, 1.0};
    CHECK(modulated_radius(mem, 0.1, base) == doctest::Approx(base * 1.4));

    mem.bins[0] = {1.5, 0.0};  // mass below the activity floor
    CHECK(modulated_radius(mem, 0.1, base) == base);

    // other bearings untouched
    mem.bins[0] = {5.0, 0.0};
    CHECK(modulated_radius(mem, M_PI, base) == base);
  }

  TEST_CASE("modulated radius never shrinks and respects the cap") {
    BehaviorMemory mem;
    mem.total_episodes = 50;
    for (int i = 0; i < 12; ++i) mem.bins[i] = {static_cast<double>(i), 12.0 - i};
    for (int i = 0; i < 360; i += 5) {
      const double r = modulated_radius(mem, i * M_PI / 180.0, 0.45);
      CHECK(r >= 0.45);
      CHECK(r <= 1.8 * 0.45 + 1e-12);
    }
  }
}

TEST_SUITE("safety velocity estimate") {
  TEST_CASE("constant velocity returns the exact speed") {
    std::vector<Eigen::Vector2d> xy;
    for (int i = 0; i < 10; ++i) xy.emplace_back(0.1 * i, -0.05 * i);
    CHECK(effective_velocity(xy, 0.1) == doctest::Approx(std::hypot(1.0, -0.5)).epsilon(1e-12));
  }

  TEST_CASE("deceleration falls back to the smoothed speed") {
    std::vector<Eigen::Vector2d> xy{{0, 0}};
    for (int i = 0; i < 9; ++i) {
      const double v = 1.0 - 0.08 * i;
      xy.emplace_back(xy.back().x() + v * 0.1, 0.0);
    }
    CHECK(effective_velocity(xy, 0.1) == doctest::Approx(0.6898042953156249).epsilon(1e-12));
  }

  TEST_CASE("acceleration raises the estimate above the smoothed speed") {
    std::vector<Eigen::Vector2d> xy{{0, 0}};
    for (int i = 0; i < 9; ++i) {
      const double v = 0.5 + 0.1 * i;
      xy.emplace_back(xy.back().x() + v * 0.1, 0.0);
    }
    const double got = effective_velocity(xy, 0.1);
    CHECK(got == doctest::Approx(1.1377446308554688).epsilon(1e-12));
    CHECK(got > 1.0);  // beats every raw sample speed
  }

  TEST_CASE("curved approach golden value") {
    std::vector<Eigen::Vector2d> xy;
    const double dt = 1.0 / 30.0;
    for (int i = 0; i < 13; ++i)
      xy.emplace_back((2.0 - 0.1 * i) * std::cos(0.15 * i), (2.0 - 0.1 * i) * std::sin(0.15 * i));
    CHECK(effective_velocity(xy, dt) == doctest::Approx(5.108754990489212).epsilon(1e-12));
  }

  TEST_CASE("input validation") {
    std::vector<Eigen::Vector2d> one{{0, 0}};
    CHECK(thrown_name([&] { effective_velocity(one, 0.1); }) == "BadInput");
    std::vector<Eigen::Vector2d> two{{0, 0}, {1, 0}};
    CHECK(thrown_name([&] { effective_velocity(two, 0.0); }) == "BadInput");
    CHECK(thrown_name([&] { effective_velocity(two, 0.1, 0.5, 0.0); }) == "BadInput");
    CHECK(thrown_name([&] { effective_velocity(two, 0.1, -1.0); }) == "BadInput");
  }
}

TEST_SUITE("safety trigger policies") {
  TEST_CASE("non aware never triggers") {
    PolicyConfig p;
    const std::vector<Eigen::Vector3d> hist{Eigen::Vector3d(0.01, 0, 0.85)};
    const std::vector<Eigen::Vector3d> tcps{Eigen::Vector3d::Zero()};
    CHECK_FALSE(policy_trigger(p, hist, 0.02, tcps, Eigen::Vector3d::Zero()).trigger);
  }

  TEST_CASE("static trigger checks radius and height band") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::static_cylinder;
    p.radius = 0.5;
    p.height = 2.0;
    const std::vector<Eigen::Vector3d> tcps{Eigen::Vector3d(0, 0, 0.8)};
    auto probe = [&](double dxy, double dz) {
      const std::vector<Eigen::Vector3d> hist{Eigen::Vector3d(dxy, 0, 0.8 + dz)};
      return policy_trigger(p, hist, 0.02, tcps, Eigen::Vector3d::Zero()).trigger;
    };
    CHECK(probe(0.4, 0.5));
    CHECK_FALSE(probe(0.6, 0.0));
    CHECK_FALSE(probe(0.4, 1.2));  // above the cylinder band
    CHECK(probe(0.49, -0.99));
  }

  TEST_CASE("dynamic trigger for a stationary human matches the clamp") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::dynamic_cylinder;
    const Eigen::Vector3d center(0, 0, 0.85);
    auto probe = [&](double dist) {
      const Eigen::Vector3d h = center + Eigen::Vector3d(dist, 0, 0);
      const std::vector<Eigen::Vector3d> hist{h, h};
      return policy_trigger(p, hist, 0.02, {}, center);
    };
    CHECK(probe(0.55).trigger);
    CHECK_FALSE(probe(0.65).trigger);
    CHECK(probe(0.55).region.radius == doctest::Approx(0.6));
    CHECK((probe(0.55).region.center - center).norm() < 1e-12);  // no growth, no shift
  }

  TEST_CASE("approach grows the region with the far edge fixed") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::dynamic_cylinder;
    p.r_max = 1.2;
    const Eigen::Vector3d center(0.2, -0.1, 0.85);
    const double dt = 0.02;
    const Eigen::Vector3d h1 = center + Eigen::Vector3d(1.5, 0.4, 0);
    const Eigen::Vector3d step(-0.02, 0, 0);  // 1 m/s, mostly radial
    const Eigen::Vector3d h2 = h1 + step;
    const std::vector<Eigen::Vector3d> hist{h1, h2};
    const TriggerDecision d = policy_trigger(p, hist, dt, {}, center);

    const Eigen::Vector2d dir = (h2.head<2>() - center.head<2>()).normalized();
    const double v_app = -(step.head<2>() / dt).dot(dir);
    const double expect_r = std::clamp(0.6 + 0.6 * v_app, 0.3, 1.2);
    CHECK(d.region.radius == doctest::Approx(expect_r).epsilon(1e-12));
    CHECK(expect_r > 0.6);

    // far edge: center' - R dir == center - r_base dir
    const Eigen::Vector2d far_edge = d.region.center.head<2>() - d.region.radius * dir;
    const Eigen::Vector2d expect_edge = center.head<2>() - 0.6 * dir;
    CHECK((far_edge - expect_edge).norm() < 1e-12);
  }

  TEST_CASE("retreat shrinks the region toward the floor radius") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::dynamic_cylinder;
    const Eigen::Vector3d center(0, 0, 0.85);
    const Eigen::Vector3d h1 = center + Eigen::Vector3d(1.0, 0, 0);
    const Eigen::Vector3d h2 = h1 + Eigen::Vector3d(0.04, 0, 0);  // leaving at 2 m/s
    const std::vector<Eigen::Vector3d> hist{h1, h2};
    const TriggerDecision d = policy_trigger(p, hist, 0.02, {}, center);
    CHECK(d.region.radius == doctest::Approx(0.3));
    CHECK((d.region.center - center).norm() < 1e-12);  // shrink never shifts
  }

  TEST_CASE("learned modulation widens a hot bearing after warmup") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::dynamic_learned;
    const Eigen::Vector3d center(0, 0, 0.85);
    BehaviorMemory mem;
    mem.total_episodes = 3;
    mem.bins[0] = {4.0, 0.0};

    const Eigen::Vector3d h = center + Eigen::Vector3d(0.9, 0.05, 0);
    const std::vector<Eigen::Vector3d> hist{h, h};
    const TriggerDecision hot = policy_trigger(p, hist, 0.02, {}, center, &mem);
    CHECK(hot.region.radius == doctest::Approx(1.8 * 0.6));
    CHECK(hot.trigger);  // 0.9 < boosted radius reach

    BehaviorMemory cold;
    cold.total_episodes = 3;
    const TriggerDecision plain = policy_trigger(p, hist, 0.02, {}, center, &cold);
    CHECK(plain.region.radius == doctest::Approx(0.6));
    CHECK_FALSE(plain.trigger);
  }

  TEST_CASE("pre warmup learned matches plain dynamic bitwise") {
    PolicyConfig learned;
    learned.kind = PolicyConfig::Kind::dynamic_learned;
    PolicyConfig plain;
    plain.kind = PolicyConfig::Kind::dynamic_cylinder;
    BehaviorMemory mem;  // zero episodes
    const Eigen::Vector3d center(0.1, 0.3, 0.85);
    std::vector<Eigen::Vector3d> hist;
    for (int i = 0; i < 6; ++i)
      hist.push_back(center + Eigen::Vector3d(1.4 - 0.017 * i, 0.2 + 0.003 * i, 0));
    const TriggerDecision a = policy_trigger(learned, hist, 0.02, {}, center, &mem);
    const TriggerDecision b = policy_trigger(plain, hist, 0.02, {}, center);
    CHECK(a.trigger == b.trigger);
    CHECK(a.region.radius == b.region.radius);
    CHECK(a.region.center == b.region.center);
  }

  TEST_CASE("input validation") {
    PolicyConfig dyn;
    dyn.kind = PolicyConfig::Kind::dynamic_cylinder;
    const Eigen::Vector3d c = Eigen::Vector3d::Zero();
    CHECK(thrown_name([&] { policy_trigger(dyn, {}, 0.02, {}, c); }) == "BadInput");
    CHECK(thrown_name([&] { policy_trigger(dyn, {c}, 0.02, {}, c); }) == "BadInput");

    PolicyConfig learned;
    learned.kind = PolicyConfig::Kind::dynamic_learned;
    CHECK(thrown_name([&] { policy_trigger(learned, {c, c}, 0.02, {}, c); }) == "BadInput");

    PolicyConfig stat;
    stat.kind = PolicyConfig::Kind::static_cylinder;
    CHECK(thrown_name([&] { policy_trigger(stat, {c}, 0.02, {}, c); }) == "BadInput");
  }

  TEST_CASE("policy kind strings round trip") {
    for (auto k : {PolicyConfig::Kind::non_aware, PolicyConfig::Kind::static_cylinder,
                   PolicyConfig::Kind::dynamic_cylinder, PolicyConfig::Kind::dynamic_learned})
      CHECK(policy_kind_from_string(policy_kind_to_string(k)) == k);
    CHECK(thrown_name([] { policy_kind_from_string("frozen"); }) == "SchemaError");
  }
}

TEST_SUITE("safety qp step") {
  TEST_CASE("inactive constraint returns the reference bitwise") {
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 2);
    jac << 1, 0, 0, 1, 0, 0;
    Eigen::VectorXd ref(2);
    ref << 0.37, -0.21;
    const QpResult r = qp_cbf_step(ref, jac, Eigen::Vector3d(1, 0, 0), 0.5);
    CHECK_FALSE(r.constrained);
    CHECK(r.feasible);
    CHECK(r.qdot == ref);
  }

  TEST_CASE("head on at zero clearance projects to zero approach speed") {
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 2);
    jac << 1, 0, 0, 1, 0, 0;
    Eigen::VectorXd ref(2);
    ref << -1.0, 0.0;  // straight at the obstacle
    const QpResult r = qp_cbf_step(ref, jac, Eigen::Vector3d(1, 0, 0), 0.0);
    CHECK(r.constrained);
    CHECK(r.feasible);
    const Eigen::Vector3d tcp_vel = jac * r.qdot;
    CHECK(tcp_vel.dot(Eigen::Vector3d(1, 0, 0)) == doctest::Approx(0.0).epsilon(1e-15));
    // minimum norm: correction parallel to J^T n
    const Eigen::VectorXd corr = r.qdot - ref;
    const Eigen::VectorXd g = jac.transpose() * Eigen::Vector3d(1, 0, 0);
    CHECK((corr - corr.dot(g.normalized()) * g.normalized()).norm() < 1e-14);
  }

  TEST_CASE("positive clearance allows the matching approach speed") {
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 2);
    jac << 1, 0, 0, 1, 0, 0;
    Eigen::VectorXd ref(2);
    ref << -1.0, 0.3;
    const QpResult r = qp_cbf_step(ref, jac, Eigen::Vector3d(1, 0, 0), 0.05, 2.0);
    CHECK(r.constrained);
    const Eigen::Vector3d tcp_vel = jac * r.qdot;
    CHECK(tcp_vel.x() == doctest::Approx(-0.1).epsilon(1e-12));  // approach capped at alpha h
    CHECK(r.qdot[1] == doctest::Approx(0.3));  // tangential motion untouched
  }

  TEST_CASE("vanishing projection while violated reports infeasible") {
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 2);
    jac << 1, 0, 0, 1, 0, 0;  // no z row
    Eigen::VectorXd ref(2);
    ref << 0.5, 0.5;
    const QpResult r = qp_cbf_step(ref, jac, Eigen::Vector3d(0, 0, 1), -0.01, 2.0);
    CHECK_FALSE(r.feasible);
    CHECK(r.qdot.isZero(0.0));
  }

  TEST_CASE("correction stays parallel to the projected normal on a real chain") {
    const handover::KinematicChain chain = handover::planar_two_link();
    Eigen::VectorXd q(2);
    q << 0.7, -0.4;
    const Eigen::MatrixXd full = handover::geometric_jacobian(chain, q);
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac = full.bottomRows(3);
    const Eigen::Vector3d n = Eigen::Vector3d(0.6, 0.8, 0).normalized();
    const Eigen::VectorXd ref = -0.5 * (jac.transpose() * n).normalized();
    const QpResult r = qp_cbf_step(ref, jac, n, -0.02, 2.0);
    REQUIRE(r.constrained);
    REQUIRE(r.feasible);
    CHECK((jac * r.qdot).dot(n) == doctest::Approx(2.0 * 0.02).epsilon(1e-10));
    const Eigen::VectorXd g = jac.transpose() * n;
    const Eigen::VectorXd corr = r.qdot - ref;
    const Eigen::VectorXd residual = corr - corr.dot(g) / g.squaredNorm() * g;
    CHECK(residual.norm() < 1e-12);
  }

  TEST_CASE("discrete barrier holds when retreat outruns the obstacle") {
    // point robot pushing at an approaching obstacle until the proximity
    // trigger flips it to retreat; the qp caps the approach in between
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 3);
    jac.setIdentity();
    const double dt = 0.02;
    const double trigger_dist = 0.07;
    Eigen::Vector3d tcp(0.5, 0, 0);
    Eigen::Vector3d obstacle(0, 0, 0);
    double min_h = 1e9;
    int constrained_steps = 0;
    bool retreating = false;
    for (int i = 0; i < 600; ++i) {
      const Eigen::Vector3d delta = tcp - obstacle;
      const double dist = delta.norm();
      const double h = dist - kCbfMargin;
      min_h = std::min(min_h, h);
      const Eigen::Vector3d n = delta.normalized();
      if (dist < trigger_dist) retreating = true;
      Eigen::VectorXd ref = retreating ? (1.8 * n).eval() : Eigen::Vector3d(-1.0, 0, 0).eval();
      Eigen::VectorXd qdot = ref;
      if (dist < kCbfInfluence) {
        const QpResult r = qp_cbf_step(ref, jac, n, h);
        qdot = r.qdot;
        if (r.constrained) ++constrained_steps;
      }
      tcp += qdot * dt;
      obstacle.x() += 0.4 * dt;  // approaching, but slower than the retreat
    }
    CHECK(min_h >= -1e-6);
    CHECK(constrained_steps > 0);
  }

  TEST_CASE("input validation") {
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 2);
    jac.setZero();
    Eigen::VectorXd ref(3);
    ref.setZero();
    CHECK(thrown_name([&] { qp_cbf_step(ref, jac, Eigen::Vector3d(1, 0, 0), 0.0); }) == "BadInput");
    Eigen::VectorXd ref2(2);
    ref2 << 0.1, std::numeric_limits<double>::quiet_NaN();
    CHECK(thrown_name([&] { qp_cbf_step(ref2, jac, Eigen::Vector3d(1, 0, 0), 0.0); }) == "BadInput");
  }
}

TEST_SUITE("safety simulation") {
  TEST_CASE("clean run completes cycles near the design cadence") {
    PolicyConfig p;  // non_aware
    SimScenario scn = make_benchmark_scenario(7, p);
    scn.recording = parked_recording(Eigen::Vector3d(6.0, 6.0, 0.9), scn.duration_cap_s + 5.0);
    const SimResult r = simulate(scn);
    CHECK(r.metrics.cycles_completed == scn.cycles);
    CHECK(r.metrics.human_hits == 0);
    CHECK(r.metrics.triggers == 0);
    CHECK(r.metrics.fallback_s == 0.0);
    CHECK(r.metrics.avg_cycle_s == doctest::Approx(15.0).epsilon(0.5 / 15.0));
  }

  TEST_CASE("parked human on the place approach separates the policies") {
    PolicyConfig non;
    SimScenario scn = make_benchmark_scenario(3, non);
    const Eigen::Vector3d blocking(-0.3, -0.05, 0.9);  // over the giver transit point
    scn.recording = parked_recording(blocking, scn.duration_cap_s + 5.0);
    const SimResult naive = simulate(scn);
    CHECK(naive.metrics.human_hits > 0);
    CHECK(naive.metrics.triggers == 0);
    CHECK(naive.metrics.fallback_s == 0.0);

    PolicyConfig wide;
    wide.kind = PolicyConfig::Kind::static_cylinder;
    wide.radius = 2.0;
    SimScenario scn_wide = scn;
    scn_wide.policy = wide;
    const SimResult safe = simulate(scn_wide);
    CHECK(safe.metrics.human_hits == 0);
    CHECK(safe.metrics.triggers >= 1);
    CHECK(safe.metrics.fallback_s > 0.0);
    CHECK(safe.metrics.avg_cycle_s > naive.metrics.avg_cycle_s);
  }

  TEST_CASE("fallback time implies at least one trigger") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      for (auto kind : {PolicyConfig::Kind::static_cylinder, PolicyConfig::Kind::dynamic_cylinder}) {
        PolicyConfig p;
        p.kind = kind;
        const SimResult r = simulate(make_benchmark_scenario(seed, p));
        if (r.metrics.fallback_s > 0) CHECK(r.metrics.triggers >= 1);
        CHECK(r.metrics.elapsed_s <= 200.0 + 1e-9);
      }
    }
  }

  TEST_CASE("simulation is deterministic") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::dynamic_cylinder;
    const SimScenario scn = make_benchmark_scenario(11, p);
    const SimResult a = simulate(scn);
    const SimResult b = simulate(scn);
    CHECK(metrics_equal(a.metrics, b.metrics));
    CHECK(events_equal(a.events, b.events));
  }

  TEST_CASE("policy ordering on one benchmark seed") {
    auto run = [&](PolicyConfig p, std::uint64_t seed) {
      return simulate(make_benchmark_scenario(seed, p)).metrics;
    };
    PolicyConfig non;
    PolicyConfig tight;
    tight.kind = PolicyConfig::Kind::static_cylinder;
    tight.radius = 0.5;
    PolicyConfig wide;
    wide.kind = PolicyConfig::Kind::static_cylinder;
    wide.radius = 2.0;

    const SimMetrics m_non = run(non, 1);
    const SimMetrics m_tight = run(tight, 1);
    const SimMetrics m_wide = run(wide, 1);
    CHECK(m_non.human_hits > 0);
    CHECK(m_tight.human_hits == 0);
    CHECK(m_wide.human_hits == 0);
    CHECK(m_non.human_hits >= m_tight.human_hits);
    CHECK(m_tight.human_hits >= m_wide.human_hits);
    CHECK(m_non.avg_cycle_s <= m_tight.avg_cycle_s);
    CHECK(m_tight.avg_cycle_s <= m_wide.avg_cycle_s);
    CHECK(m_non.triggers == 0);
    CHECK(m_non.fallback_s == 0.0);
  }

  TEST_CASE("freeze sweep endpoints match plain and full learning bitwise") {
    PolicyConfig learned;
    learned.kind = PolicyConfig::Kind::dynamic_learned;
    SimScenario scn = make_adversarial_scenario(5, learned);
    scn.cycles = 2;
    scn.duration_cap_s = 60.0;

    SimScenario plain_scn = scn;
    plain_scn.policy.kind = PolicyConfig::Kind::dynamic_cylinder;

    const SimResult frozen = simulate(scn, 0.0);
    const SimResult plain = simulate(plain_scn);
    CHECK(metrics_equal(frozen.metrics, plain.metrics));
    CHECK(events_equal(frozen.events, plain.events));

    const SimResult full = simulate(scn, 1.0);
    const SimResult unfrozen = simulate(scn);
    CHECK(metrics_equal(full.metrics, unfrozen.metrics));
    CHECK(events_equal(full.events, unfrozen.events));

    const auto sweep = memory_freeze_sweep(scn, {0.0, 1.0});
    CHECK(metrics_equal(sweep.front().metrics, plain.metrics));
    CHECK(metrics_equal(sweep.back().metrics, unfrozen.metrics));
  }

  TEST_CASE("freeze sweep validates inputs") {
    PolicyConfig plain;
    plain.kind = PolicyConfig::Kind::dynamic_cylinder;
    const SimScenario scn = make_benchmark_scenario(1, plain);
    CHECK(thrown_name([&] { memory_freeze_sweep(scn, {0.0}); }) == "BadInput");

    PolicyConfig learned;
    learned.kind = PolicyConfig::Kind::dynamic_learned;
    const SimScenario scn2 = make_adversarial_scenario(1, learned);
    CHECK(thrown_name([&] { memory_freeze_sweep(scn2, {-0.1}); }) == "BadInput");
    CHECK(thrown_name([&] { memory_freeze_sweep(scn2, {1.5}); }) == "BadInput");
  }
}

TEST_SUITE("safety recording io") {
  TEST_CASE("jsonl and csv round trips preserve frames") {
    std::vector<Eigen::Vector3d> centers;
    for (int i = 0; i < 7; ++i) centers.emplace_back(0.1 * i, 2.0 - 0.05 * i, 0.9);
    const SkeletonRecording rec = recording_from_centers(centers, 30.0);
    REQUIRE(rec.frames.size() == 7);

    for (const char* name : {"rt_rec.jsonl", "rt_rec.csv"}) {
      const std::string path = (std::filesystem::temp_directory_path() / name).string();
      save_recording(rec, path);
      const SkeletonRecording back = load_recording(path);
      REQUIRE(back.frames.size() == rec.frames.size());
      for (std::size_t i = 0; i < rec.frames.size(); ++i) {
        CHECK(back.frames[i].t == rec.frames[i].t);
        for (int j = 0; j < track::kNumJoints; ++j) {
          CHECK(back.frames[i].valid[j] == rec.frames[i].valid[j]);
          CHECK(back.frames[i].joints[j] == rec.frames[i].joints[j]);
        }
      }
      std::remove(path.c_str());
    }
  }

  TEST_CASE("generated frames average back to the requested centers") {
    std::vector<Eigen::Vector3d> centers{{0.5, 1.5, 0.9}, {0.45, 1.48, 0.9}};
    const SkeletonRecording rec = recording_from_centers(centers, 30.0);
    for (std::size_t i = 0; i < centers.size(); ++i)
      CHECK((human_center(rec.frames[i]) - centers[i]).norm() < 1e-12);
    CHECK(rec.frames[1].t == doctest::Approx(1.0 / 30.0));
  }

  TEST_CASE("scenario json round trip preserves the configuration") {
    PolicyConfig p;
    p.kind = PolicyConfig::Kind::dynamic_learned;
    SimScenario scn = make_adversarial_scenario(9, p);
    scn.cycles = 3;
    const auto dir = std::filesystem::temp_directory_path() / "omnikit_scn_rt";
    std::filesystem::create_directories(dir);
    const std::string spath = (dir / "scenario.json").string();
    save_scenario(scn, spath, (dir / "skeleton.jsonl").string());
    const SimScenario back = load_scenario(spath);
    CHECK(back.policy.kind == scn.policy.kind);
    CHECK(back.cycles == scn.cycles);
    CHECK(back.seed == scn.seed);
    CHECK(back.time_offset_s == scn.time_offset_s);
    CHECK(back.exchange_dwell_s == scn.exchange_dwell_s);
    CHECK(back.recording.frames.size() == scn.recording.frames.size());
    CHECK(back.giver.waypoints.size() == scn.giver.waypoints.size());
    CHECK(back.receiver.retreat_speed == scn.receiver.retreat_speed);
    CHECK((back.handover_center - scn.handover_center).norm() == 0.0);
    // identical replays
    const SimResult a = simulate(scn);
    const SimResult b = simulate(back);
    CHECK(metrics_equal(a.metrics, b.metrics));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("malformed recordings are rejected") {
    const auto tmp = std::filesystem::temp_directory_path();
    const std::string bad1 = (tmp / "bad_rec1.csv").string();
    {
      FILE* f = std::fopen(bad1.c_str(), "w");
      std::fputs("t,junk\n1.0,2.0\n", f);
      std::fclose(f);
    }
    CHECK(thrown_name([&] { load_recording(bad1); }) == "BadRecording");
    std::remove(bad1.c_str());

    const std::string bad2 = (tmp / "bad_rec2.jsonl").string();
    {
      FILE* f = std::fopen(bad2.c_str(), "w");
      std::fputs("{not json\n", f);
      std::fclose(f);
    }
    CHECK(thrown_name([&] { load_recording(bad2); }) == "BadRecording");
    std::remove(bad2.c_str());
  }
}

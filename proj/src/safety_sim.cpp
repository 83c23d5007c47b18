#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "omnikit/error.hpp"
#include "omnikit/io_util.hpp"
#include "omnikit/parallel.hpp"
#include "omnikit/rng.hpp"
#include "omnikit/safety.hpp"

namespace omnikit::safety {

using nlohmann::json;

namespace {

constexpr double kCheckDt = kSimDt * kCheckEvery;
constexpr std::size_t kHistoryWindow = 50;  // one second of check samples

struct ArmRt {
  const ArmScript* script = nullptr;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  std::size_t wp = 0;
  double dwell_left = 0;
  bool arrived = false;    // reached current target at least once
  bool returning = false;  // rejoining the route after a fallback, at retreat speed
};

bool at_point(const Eigen::Vector3d& pos, const Eigen::Vector3d& target) {
  return (pos - target).squaredNorm() <= 1e-18;
}

void move_toward(Eigen::Vector3d& pos, const Eigen::Vector3d& target, double speed, double dt) {
  const Eigen::Vector3d delta = target - pos;
  const double dist = delta.norm();
  const double step = speed * dt;
  if (dist <= step) {
    pos = target;
  } else {
    pos += delta * (step / dist);
  }
}

void advance_waypoint(ArmRt& arm) {
  arm.wp = (arm.wp + 1) % arm.script->waypoints.size();
  arm.dwell_left = 0;
  arm.arrived = false;
}

void check_script(const ArmScript& script, const char* which) {
  if (script.waypoints.empty()) fail("SchemaError", std::string(which) + " arm has no waypoints");
  int exchanges = 0;
  for (const Waypoint& w : script.waypoints) {
    if (!(w.speed > 0.0)) fail("SchemaError", "waypoint speed must be positive");
    if (w.dwell_s < 0.0) fail("SchemaError", "waypoint dwell must be non-negative");
    if (w.tag == WaypointTag::exchange) ++exchanges;
  }
  if (exchanges != 1)
    fail("SchemaError", std::string(which) + " arm needs exactly one exchange waypoint");
  if (!(script.retreat_speed > 0.0)) fail("SchemaError", "retreat speed must be positive");
}

}  // namespace

SimResult simulate(const SimScenario& scenario) { return simulate(scenario, std::nullopt); }

SimResult simulate(const SimScenario& scenario, std::optional<double> freeze_fraction) {
  if (scenario.recording.frames.empty()) fail("BadRecording", "scenario has no skeleton frames");
  if (scenario.cycles < 1) fail("SchemaError", "cycles must be positive");
  if (!(scenario.duration_cap_s > 0.0)) fail("SchemaError", "duration cap must be positive");
  if (!(scenario.exchange_dwell_s >= 0.0)) fail("SchemaError", "exchange dwell must be non-negative");
  check_script(scenario.giver, "giver");
  check_script(scenario.receiver, "receiver");

  const bool learned = scenario.policy.kind == PolicyConfig::Kind::dynamic_learned;
  const bool dynamic_kind = learned || scenario.policy.kind == PolicyConfig::Kind::dynamic_cylinder;
  const double freeze_t = freeze_fraction
                              ? *freeze_fraction * scenario.recording.duration()
                              : std::numeric_limits<double>::infinity();

  ArmRt arms[2];
  arms[0].script = &scenario.giver;
  arms[0].pos = scenario.giver.start;
  arms[1].script = &scenario.receiver;
  arms[1].pos = scenario.receiver.start;

  BehaviorMemory memory;
  std::deque<Eigen::Vector3d> history;
  SimResult result;
  bool fallback = false;
  double clear_timer = 0;
  bool exchanging = false;
  double exchange_left = 0;
  int deliveries = 0;
  double elapsed = scenario.duration_cap_s;
  const long max_steps = static_cast<long>(std::ceil(scenario.duration_cap_s / kSimDt));

  for (long step = 0; step < max_steps; ++step) {
    const double t = static_cast<double>(step) * kSimDt;

    if (step % kCheckEvery == 0) {
      const SkeletonFrame frame =
          interpolate_recording(scenario.recording, t + scenario.time_offset_s);
      const Eigen::Vector3d human = human_center(frame);
      history.push_back(human);
      if (history.size() > kHistoryWindow) history.pop_front();

      double min_tcp_dist = std::numeric_limits<double>::infinity();
      for (const ArmRt& arm : arms) {
        const double d = sphere_cylinder_distance({arm.pos, 0.08}, {human, 0.3, 1.8});
        min_tcp_dist = std::min(min_tcp_dist, (human - arm.pos).norm());
        if (d < 0.0) {
          ++result.metrics.human_hits;
          result.events.push_back({t, "hit", d});
        }
      }

      if (learned && t <= freeze_t)
        update_behavior_memory(memory, human, scenario.handover_center, min_tcp_dist, t,
                               scenario.policy.memory);

      if (!exchanging && (!dynamic_kind || history.size() >= 2)) {
        const std::vector<Eigen::Vector3d> hist(history.begin(), history.end());
        const TriggerDecision decision =
            policy_trigger(scenario.policy, hist, kCheckDt, {arms[0].pos, arms[1].pos},
                           scenario.handover_center, learned ? &memory : nullptr);
        if (!fallback && decision.trigger) {
          fallback = true;
          clear_timer = 0;
          ++result.metrics.triggers;
          result.events.push_back({t, "trigger_on", decision.region.radius});
        } else if (fallback) {
          if (decision.trigger) {
            clear_timer = 0;
          } else {
            clear_timer += kCheckDt;
            if (clear_timer >= kResumeDebounce) {
              fallback = false;
              for (ArmRt& arm : arms) arm.returning = true;
              result.events.push_back({t, "trigger_off", 0.0});
            }
          }
        }
      }
    }

    if (fallback) {
      result.metrics.fallback_s += kSimDt;
      for (ArmRt& arm : arms)
        move_toward(arm.pos, arm.script->fallback, arm.script->retreat_speed, kSimDt);
    } else if (exchanging) {
      exchange_left -= kSimDt;
      if (exchange_left <= 0.0) {
        exchanging = false;
        result.events.push_back({t, "exchange_end", 0.0});
        for (ArmRt& arm : arms) advance_waypoint(arm);
      }
    } else {
      for (int i = 0; i < 2; ++i) {
        ArmRt& arm = arms[i];
        const Waypoint& w = arm.script->waypoints[arm.wp];
        if (!at_point(arm.pos, w.target)) {
          const double speed = arm.returning ? arm.script->retreat_speed : w.speed;
          move_toward(arm.pos, w.target, speed, kSimDt);
          if (at_point(arm.pos, w.target)) {
            arm.returning = false;
            if (!arm.arrived) {
              arm.arrived = true;
              arm.dwell_left = w.dwell_s;
            }
          }
          continue;
        }
        arm.returning = false;
        if (!arm.arrived) {
          arm.arrived = true;
          arm.dwell_left = w.dwell_s;
        }
        if (w.tag == WaypointTag::exchange) continue;  // hold for the rendezvous
        if (arm.dwell_left > 0.0) {
          arm.dwell_left -= kSimDt;
          if (arm.dwell_left > 0.0) continue;
        }
        if (w.tag == WaypointTag::place && i == 1) {
          ++deliveries;
          result.events.push_back({t, "cycle", static_cast<double>(deliveries)});
        }
        advance_waypoint(arm);
      }
      const auto ready = [&](const ArmRt& arm) {
        return arm.script->waypoints[arm.wp].tag == WaypointTag::exchange &&
               at_point(arm.pos, arm.script->waypoints[arm.wp].target);
      };
      if (ready(arms[0]) && ready(arms[1])) {
        exchanging = true;
        exchange_left = scenario.exchange_dwell_s;
        result.events.push_back({t, "exchange_start", 0.0});
      }
    }

    if (deliveries >= scenario.cycles) {
      elapsed = static_cast<double>(step + 1) * kSimDt;
      break;
    }
  }

  result.metrics.cycles_completed = deliveries;
  result.metrics.elapsed_s = elapsed;
  result.metrics.avg_cycle_s = elapsed / std::max(1, deliveries);
  return result;
}

std::vector<FreezePoint> memory_freeze_sweep(const SimScenario& scenario,
                                             const std::vector<double>& fractions) {
  if (scenario.policy.kind != PolicyConfig::Kind::dynamic_learned)
    fail("BadInput", "freeze sweep needs a dynamic_learned policy");
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) fail("BadInput", "freeze fractions must lie in [0, 1]");
  std::vector<FreezePoint> out(fractions.size());
  parallel_ranges(static_cast<int>(fractions.size()), 1, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const std::size_t idx = static_cast<std::size_t>(i);
      out[idx] = {fractions[idx], simulate(scenario, fractions[idx]).metrics};
    }
  });
  return out;
}

SkeletonRecording recording_from_centers(const std::vector<Eigen::Vector3d>& centers, double fps) {
  if (centers.empty()) fail("BadInput", "no centers");
  if (!(fps > 0.0)) fail("BadInput", "fps must be positive");
  // symmetric offsets keep the body-joint mean on the center
  std::array<Eigen::Vector3d, track::kNumJoints> offsets = zero_joints();
  for (int j = 0; j < kBodyJointEnd - 1; j += 2) {
    const double phase = 0.7 * j;
    const Eigen::Vector3d o(0.18 * std::cos(phase), 0.18 * std::sin(phase),
                            0.35 * std::sin(0.31 * j + 0.4));
    offsets[j] = o;
    offsets[j + 1] = -o;
  }
  SkeletonRecording rec;
  rec.frames.resize(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    SkeletonFrame& f = rec.frames[i];
    f.t = static_cast<double>(i) / fps;
    for (int j = 0; j < track::kNumJoints; ++j) {
      f.joints[j] = centers[i] + offsets[j];
      f.valid[j] = true;
    }
  }
  return rec;
}

namespace {

// frame-accurate walker shared by both scenario generators; frames[i] is the
// xy position at t = i / fps, so event times can be pinned to the sim clock
class Walker {
 public:
  Walker(const Eigen::Vector2d& start, double fps) : dt_(1.0 / fps), pos_(start) {}

  double now() const { return static_cast<double>(frames_.size()) * dt_; }
  const Eigen::Vector2d& pos() const { return pos_; }

  void go(const Eigen::Vector2d& target, double speed) {
    while (true) {
      frames_.push_back(pos_);
      const Eigen::Vector2d delta = target - pos_;
      const double dist = delta.norm();
      const double step = speed * dt_;
      if (dist <= step) {
        pos_ = target;
        return;
      }
      pos_ += delta * (step / dist);
    }
  }

  void hold_until(double t) {
    while (now() < t - 1e-9) frames_.push_back(pos_);
  }

  void hold(double seconds) { hold_until(now() + seconds); }

  std::vector<Eigen::Vector3d> centers(double z, double total_s) const {
    const std::size_t n = static_cast<std::size_t>(std::ceil(total_s / dt_)) + 1;
    std::vector<Eigen::Vector3d> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d& p = i < frames_.size() ? frames_[i] : pos_;
      out.push_back({p.x(), p.y(), z});
    }
    return out;
  }

 private:
  double dt_;
  Eigen::Vector2d pos_;
  std::vector<Eigen::Vector2d> frames_;
};

ArmScript benchmark_giver() {
  ArmScript g;
  g.start = {-0.85, -0.35, 0.55};
  g.fallback = {-1.5, -1.1, 0.5};
  g.retreat_speed = 1.8;
  g.waypoints = {
      {{-1.05, -0.5, 0.3}, 0.3, 1.0, WaypointTag::pick},
      {{-0.3, -0.05, 0.8}, 0.3, 0.0, WaypointTag::transit},
      {{-0.05, 0.0, 0.85}, 0.10, 0.0, WaypointTag::exchange},
      {{-0.85, -0.35, 0.55}, 0.3, 0.6, WaypointTag::transit},
  };
  return g;
}

ArmScript benchmark_receiver() {
  ArmScript r;
  r.start = {0.85, 0.5, 0.5};
  r.fallback = {1.5, -1.1, 0.5};
  r.retreat_speed = 1.8;
  r.waypoints = {
      {{0.3, -0.05, 0.8}, 0.3, 0.0, WaypointTag::transit},
      {{0.05, 0.0, 0.85}, 0.10, 0.0, WaypointTag::exchange},
      {{0.95, 0.75, 0.4}, 0.3, 1.0, WaypointTag::place},
      {{0.85, 0.5, 0.5}, 0.3, 0.6, WaypointTag::transit},
  };
  return r;
}

}  // namespace

SimScenario make_benchmark_scenario(std::uint64_t seed, const PolicyConfig& policy) {
  SimScenario sc;
  sc.seed = seed;
  sc.policy = policy;
  sc.handover_center = {0.0, 0.0, 0.85};
  sc.giver = benchmark_giver();
  sc.receiver = benchmark_receiver();
  sc.cycles = 4;
  sc.duration_cap_s = 200.0;
  sc.exchange_dwell_s = 2.5;

  SplitRng rng(seed);
  auto wander_rng = rng.split(0);
  auto event_rng = rng.split(1);

  Walker w({0.0, 2.8}, 30.0);

  // one slow intrusion into the exchange zone, held long enough that an
  // untriggered run is always caught mid-exchange; the creep is slow enough
  // that no policy can be outrun inside a blocked window
  {
    const double start = event_rng.uniform(5.0, 8.0);
    const double theta = event_rng.uniform(75.0, 125.0) * M_PI / 180.0;
    const Eigen::Vector2d dir(std::cos(theta), std::sin(theta));
    const Eigen::Vector2d staging = 1.6 * dir;
    const Eigen::Vector2d ring = 0.55 * dir;
    const double walk_speed = event_rng.uniform(1.1, 1.3);
    const double walk_in = ((staging - w.pos()).norm() + 1.05) / walk_speed;
    w.hold_until(std::max(w.now(), start - walk_in));
    w.go(staging, walk_speed);
    w.go(ring, walk_speed);
    w.go(0.30 * dir, 0.035);
    w.hold(event_rng.uniform(12.0, 13.0));
    w.go(2.2 * dir, event_rng.uniform(1.2, 1.4));
  }

  // two long waits just outside the place-station envelope: tcp-anchored
  // triggers stall there while zone-anchored ones keep working
  const double loiter_starts[2] = {event_rng.uniform(30.0, 33.0), event_rng.uniform(50.0, 53.0)};
  for (const double start : loiter_starts) {
    const Eigen::Vector2d post(0.95, 1.17);
    const double walk_speed = event_rng.uniform(1.0, 1.2);
    while (true) {  // wander while there is slack before the walk-in
      const Eigen::Vector2d target(wander_rng.uniform(-1.8, 1.8), wander_rng.uniform(1.5, 2.9));
      const double speed = wander_rng.uniform(0.9, 1.2);
      const double pause = wander_rng.uniform(0.3, 0.9);
      const double spent = (target - w.pos()).norm() / speed + pause;
      const double then_in = (post - target).norm() / walk_speed;
      if (w.now() + spent + then_in > start - 0.5) break;
      w.go(target, speed);
      w.hold(pause);
    }
    w.hold_until(std::max(w.now(), start - (post - w.pos()).norm() / walk_speed));
    w.go(post, walk_speed);
    w.hold(event_rng.uniform(15.5, 16.5));
    w.go({wander_rng.uniform(-0.8, 0.8), wander_rng.uniform(2.0, 2.9)}, 1.2);
  }

  // place-station passes and corridor wanders for the rest of the recording
  const double record_s = sc.duration_cap_s + 5.0;
  while (w.now() < record_s) {
    if (event_rng.uniform(0.0, 1.0) < 0.3) {
      const double y_pass = event_rng.uniform(1.17, 1.3);
      w.go({event_rng.uniform(0.15, 0.35), y_pass}, 1.1);
      w.go({event_rng.uniform(1.4, 1.6), y_pass}, 1.0);
      w.hold(event_rng.uniform(0.2, 0.6));
    } else {
      w.go({wander_rng.uniform(-1.8, 1.8), wander_rng.uniform(1.5, 2.9)},
           wander_rng.uniform(0.9, 1.2));
      w.hold(wander_rng.uniform(0.3, 0.9));
    }
  }

  sc.recording = recording_from_centers(w.centers(0.9, record_s), 30.0);
  return sc;
}

SimScenario make_adversarial_scenario(std::uint64_t seed, const PolicyConfig& policy) {
  SimScenario sc;
  sc.seed = seed;
  sc.policy = policy;
  sc.handover_center = {0.0, 0.0, 0.85};
  sc.giver = benchmark_giver();
  sc.receiver = benchmark_receiver();
  sc.cycles = 30;
  sc.duration_cap_s = 520.0;
  sc.exchange_dwell_s = 2.5;

  SplitRng rng(seed);
  auto wander_rng = rng.split(0);
  auto dash_rng = rng.split(1);

  // a plain-reach twin times the exchange windows each rush is aimed at
  PolicyConfig probe = policy;
  probe.kind = PolicyConfig::Kind::dynamic_cylinder;

  const double record_s = sc.duration_cap_s + 5.0;
  Walker w({0.0, 3.1}, 30.0);
  const int dashes = 4;
  for (int k = 0; k < dashes; ++k) {
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector2d target(wander_rng.uniform(-1.5, 1.5), wander_rng.uniform(2.7, 3.4));
      w.go(target, wander_rng.uniform(0.9, 1.2));
      w.hold(wander_rng.uniform(1.5, 3.5));
    }
    // rush from a fixed bearing sector straight at the handover center
    const double bearing = dash_rng.uniform(62.0, 88.0) * M_PI / 180.0;
    const Eigen::Vector2d dir(std::cos(bearing), std::sin(bearing));
    const double rush = dash_rng.uniform(2.2, 2.5);
    const Eigen::Vector2d ring = 2.8 * dir;
    w.go(ring, 1.2);

    SimScenario trial = sc;
    trial.policy = probe;
    trial.recording = recording_from_centers(w.centers(0.9, record_s), 30.0);
    const SimResult timing = simulate(trial);
    const double ready = w.now() + 1.5;
    double window = -1.0;
    for (const SimEvent& e : timing.events) {
      if (e.kind == "exchange_start" && e.t >= ready) {
        window = e.t;
        break;
      }
    }
    if (window < 0.0) fail("InternalError", "no exchange window left for the rush");

    if (k + 1 < dashes) {
      // arrive mid-window, after the last unblocked plain-reach check
      w.hold_until(window + 0.8 - (2.8 - 0.45) / rush);
      w.go(0.25 * dir, rush);
      w.hold(0.15);
      w.go(ring, rush);
    } else {
      // feint to just outside plain reach first: a warmed-up learned policy
      // reacts to the sector before the window opens and clears the arms out
      w.hold_until(window - 0.3 - (2.8 - 1.56) / 1.2);
      w.go(0.8 * dir, 1.2);
      w.hold(0.15);
      w.go(0.25 * dir, rush);
      w.hold(0.15);
      w.go(ring, rush);
    }
  }
  w.go({wander_rng.uniform(-1.0, 1.0), wander_rng.uniform(3.0, 3.4)}, 1.0);

  sc.recording = recording_from_centers(w.centers(0.9, record_s), 30.0);
  return sc;
}

namespace {

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) fail("SchemaError", "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const char* tag_to_string(WaypointTag tag) {
  switch (tag) {
    case WaypointTag::transit: return "transit";
    case WaypointTag::pick: return "pick";
    case WaypointTag::exchange: return "exchange";
    case WaypointTag::place: return "place";
  }
  fail("SchemaError", "invalid waypoint tag");
}

WaypointTag tag_from_string(const std::string& s) {
  if (s == "transit") return WaypointTag::transit;
  if (s == "pick") return WaypointTag::pick;
  if (s == "exchange") return WaypointTag::exchange;
  if (s == "place") return WaypointTag::place;
  fail("SchemaError", "unknown waypoint tag: " + s);
}

json arm_to_json(const ArmScript& arm) {
  json j;
  j["start"] = vec3_to_json(arm.start);
  j["fallback"] = vec3_to_json(arm.fallback);
  j["retreat_speed"] = arm.retreat_speed;
  json wps = json::array();
  for (const Waypoint& w : arm.waypoints) {
    json wj;
    wj["target"] = vec3_to_json(w.target);
    wj["speed"] = w.speed;
    wj["dwell_s"] = w.dwell_s;
    wj["tag"] = tag_to_string(w.tag);
    wps.push_back(wj);
  }
  j["waypoints"] = wps;
  return j;
}

ArmScript arm_from_json(const json& j) {
  ArmScript arm;
  arm.start = vec3_from_json(j.at("start"));
  arm.fallback = vec3_from_json(j.at("fallback"));
  arm.retreat_speed = j.value("retreat_speed", 1.8);
  for (const json& wj : j.at("waypoints")) {
    Waypoint w;
    w.target = vec3_from_json(wj.at("target"));
    w.speed = wj.at("speed").get<double>();
    w.dwell_s = wj.value("dwell_s", 0.0);
    w.tag = tag_from_string(wj.value("tag", "transit"));
    arm.waypoints.push_back(w);
  }
  return arm;
}

json policy_to_json(const PolicyConfig& p) {
  json j;
  j["kind"] = policy_kind_to_string(p.kind);
  j["radius"] = p.radius;
  j["height"] = p.height;
  j["r_base"] = p.r_base;
  j["k"] = p.k;
  j["r_min"] = p.r_min;
  j["r_max"] = p.r_max;
  return j;
}

PolicyConfig policy_from_json(const json& j) {
  PolicyConfig p;
  p.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  p.radius = j.value("radius", p.radius);
  p.height = j.value("height", p.height);
  p.r_base = j.value("r_base", p.r_base);
  p.k = j.value("k", p.k);
  p.r_min = j.value("r_min", p.r_min);
  p.r_max = j.value("r_max", p.r_max);
  if (p.r_min > p.r_base || p.r_base > p.r_max)
    fail("SchemaError", "need r_min <= r_base <= r_max");
  return p;
}

}  // namespace

SkeletonRecording load_recording(const std::string& path) {
  const std::string text = read_file(path);
  SkeletonRecording rec;
  std::istringstream lines(text);
  std::string line;
  const bool csv = std::filesystem::path(path).extension() == ".csv";
  bool header_skipped = false;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    SkeletonFrame frame;
    if (csv) {
      if (!header_skipped) {
        header_skipped = true;
        continue;
      }
      std::istringstream row(line);
      std::string cell;
      std::vector<double> values;
      while (std::getline(row, cell, ',')) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          fail("BadRecording", "non-numeric cell in " + path);
        }
      }
      if (values.size() != 1 + 4 * static_cast<std::size_t>(track::kNumJoints))
        fail("BadRecording", "recording row must carry 65 joints");
      frame.t = values[0];
      for (int j = 0; j < track::kNumJoints; ++j) {
        frame.joints[j] = {values[1 + 4 * j], values[2 + 4 * j], values[3 + 4 * j]};
        frame.valid[j] = values[4 + 4 * j] != 0.0;
      }
    } else {
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::exception& e) {
        fail("BadRecording", std::string("bad recording line: ") + e.what());
      }
      frame.t = obj.at("t").get<double>();
      const json& joints = obj.at("joints");
      if (!joints.is_array() || joints.size() != track::kNumJoints)
        fail("BadRecording", "recording frame must carry 65 joints");
      for (int j = 0; j < track::kNumJoints; ++j) {
        const json& entry = joints[static_cast<std::size_t>(j)];
        if (!entry.is_array() || entry.size() != 4)
          fail("BadRecording", "joint entry must be [x, y, z, valid]");
        frame.joints[j] = {entry[0].get<double>(), entry[1].get<double>(), entry[2].get<double>()};
        frame.valid[j] = entry[3].get<double>() != 0.0;
      }
    }
    if (!rec.frames.empty() && frame.t <= rec.frames.back().t)
      fail("BadRecording", "timestamps must be strictly increasing");
    rec.frames.push_back(frame);
  }
  if (rec.frames.empty()) fail("BadRecording", "recording is empty: " + path);
  return rec;
}

void save_recording(const SkeletonRecording& rec, const std::string& path) {
  std::string out;
  const bool csv = std::filesystem::path(path).extension() == ".csv";
  if (csv) {
    out += "t";
    for (int j = 0; j < track::kNumJoints; ++j) {
      const std::string id = std::to_string(j);
      out += ",j" + id + "_x,j" + id + "_y,j" + id + "_z,j" + id + "_valid";
    }
    out += "\n";
  }
  for (const SkeletonFrame& f : rec.frames) {
    if (csv) {
      out += format_double(f.t);
      for (int j = 0; j < track::kNumJoints; ++j) {
        out += "," + format_double(f.joints[j].x()) + "," + format_double(f.joints[j].y()) + "," +
               format_double(f.joints[j].z()) + "," + (f.valid[j] ? "1" : "0");
      }
      out += "\n";
    } else {
      json obj;
      obj["t"] = f.t;
      json joints = json::array();
      for (int j = 0; j < track::kNumJoints; ++j)
        joints.push_back(json::array(
            {f.joints[j].x(), f.joints[j].y(), f.joints[j].z(), f.valid[j] ? 1.0 : 0.0}));
      obj["joints"] = joints;
      out += obj.dump() + "\n";
    }
  }
  atomic_write(path, out);
}

SimScenario load_scenario(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail("SchemaError", std::string("bad scenario file: ") + e.what());
  }
  SimScenario sc;
  try {
    sc.skeleton_path = j.at("skeleton").get<std::string>();
    sc.time_offset_s = j.value("time_offset_s", -21.0);
    sc.policy = policy_from_json(j.at("policy"));
    sc.handover_center = vec3_from_json(j.at("handover_center"));
    sc.giver = arm_from_json(j.at("arms").at("giver"));
    sc.receiver = arm_from_json(j.at("arms").at("receiver"));
    sc.cycles = j.value("cycles", 4);
    sc.duration_cap_s = j.value("duration_cap_s", 240.0);
    sc.exchange_dwell_s = j.value("exchange_dwell_s", 1.0);
    sc.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    fail("SchemaError", std::string("bad scenario field: ") + e.what());
  }
  std::filesystem::path skel(sc.skeleton_path);
  if (skel.is_relative()) skel = std::filesystem::path(path).parent_path() / skel;
  sc.recording = load_recording(skel.string());
  return sc;
}

void save_scenario(const SimScenario& scenario, const std::string& path,
                   const std::string& skeleton_path) {
  save_recording(scenario.recording, skeleton_path);
  json j;
  std::filesystem::path skel(skeleton_path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  j["skeleton"] = skel.parent_path() == base ? skel.filename().string() : skel.string();
  j["time_offset_s"] = scenario.time_offset_s;
  j["policy"] = policy_to_json(scenario.policy);
  j["handover_center"] = vec3_to_json(scenario.handover_center);
  j["arms"]["giver"] = arm_to_json(scenario.giver);
  j["arms"]["receiver"] = arm_to_json(scenario.receiver);
  j["cycles"] = scenario.cycles;
  j["duration_cap_s"] = scenario.duration_cap_s;
  j["exchange_dwell_s"] = scenario.exchange_dwell_s;
  j["seed"] = scenario.seed;
  atomic_write(path, j.dump(2) + "\n");
}

}  // namespace omnikit::safety

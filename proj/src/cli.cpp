#include "omnikit/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "omnikit/calib_io.hpp"
#include "omnikit/calibration.hpp"
#include "omnikit/coverage.hpp"
#include "omnikit/error.hpp"
#include "omnikit/geometry.hpp"
#include "omnikit/handeye.hpp"
#include "omnikit/handover.hpp"
#include "omnikit/io_util.hpp"
#include "omnikit/placement.hpp"
#include "omnikit/rng.hpp"
#include "omnikit/safety.hpp"
#include "omnikit/tracking.hpp"
#include "omnikit/tracking_synth.hpp"

namespace omnikit::cli {

namespace {

using nlohmann::json;

json pose_to_json(const RigidPose& pose) {
  const Eigen::Matrix4d M = pose.matrix();
  json out = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out.push_back(M(r, c));
  return out;
}

RigidPose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 16) fail("SchemaError", "pose must be a 16-element array");
  Eigen::Matrix4d M;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) M(r, c) = j[static_cast<std::size_t>(r * 4 + c)].get<double>();
  return RigidPose::from_matrix(M);
}

json parse_json_file(const std::filesystem::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) fail("SchemaError", path.string() + " is not valid JSON");
  return j;
}

std::vector<RigidPose> poses_from_file(const std::filesystem::path& path) {
  json j = parse_json_file(path);
  const json* arr = &j;
  if (j.is_object() && j.contains("poses")) arr = &j["poses"];
  if (!arr->is_array()) fail("SchemaError", path.string() + ": expected an array of poses");
  std::vector<RigidPose> poses;
  for (const json& p : *arr) poses.push_back(pose_from_json(p));
  return poses;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stoi(part));
    } catch (const std::exception&) {
      fail("SchemaError", what + ": bad integer '" + part + "'");
    }
  }
  if (out.empty()) fail("SchemaError", what + " is empty");
  return out;
}

// lo:step:hi grid normalized by hi, so 0:1:48 is 49 evenly spaced fractions
std::vector<double> parse_freeze_grid(const std::string& text) {
  std::stringstream ss(text);
  std::string part;
  std::vector<double> fields;
  while (std::getline(ss, part, ':')) {
    try {
      fields.push_back(std::stod(part));
    } catch (const std::exception&) {
      fail("SchemaError", "freeze grid: bad number '" + part + "'");
    }
  }
  if (fields.size() != 3) fail("SchemaError", "freeze grid must be lo:step:hi");
  const double lo = fields[0], step = fields[1], hi = fields[2];
  if (step <= 0 || hi <= 0 || lo < 0 || lo > hi) fail("SchemaError", "freeze grid out of order");
  std::vector<double> fractions;
  for (double v = lo; v <= hi + 1e-9; v += step) fractions.push_back(v / hi);
  return fractions;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateOpts {
  std::string obs, out, stats;
  std::string mode = "full";
};

json stats_to_json(const calib::CalibrationStats& s) {
  return {{"mean_px", s.mean_px},
          {"std_px", s.std_px},
          {"frac_le_1px", s.frac_le_1px},
          {"frac_le_2px", s.frac_le_2px},
          {"count", s.count}};
}

void run_calibrate(const CalibrateOpts& o) {
  const ObservationSet set = load_observations(o.obs);
  calib::BaMode mode = calib::BaMode::full;
  if (o.mode == "extrinsics") mode = calib::BaMode::extrinsics_only;
  if (o.mode == "intrinsics") mode = calib::BaMode::full_with_intrinsics;
  const calib::PipelineResult result =
      calib::calibrate_pipeline(set.boards, set.cameras, set.observations, mode);
  json doc;
  doc["cameras"] = json::parse(cameras_to_json(result.cameras));
  doc["stats"] = stats_to_json(result.stats);
  json boards = json::object();
  for (const auto& [id, pose] : result.board_world) boards[std::to_string(id)] = pose_to_json(pose);
  doc["board_world"] = boards;
  atomic_write(o.out, doc.dump(2) + "\n");
  if (!o.stats.empty()) atomic_write(o.stats, stats_to_json(result.stats).dump(2) + "\n");
}

// ------------------------------------------------------------------ handeye

struct HandeyeOpts {
  std::string boards, fk, out;
};

void run_handeye(const HandeyeOpts& o) {
  const std::vector<RigidPose> board_world = poses_from_file(o.boards);
  const std::vector<RigidPose> flange_base = poses_from_file(o.fk);
  const calib::HandEyeSolution sol = calib::solve_hand_eye(board_world, flange_base);
  json doc;
  doc["Z_base_to_world"] = pose_to_json(sol.Z);
  doc["X_flange_to_board"] = pose_to_json(sol.X);
  doc["residual_max"] = sol.residual_max;
  doc["rot_residual_max"] = sol.rot_residual_max;
  atomic_write(o.out, doc.dump(2) + "\n");
}

// -------------------------------------------------------------------- track

struct TrackOpts {
  std::string reports, calib, out;
  double fps = 30.0;
  std::uint64_t seed = 0;
};

track::KeypointReport report_from_json(const json& j) {
  track::KeypointReport rep;
  rep.camera_id = j.at("camera_id").get<int>();
  rep.frame = j.at("frame").get<std::int64_t>();
  for (const json& jp : j.at("persons")) {
    track::PersonDetection det;
    const auto bbox = jp.at("bbox").get<std::vector<double>>();
    if (bbox.size() != 4) fail("SchemaError", "bbox must have 4 entries");
    std::copy(bbox.begin(), bbox.end(), det.bbox.begin());
    for (const json& jk : jp.at("keypoints")) {
      track::Keypoint kp;
      kp.px = {jk.at("u").get<double>(), jk.at("v").get<double>()};
      kp.score_x = jk.at("score_x").get<double>();
      kp.score_y = jk.at("score_y").get<double>();
      det.keypoints.push_back(kp);
    }
    rep.persons.push_back(std::move(det));
  }
  return rep;
}

json report_to_json(const track::KeypointReport& rep) {
  json persons = json::array();
  for (const track::PersonDetection& det : rep.persons) {
    json keypoints = json::array();
    for (const track::Keypoint& kp : det.keypoints) {
      keypoints.push_back(
          {{"u", kp.px.u}, {"v", kp.px.v}, {"score_x", kp.score_x}, {"score_y", kp.score_y}});
    }
    persons.push_back({{"bbox", det.bbox}, {"keypoints", keypoints}});
  }
  return {{"camera_id", rep.camera_id}, {"frame", rep.frame}, {"persons", persons}};
}

void run_track(const TrackOpts& o) {
  const std::vector<CameraModel> cameras = load_calibration(o.calib);
  std::map<std::int64_t, std::vector<track::KeypointReport>> by_frame;
  std::stringstream stream(read_file(o.reports));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      fail("SchemaError", o.reports + ":" + std::to_string(line_no) + " is not valid JSON");
    }
    try {
      track::KeypointReport rep = report_from_json(j);
      by_frame[rep.frame].push_back(std::move(rep));
    } catch (const json::exception& e) {
      fail("SchemaError", o.reports + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  track::TrackerOptions opts;
  opts.fps = o.fps;
  opts.seed = o.seed;
  track::Tracker tracker(cameras, opts);
  std::string out;
  for (const auto& [frame, reports] : by_frame) {
    tracker.step(frame, reports);
    for (const track::PersonTrack* t : tracker.confirmed()) {
      json joints = json::array();
      json valid = json::array();
      for (int j = 0; j < track::kNumJoints; ++j) {
        joints.push_back({t->joints[j].x(), t->joints[j].y(), t->joints[j].z()});
        valid.push_back(static_cast<bool>(t->valid[j]));
      }
      const json rec = {
          {"frame", frame}, {"person_id", t->id}, {"joints", joints}, {"valid", valid}};
      out += rec.dump() + "\n";
    }
  }
  atomic_write(o.out, out);
}

// ----------------------------------------------------------------- coverage

struct CoverageOpts {
  std::string calib, cloud, out;
  std::string counts = "12,24,36,40,48";
  std::string min_views = "2,3,4,5";
  int subsets = 25;
  double resolution = 0.25;
  std::uint64_t seed = 0;
};

std::vector<Eigen::Vector3d> load_cloud_csv(const std::filesystem::path& path) {
  std::stringstream stream(read_file(path));
  std::string line;
  std::vector<Eigen::Vector3d> points;
  bool header = true;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.find("x") != std::string::npos) continue;  // header row optional
    }
    std::stringstream row(line);
    std::string cell;
    Eigen::Vector3d p;
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(row, cell, ',')) fail("SchemaError", "cloud row needs x,y,z");
      try {
        p[i] = std::stod(cell);
      } catch (const std::exception&) {
        fail("SchemaError", "cloud row: bad number '" + cell + "'");
      }
    }
    points.push_back(p);
  }
  if (points.empty()) fail("SchemaError", "point cloud is empty");
  return points;
}

void run_coverage(const CoverageOpts& o) {
  const std::vector<CameraModel> cameras = load_calibration(o.calib);
  const std::vector<Eigen::Vector3d> points = load_cloud_csv(o.cloud);
  const std::vector<Eigen::Vector3d> voxels = cov::voxelize(points, o.resolution);
  const cov::VisibilityMatrix F = cov::visibility_matrix(
      cameras, voxels, cov::kDefaultDepthMin, cov::kDefaultDepthMax, o.resolution);
  const std::vector<int> counts = parse_int_list(o.counts, "counts");
  const std::vector<int> m_list = parse_int_list(o.min_views, "min views");
  const std::vector<cov::SweepRow> rows = cov::coverage_sweep(F, counts, o.subsets, m_list, o.seed);
  std::string out = "count,M,mean_coverage\n";
  for (const cov::SweepRow& row : rows) {
    out += std::to_string(row.count) + "," + std::to_string(row.min_views) + "," +
           format_double(row.mean_coverage) + "\n";
  }
  atomic_write(o.out, out);
}

// ----------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string scenario, out, log;
  std::string freeze;
};

constexpr const char* kMetricsHeader =
    "policy,avg_cycle_s,human_hits,triggers,fallback_s,cycles_completed,elapsed_s\n";

std::string metrics_row(const std::string& label, const safety::SimMetrics& m) {
  return label + "," + format_double(m.avg_cycle_s) + "," + std::to_string(m.human_hits) + "," +
         std::to_string(m.triggers) + "," + format_double(m.fallback_s) + "," +
         std::to_string(m.cycles_completed) + "," + format_double(m.elapsed_s) + "\n";
}

void run_simulate(const SimulateOpts& o) {
  const safety::SimScenario scenario = safety::load_scenario(o.scenario);
  const safety::SimResult result = safety::simulate(scenario);
  atomic_write(o.out, kMetricsHeader +
                          metrics_row(safety::policy_kind_to_string(scenario.policy.kind),
                                      result.metrics));
  if (!o.log.empty()) {
    std::string log;
    for (const safety::SimEvent& e : result.events) {
      const json rec = {{"t", e.t}, {"kind", e.kind}, {"value", e.value}};
      log += rec.dump() + "\n";
    }
    atomic_write(o.log, log);
  }
}

void run_simulate_sweep(const SimulateOpts& o) {
  const safety::SimScenario scenario = safety::load_scenario(o.scenario);
  const std::vector<double> fractions = parse_freeze_grid(o.freeze);
  const std::vector<safety::FreezePoint> points =
      safety::memory_freeze_sweep(scenario, fractions);
  std::string out = "freeze_fraction,avg_cycle_s,human_hits,triggers,fallback_s,cycles_completed\n";
  for (const safety::FreezePoint& p : points) {
    out += format_double(p.fraction) + "," + format_double(p.metrics.avg_cycle_s) + "," +
           std::to_string(p.metrics.human_hits) + "," + std::to_string(p.metrics.triggers) + "," +
           format_double(p.metrics.fallback_s) + "," +
           std::to_string(p.metrics.cycles_completed) + "\n";
  }
  atomic_write(o.out, out);
}

// ----------------------------------------------------------------- handover

struct HandoverOpts {
  std::string bases, out;
  std::string chain = "serial-seven";
  std::string category = "spherical";
  int yaw_samples = 8;
  int tilt_samples = 3;
  int ik_restarts = 6;
  std::uint64_t seed = 0;
};

void run_handover_plan(const HandoverOpts& o) {
  const json j = parse_json_file(o.bases);
  if (!j.contains("giver") || !j.contains("receiver")) {
    fail("SchemaError", "bases file needs giver and receiver poses");
  }
  const RigidPose base_g = pose_from_json(j["giver"]);
  const RigidPose base_r = pose_from_json(j["receiver"]);
  const auto make_chain = [&](const RigidPose& base) {
    if (o.chain == "serial-seven") return handover::serial_seven(base);
    if (o.chain == "planar-two-link") return handover::planar_two_link(base);
    fail("SchemaError", "unknown chain '" + o.chain + "'");
  };
  const handover::KinematicChain giver = make_chain(base_g);
  const handover::KinematicChain receiver = make_chain(base_r);

  handover::PlanOptions opts;
  opts.yaw_samples = o.yaw_samples;
  opts.tilt_samples = o.tilt_samples;
  opts.ik_restarts = o.ik_restarts;
  opts.seed = o.seed;
  const handover::HandoverCandidate cand = handover::plan_handover(
      giver, receiver, handover::category_from_string(o.category), opts);

  json doc;
  doc["index"] = cand.index;
  doc["category"] = handover::to_string(cand.category);
  doc["position"] = {cand.position.x(), cand.position.y(), cand.position.z()};
  doc["giver_pose"] = pose_to_json(cand.giver);
  doc["receiver_pose"] = pose_to_json(cand.receiver);
  doc["q_giver"] = std::vector<double>(cand.q_giver.data(), cand.q_giver.data() + cand.q_giver.size());
  doc["q_receiver"] =
      std::vector<double>(cand.q_receiver.data(), cand.q_receiver.data() + cand.q_receiver.size());
  doc["scores"] = {{"tcp", cand.scores.tcp},
                   {"continuity", cand.scores.continuity},
                   {"manipulability", cand.scores.manipulability},
                   {"limit_margin", cand.scores.limit_margin},
                   {"z_down", cand.scores.z_down}};
  doc["total"] = cand.total;
  atomic_write(o.out, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------- placement

struct PlacementOpts {
  std::string predictor = "lookup";
  std::string out;
  int combos = 15;
  std::uint64_t seed = 42;
  bool only_remaining = false;
};

void run_placement_sweep(const PlacementOpts& o) {
  place::SweepConfig config;
  config.max_combos = o.combos;
  config.seed = o.seed;
  config.only_remaining = o.only_remaining;
  const std::vector<place::SweepRow> rows = place::sweep(place::make_predictor(o.predictor), config);
  std::string out = "k,percent,mean_ratio,n_combos\n";
  for (const place::SweepRow& row : rows) {
    out += std::to_string(row.k) + "," + format_double(100.0 * row.mean_ratio) + "," +
           format_double(row.mean_ratio) + "," + std::to_string(row.n_combos) + "\n";
  }
  atomic_write(o.out, out);
}

// ---------------------------------------------------------------------- gen

struct GenCalibOpts {
  std::string out, truth;
  std::uint64_t seed = 7;
  int cams = 8;
  int boards = 4;
  double noise = 0.0;
};

void run_gen_calib(const GenCalibOpts& o) {
  const calib::CalibScene scene =
      calib::generate_calib_scene(o.seed, o.cams, o.boards, o.noise);
  ObservationSet set;
  set.boards = scene.boards;
  set.cameras = scene.cameras;
  for (CameraModel& cam : set.cameras) cam.pose = RigidPose::identity();  // intrinsics only
  set.observations = scene.observations;
  save_observations(o.out, set);
  if (!o.truth.empty()) save_calibration(o.truth, scene.cameras);
}

struct GenHandeyeOpts {
  std::string boards, fk, truth;
  std::uint64_t seed = 1;
  int configs = 20;
  double noise_t = 0.0;
  double noise_r_deg = 0.0;
};

void run_gen_handeye(const GenHandeyeOpts& o) {
  if (o.configs < 3) fail("SchemaError", "need at least 3 configurations");
  SplitRng root(o.seed);
  SplitRng pose_rng = root.split(0);
  SplitRng noise_rng = root.split(1);
  const RigidPose Z{
      so3_exp(Eigen::Vector3d(pose_rng.normal(), pose_rng.normal(), pose_rng.normal()) * 0.5),
      {pose_rng.uniform(-2, 2), pose_rng.uniform(-2, 2), pose_rng.uniform(0, 1)}};
  const RigidPose X{
      so3_exp(Eigen::Vector3d(pose_rng.normal(), pose_rng.normal(), pose_rng.normal()) * 0.3),
      {pose_rng.uniform(-0.1, 0.1), pose_rng.uniform(-0.1, 0.1), pose_rng.uniform(0.05, 0.2)}};
  const RigidPose center{so3_exp(Eigen::Vector3d(0.1, -0.2, 0.3)), {0.4, 0.1, 0.5}};
  const std::vector<RigidPose> flange = calib::sample_handeye_configs(
      center, o.configs, 0.07, 30.0 * std::numbers::pi / 180.0, root.split(2).next_u64());

  const double sigma_r = o.noise_r_deg * std::numbers::pi / 180.0;
  json boards = json::array();
  json fks = json::array();
  for (const RigidPose& f : flange) {
    RigidPose b = compose(Z, compose(f, X.inverse()));
    if (o.noise_t > 0) {
      b.t += Eigen::Vector3d(noise_rng.normal(0, o.noise_t), noise_rng.normal(0, o.noise_t),
                             noise_rng.normal(0, o.noise_t));
    }
    if (sigma_r > 0) {
      const Eigen::Vector3d w(noise_rng.normal(), noise_rng.normal(), noise_rng.normal());
      b.R = so3_exp(w.normalized() * std::abs(noise_rng.normal(0, sigma_r))) * b.R;
    }
    boards.push_back(pose_to_json(b));
    fks.push_back(pose_to_json(f));
  }
  atomic_write(o.boards, json{{"poses", boards}}.dump(2) + "\n");
  atomic_write(o.fk, json{{"poses", fks}}.dump(2) + "\n");
  if (!o.truth.empty()) {
    atomic_write(o.truth,
                 json{{"Z_base_to_world", pose_to_json(Z)}, {"X_flange_to_board", pose_to_json(X)}}
                         .dump(2) +
                     "\n");
  }
}

struct GenTrackOpts {
  std::string reports, calib, truth;
  std::uint64_t seed = 1;
  int people = 3;
  int cams = 40;
  int frames = 300;
  double noise = 1.0;
  double miss_rate = 0.0;
};

void run_gen_track(const GenTrackOpts& o) {
  track::TrackingSceneOptions opts;
  opts.n_people = o.people;
  opts.n_cameras = o.cams;
  opts.n_frames = o.frames;
  opts.noise_px = o.noise;
  opts.miss_rate = o.miss_rate;
  const track::TrackingScene scene = track::make_tracking_scene(o.seed, opts);
  std::string out;
  for (const std::vector<track::KeypointReport>& frame : scene.reports) {
    for (const track::KeypointReport& rep : frame) out += report_to_json(rep).dump() + "\n";
  }
  atomic_write(o.reports, out);
  save_calibration(o.calib, scene.cameras);
  if (!o.truth.empty()) {
    std::string truth;
    for (std::size_t f = 0; f < scene.truth.size(); ++f) {
      json persons = json::array();
      for (const auto& joints : scene.truth[f]) {
        json arr = json::array();
        for (const Eigen::Vector3d& p : joints) arr.push_back({p.x(), p.y(), p.z()});
        persons.push_back({{"joints", arr}});
      }
      truth += json{{"frame", f}, {"persons", persons}}.dump() + "\n";
    }
    atomic_write(o.truth, truth);
  }
}

struct GenCloudOpts {
  std::string out;
  std::uint64_t seed = 1;
  double spacing = 0.05;
};

void run_gen_cloud(const GenCloudOpts& o) {
  const std::vector<Eigen::Vector3d> points = cov::make_room_cloud(o.seed, o.spacing);
  std::string out = "x,y,z\n";
  for (const Eigen::Vector3d& p : points) {
    out += format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(p.z()) + "\n";
  }
  atomic_write(o.out, out);
}

struct GenSafetyOpts {
  std::string out, recording;
  std::string kind = "benchmark";
  std::string policy = "dynamic";
  double radius = 0.5;
  std::uint64_t seed = 1;
};

void run_gen_safety(const GenSafetyOpts& o) {
  safety::PolicyConfig policy;
  policy.kind = safety::policy_kind_from_string(o.policy);
  policy.radius = o.radius;
  safety::SimScenario scenario;
  if (o.kind == "benchmark") {
    scenario = safety::make_benchmark_scenario(o.seed, policy);
  } else if (o.kind == "adversarial") {
    scenario = safety::make_adversarial_scenario(o.seed, policy);
  } else {
    fail("SchemaError", "unknown scenario kind '" + o.kind + "'");
  }
  safety::save_scenario(scenario, o.out, o.recording);
}

// --------------------------------------------------------------------- app

// JSON config files: top-level keys are flags of the root command, nested
// objects scope flags to the matching subcommand.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (!opt->get_configurable()) continue;
      const std::string name = opt->get_single_name();
      if (!opt->results().empty()) {
        j[name] = opt->results().size() == 1 ? json(opt->results().front())
                                             : json(opt->results());
      } else if (default_also) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static void collect(const json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    if (!j.is_object()) throw CLI::FileError("config root must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        std::vector<std::string> nested = parents;
        nested.push_back(key);
        collect(value, std::move(nested), items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const json& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  }
};

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"deterministic multi-camera robot-coexistence toolkit"};
  app.require_subcommand(1);
  app.set_config("--config")->check(CLI::ExistingFile);
  app.config_formatter(std::make_shared<JsonConfig>());

  auto calibrate = std::make_shared<CalibrateOpts>();
  CLI::App* cal = app.add_subcommand("calibrate", "multi-camera extrinsic calibration");
  cal->add_option("--obs", calibrate->obs, "observations file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cal->add_option("--mode", calibrate->mode, "refinement mode")
      ->check(CLI::IsMember({"extrinsics", "full", "intrinsics"}));
  cal->add_option("--out", calibrate->out, "calibration output (JSON)")->required();
  cal->add_option("--stats", calibrate->stats, "also write the stats block alone");
  cal->callback([calibrate] { run_calibrate(*calibrate); });

  auto handeye = std::make_shared<HandeyeOpts>();
  CLI::App* he = app.add_subcommand("handeye", "robot base registration from board sightings");
  he->add_option("--boards", handeye->boards, "board world poses (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  he->add_option("--fk", handeye->fk, "flange poses in the base frame (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  he->add_option("--out", handeye->out, "solution output (JSON)")->required();
  he->callback([handeye] { run_handeye(*handeye); });

  auto trackopts = std::make_shared<TrackOpts>();
  CLI::App* trk = app.add_subcommand("track", "multi-view person tracking from keypoint reports");
  trk->add_option("--reports", trackopts->reports, "keypoint reports (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  trk->add_option("--calib", trackopts->calib, "calibration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  trk->add_option("--out", trackopts->out, "tracks output (JSONL)")->required();
  trk->add_option("--fps", trackopts->fps, "report frame rate");
  trk->add_option("--seed", trackopts->seed, "triangulation sampling seed");
  trk->callback([trackopts] { run_track(*trackopts); });

  auto coverage = std::make_shared<CoverageOpts>();
  CLI::App* covc = app.add_subcommand("coverage", "camera subset coverage sweep");
  covc->add_option("--calib", coverage->calib, "calibration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  covc->add_option("--cloud", coverage->cloud, "point cloud (CSV x,y,z)")
      ->required()
      ->check(CLI::ExistingFile);
  covc->add_option("--counts", coverage->counts, "camera counts, comma separated");
  covc->add_option("--min-views", coverage->min_views, "view thresholds, comma separated");
  covc->add_option("--subsets", coverage->subsets, "random subsets per count");
  covc->add_option("--resolution", coverage->resolution, "voxel size, m");
  covc->add_option("--seed", coverage->seed, "subset sampling seed");
  covc->add_option("--out", coverage->out, "coverage table (CSV)")->required();
  covc->callback([coverage] { run_coverage(*coverage); });

  auto simulate = std::make_shared<SimulateOpts>();
  CLI::App* sim = app.add_subcommand("simulate", "safety coexistence replay");
  sim->fallthrough();
  sim->add_option("--scenario", simulate->scenario, "scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", simulate->out, "metrics table (CSV)")->required();
  sim->add_option("--log", simulate->log, "event log (JSONL)");
  CLI::App* sweep = sim->add_subcommand("sweep", "memory freeze ablation");
  sweep->add_option("--freeze", simulate->freeze, "freeze grid lo:step:hi, normalized by hi")
      ->required();
  sim->callback([simulate, sweep] {
    if (sweep->parsed()) {
      run_simulate_sweep(*simulate);
    } else {
      run_simulate(*simulate);
    }
  });

  auto handover = std::make_shared<HandoverOpts>();
  CLI::App* ho = app.add_subcommand("handover", "bimanual handover planning");
  CLI::App* plan = ho->add_subcommand("plan", "pick the best handover candidate")->fallthrough();
  ho->require_subcommand(1);
  plan->add_option("--bases", handover->bases, "arm base poses (JSON giver/receiver)")
      ->required()
      ->check(CLI::ExistingFile);
  plan->add_option("--chain", handover->chain, "kinematic chain")
      ->check(CLI::IsMember({"serial-seven", "planar-two-link"}));
  plan->add_option("--category", handover->category, "object category");
  plan->add_option("--yaw-samples", handover->yaw_samples, "yaw grid size");
  plan->add_option("--tilt-samples", handover->tilt_samples, "tilt grid size");
  plan->add_option("--ik-restarts", handover->ik_restarts, "IK restarts per pose");
  plan->add_option("--seed", handover->seed, "IK restart seed");
  plan->add_option("--out", handover->out, "winning candidate (JSON)")->required();
  plan->callback([handover] { run_handover_plan(*handover); });

  auto placement = std::make_shared<PlacementOpts>();
  CLI::App* pl = app.add_subcommand("placement", "intent-aware placement evaluation");
  CLI::App* psweep = pl->add_subcommand("sweep", "demonstration-count success sweep");
  pl->require_subcommand(1);
  psweep->add_option("--predictor", placement->predictor, "predictor name");
  psweep->add_option("--seed", placement->seed, "subset sampling seed");
  psweep->add_option("--combos", placement->combos, "max subsets per k");
  psweep->add_flag("--test-only-remaining", placement->only_remaining,
                   "score only undemonstrated objects");
  psweep->add_option("--out", placement->out, "success table (CSV)")->required();
  psweep->callback([placement] { run_placement_sweep(*placement); });

  CLI::App* gen = app.add_subcommand("gen", "synthetic data generators");
  gen->require_subcommand(1);

  auto gcal = std::make_shared<GenCalibOpts>();
  CLI::App* gen_cal = gen->add_subcommand("calib-scene", "synthetic calibration observations");
  gen_cal->add_option("--seed", gcal->seed, "scene seed");
  gen_cal->add_option("--cams", gcal->cams, "camera count");
  gen_cal->add_option("--boards", gcal->boards, "board count");
  gen_cal->add_option("--noise", gcal->noise, "pixel noise sigma");
  gen_cal->add_option("--out", gcal->out, "observations output (JSON)")->required();
  gen_cal->add_option("--truth", gcal->truth, "also write the true rig (JSON)");
  gen_cal->callback([gcal] { run_gen_calib(*gcal); });

  auto ghe = std::make_shared<GenHandeyeOpts>();
  CLI::App* gen_he = gen->add_subcommand("handeye-set", "synthetic hand-eye configurations");
  gen_he->add_option("--seed", ghe->seed, "sampling seed");
  gen_he->add_option("--configs", ghe->configs, "configuration count");
  gen_he->add_option("--noise-t", ghe->noise_t, "board translation noise sigma, m");
  gen_he->add_option("--noise-r-deg", ghe->noise_r_deg, "board rotation noise sigma, deg");
  gen_he->add_option("--boards", ghe->boards, "board poses output (JSON)")->required();
  gen_he->add_option("--fk", ghe->fk, "flange poses output (JSON)")->required();
  gen_he->add_option("--truth", ghe->truth, "also write the true Z and X (JSON)");
  gen_he->callback([ghe] { run_gen_handeye(*ghe); });

  auto gtrk = std::make_shared<GenTrackOpts>();
  CLI::App* gen_trk = gen->add_subcommand("track-scene", "synthetic keypoint report stream");
  gen_trk->add_option("--seed", gtrk->seed, "scene seed");
  gen_trk->add_option("--people", gtrk->people, "person count");
  gen_trk->add_option("--cams", gtrk->cams, "camera count");
  gen_trk->add_option("--frames", gtrk->frames, "frame count");
  gen_trk->add_option("--noise", gtrk->noise, "pixel noise sigma");
  gen_trk->add_option("--miss-rate", gtrk->miss_rate, "per-camera dropout probability");
  gen_trk->add_option("--reports", gtrk->reports, "reports output (JSONL)")->required();
  gen_trk->add_option("--calib", gtrk->calib, "calibration output (JSON)")->required();
  gen_trk->add_option("--truth", gtrk->truth, "also write true joints (JSONL)");
  gen_trk->callback([gtrk] { run_gen_track(*gtrk); });

  auto gcloud = std::make_shared<GenCloudOpts>();
  CLI::App* gen_cloud = gen->add_subcommand("room-cloud", "synthetic room point cloud");
  gen_cloud->add_option("--seed", gcloud->seed, "layout seed");
  gen_cloud->add_option("--spacing", gcloud->spacing, "sample spacing, m");
  gen_cloud->add_option("--out", gcloud->out, "point cloud output (CSV)")->required();
  gen_cloud->callback([gcloud] { run_gen_cloud(*gcloud); });

  auto gsafe = std::make_shared<GenSafetyOpts>();
  CLI::App* gen_safe = gen->add_subcommand("safety-scenario", "synthetic coexistence scenario");
  gen_safe->add_option("--kind", gsafe->kind, "scenario family")
      ->check(CLI::IsMember({"benchmark", "adversarial"}));
  gen_safe->add_option("--policy", gsafe->policy, "trigger policy")
      ->check(CLI::IsMember({"non_aware", "static", "dynamic", "dynamic_learned"}));
  gen_safe->add_option("--radius", gsafe->radius, "static trigger radius, m");
  gen_safe->add_option("--seed", gsafe->seed, "scenario seed");
  gen_safe->add_option("--out", gsafe->out, "scenario output (JSON)")->required();
  gen_safe->add_option("--recording", gsafe->recording, "skeleton recording output")->required();
  gen_safe->callback([gsafe] { run_gen_safety(*gsafe); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "omnikit: %s\n", e.what());
    return 3;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "omnikit: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace omnikit::cli

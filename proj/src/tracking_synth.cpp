#include "omnikit/tracking_synth.hpp"

#include <cmath>

#include "omnikit/calibration.hpp"
#include "omnikit/error.hpp"

namespace omnikit::track {

std::array<Eigen::Vector3d, kNumJoints> skeleton_template() {
  std::array<Eigen::Vector3d, kNumJoints> j{};
  j[0] = {0.10, 0.0, 1.62};  // nose
  j[1] = {0.09, 0.035, 1.66};
  j[2] = {0.09, -0.035, 1.66};
  j[3] = {0.02, 0.075, 1.62};
  j[4] = {0.02, -0.075, 1.62};
  j[5] = {0.0, 0.19, 1.45};  // shoulders
  j[6] = {0.0, -0.19, 1.45};
  j[7] = {0.02, 0.24, 1.19};  // elbows
  j[8] = {0.02, -0.24, 1.19};
  j[9] = {0.05, 0.26, 0.95};  // wrists
  j[10] = {0.05, -0.26, 0.95};
  j[11] = {0.0, 0.10, 1.00};  // hips
  j[12] = {0.0, -0.10, 1.00};
  j[13] = {0.02, 0.105, 0.55};
  j[14] = {0.02, -0.105, 0.55};
  j[15] = {0.0, 0.11, 0.10};
  j[16] = {0.0, -0.11, 0.10};
  j[17] = {0.14, 0.10, 0.03};  // left foot: big toe, small toe, heel
  j[18] = {0.12, 0.145, 0.03};
  j[19] = {-0.05, 0.11, 0.04};
  j[20] = {0.14, -0.10, 0.03};
  j[21] = {0.12, -0.145, 0.03};
  j[22] = {-0.05, -0.11, 0.04};
  for (int side = 0; side < 2; ++side) {
    const double sy = side == 0 ? 1.0 : -1.0;
    const int base = 23 + side * 21;
    const Eigen::Vector3d wrist(0.05, sy * 0.26, 0.95);
    j[static_cast<size_t>(base)] = wrist + Eigen::Vector3d(0.02, 0.0, -0.03);
    int n = 1;
    for (int finger = 0; finger < 5; ++finger) {
      const double spread = (finger - 2) * 0.012;
      for (int seg = 1; seg <= 4; ++seg) {
        j[static_cast<size_t>(base + n)] =
            wrist + Eigen::Vector3d(0.03 + 0.018 * seg, sy * 0.01 + spread, -0.04 - 0.012 * seg);
        ++n;
      }
    }
  }
  return j;
}

TrackingScene make_tracking_scene(std::uint64_t seed, const TrackingSceneOptions& opts) {
  if (opts.n_people < 1 || opts.n_cameras < 2 || opts.n_frames < 1)
    fail("BadInput", "make_tracking_scene: degenerate scene request");

  TrackingScene scene;
  scene.cameras = calib::generate_calib_scene(seed, opts.n_cameras, 1, 0.0).cameras;

  SplitRng root(seed);
  SplitRng path_rng = root.split(1);

  const auto tmpl = skeleton_template();
  struct Path {
    Eigen::Vector2d base;
    double radius;
    double omega;
    double phase;
    double scale;
  };
  std::vector<Path> paths;
  for (int p = 0; p < opts.n_people; ++p) {
    Path path;
    const double spread = opts.n_people > 1 ? 1.7 : 0.0;
    path.base = {(p - 0.5 * (opts.n_people - 1)) * spread, (p % 2 == 0 ? 0.25 : -0.25)};
    path.radius = 0.5;
    // shared angular rate and phase: drift circles translate in lockstep and
    // the pairwise separations stay fixed at the base spacing
    path.omega = opts.speed / path.radius;
    path.phase = 0.9;
    path.scale = path_rng.uniform(0.96, 1.04);
    paths.push_back(path);
  }

  scene.truth.resize(static_cast<size_t>(opts.n_frames));
  scene.reports.resize(static_cast<size_t>(opts.n_frames));
  for (int f = 0; f < opts.n_frames; ++f) {
    const double t = f / scene.fps;
    auto& people = scene.truth[static_cast<size_t>(f)];
    people.resize(static_cast<size_t>(opts.n_people));
    for (int p = 0; p < opts.n_people; ++p) {
      const Path& path = paths[static_cast<size_t>(p)];
      const double a = path.omega * t + path.phase;
      const Eigen::Vector2d c = path.base + path.radius * Eigen::Vector2d(std::cos(a), std::sin(a));
      const double heading = a + M_PI / 2;  // tangent direction
      Eigen::Matrix3d R = so3_exp(Eigen::Vector3d(0, 0, heading));
      const double sway = 0.02 * std::sin(2 * M_PI * 0.5 * t + p);
      for (int j = 0; j < kNumJoints; ++j) {
        Eigen::Vector3d local = tmpl[static_cast<size_t>(j)] * path.scale;
        if (j == 9 || j == 10 || (j >= 23)) local.z() += sway;  // arms drift gently
        people[static_cast<size_t>(p)][static_cast<size_t>(j)] =
            Eigen::Vector3d(c.x(), c.y(), 0) + R * local;
      }
    }

    SplitRng frame_rng = root.split(0x100000 + static_cast<std::uint64_t>(f));
    auto& frame_reports = scene.reports[static_cast<size_t>(f)];
    for (size_t ci = 0; ci < scene.cameras.size(); ++ci) {
      const CameraModel& cam = scene.cameras[ci];
      SplitRng cam_rng = frame_rng.split(static_cast<std::uint64_t>(ci));
      KeypointReport report;
      report.camera_id = calib::numeric_id(cam);
      report.frame = f;
      for (int p = 0; p < opts.n_people; ++p) {
        if (opts.miss_rate > 0 && cam_rng.uniform01() < opts.miss_rate) continue;
        PersonDetection det;
        det.keypoints.resize(kNumJoints);
        double lo_u = 1e18, lo_v = 1e18, hi_u = -1e18, hi_v = -1e18;
        int visible = 0;
        for (int j = 0; j < kNumJoints; ++j) {
          const Eigen::Vector3d& pt = people[static_cast<size_t>(p)][static_cast<size_t>(j)];
          Keypoint kp;
          if (cam.frustum_visible(pt, 0.3, 9.0)) {
            Pixel px = cam.project(pt);
            px.u += cam_rng.normal(0, opts.noise_px);
            px.v += cam_rng.normal(0, opts.noise_px);
            kp.px = px;
            kp.score_x = cam_rng.uniform(4.0, 9.0);
            kp.score_y = cam_rng.uniform(4.0, 9.0);
            ++visible;
            lo_u = std::min(lo_u, px.u);
            hi_u = std::max(hi_u, px.u);
            lo_v = std::min(lo_v, px.v);
            hi_v = std::max(hi_v, px.v);
          } else {
            kp.px = {0.0, 0.0};
            kp.score_x = kp.score_y = 0.2;
          }
          det.keypoints[static_cast<size_t>(j)] = kp;
        }
        bool torso_ok = true;
        for (int tj : kTorsoJoints)
          torso_ok = torso_ok && det.keypoints[static_cast<size_t>(tj)].confidence() > kScoreGate;
        if (visible < 8 || !torso_ok) continue;  // person effectively out of this view
        det.bbox = {lo_u - 10, lo_v - 10, hi_u - lo_u + 20, hi_v - lo_v + 20};
        report.persons.push_back(std::move(det));
      }
      frame_reports.push_back(std::move(report));
    }
  }
  return scene;
}

}  // namespace omnikit::track

#pragma once

#include <cstdint>
#include <vector>

#include "omnikit/tracking.hpp"

namespace omnikit::track {

struct TrackingScene {
  std::vector<CameraModel> cameras;
  // truth[frame][person] = joint positions in world coordinates
  std::vector<std::vector<std::array<Eigen::Vector3d, kNumJoints>>> truth;
  std::vector<std::vector<KeypointReport>> reports;  // per frame, one per camera
  double fps = 30.0;
};

struct TrackingSceneOptions {
  int n_people = 3;
  int n_cameras = 40;
  int n_frames = 300;
  double noise_px = 1.0;
  double miss_rate = 0.0;  // chance a person drops from one camera's report
  double speed = 0.05;     // m/s along circular drift paths
};

// people on non-crossing circular drifts inside the camera ring, skeleton
// joints projected with noise; score scale keeps visible joints above the
// confidence gate and invisible ones below it
TrackingScene make_tracking_scene(std::uint64_t seed, const TrackingSceneOptions& opts = {});

// joint offsets of the canonical standing skeleton (x forward, y left, z up)
std::array<Eigen::Vector3d, kNumJoints> skeleton_template();

}  // namespace omnikit::track

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "omnikit/geometry.hpp"
#include "omnikit/one_euro.hpp"
#include "omnikit/rng.hpp"

namespace omnikit::track {

// 65 non-face keypoints of the 133-point whole-body layout: body 0-16,
// feet 17-22, then both 21-point hands
constexpr int kNumJoints = 65;
extern const std::array<int, kNumJoints> kWholeBodyIndex;
constexpr std::array<int, 4> kTorsoJoints{5, 6, 11, 12};  // shoulders, hips
constexpr int kLeftHip = 11;
constexpr int kRightHip = 12;
constexpr double kScoreGate = 3.0;

struct Keypoint {
  Pixel px;
  double score_x = 0.0;
  double score_y = 0.0;
  double confidence() const;
};

struct PersonDetection {
  std::array<double, 4> bbox{};  // x, y, w, h
  std::vector<Keypoint> keypoints;

  // pixel mean of the torso keypoints
  Pixel torso_centroid() const;
  Pixel hip_midpoint() const;
};

struct KeypointReport {
  int camera_id = 0;
  std::int64_t frame = 0;
  std::vector<PersonDetection> persons;
};

// a frame is processed once enough active cameras reported it
bool promote_frame(const std::set<int>& active_cameras,
                   const std::map<std::int64_t, std::set<int>>& reports_by_frame,
                   std::int64_t frame);

enum class TrackState { tentative, confirmed, pruned };

struct PersonTrack {
  int id = -1;
  std::array<Eigen::Vector3d, kNumJoints> joints{};
  std::array<bool, kNumJoints> valid{};
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/frame, norm <= 0.5
  int n_miss = 0;
  int tentative_count = 0;
  TrackState state = TrackState::tentative;
  std::int64_t last_seen = 0;

  Eigen::Vector3d hip_mid() const;
  std::array<Eigen::Vector3d, kNumJoints> predict() const;  // joints + velocity * n_miss
};

constexpr double kVelocityClamp = 0.5;  // m/frame
constexpr double kVelocityMomentum = 0.7;

// EMA update of the track velocity from a hip displacement over gap frames
Eigen::Vector3d updated_velocity(const Eigen::Vector3d& velocity,
                                 const Eigen::Vector3d& displacement, int gap_frames);

// per-camera track -> detection index (-1 unmatched), Hungarian under a
// depth-adaptive pixel gate tau_base * d_ref / depth
std::map<int, std::vector<int>> associate_stage1(const std::vector<PersonTrack>& tracks,
                                                 const std::vector<KeypointReport>& frame_reports,
                                                 const std::vector<CameraModel>& cameras,
                                                 double tau_base = 150.0, double d_ref = 3.0);

struct NewCandidate {
  Eigen::Vector3d hip = Eigen::Vector3d::Zero();
  std::map<int, int> claimed;  // camera_id -> person index
};

// pairwise hip-midpoint triangulation of unmatched detections, greedy
// acceptance by inlier count with at least min_support cameras
std::vector<NewCandidate> associate_stage2(const std::vector<KeypointReport>& frame_reports,
                                           const std::map<int, std::vector<bool>>& used,
                                           const std::vector<CameraModel>& cameras,
                                           double inlier_px = 20.0, int min_support = 3);

struct ReIdEntry {
  int old_id = -1;
  Eigen::Vector3d last_position = Eigen::Vector3d::Zero();
  std::int64_t expiry_frame = 0;
};

struct ReIdCache {
  std::vector<ReIdEntry> entries;
};

constexpr int kConfirmStreak = 3;
constexpr int kPruneAfter = 60;    // unmatched frames
constexpr int kCacheFrames = 90;   // entries valid strictly before expiry_frame
constexpr double kReIdRadius = 1.0;

// state transitions, pruning into the cache, and id assignment for births;
// births must carry triangulated joints, their id field is overwritten
void update_lifecycle(std::vector<PersonTrack>& tracks, const std::vector<bool>& matched,
                      std::vector<PersonTrack>& births, ReIdCache& cache, std::int64_t frame,
                      int& next_id);

struct TrackerOptions {
  double fps = 30.0;
  double tau_base = 150.0;
  double d_ref = 3.0;
  double ransac_px = 2.0;
  double stage2_px = 20.0;
  int min_support = 3;
  int joint_reset_frames = 10;
  std::uint64_t seed = 0;
};

class Tracker {
 public:
  explicit Tracker(std::vector<CameraModel> cameras, TrackerOptions opts = {});

  // reports for one promoted frame, at most one per camera
  void step(std::int64_t frame, const std::vector<KeypointReport>& reports);

  const std::vector<PersonTrack>& tracks() const { return tracks_; }
  const ReIdCache& cache() const { return cache_; }
  std::vector<const PersonTrack*> confirmed() const;

 private:
  struct JointFilter {
    std::array<OneEuroState, 3> axis{};
    std::int64_t last_frame = -1;
  };
  struct TrackAux {
    std::array<JointFilter, kNumJoints> filters{};
  };

  std::optional<Eigen::Vector3d> triangulate_joint(
      int joint, const std::vector<std::pair<int, const PersonDetection*>>& views,
      SplitRng& rng) const;
  void refresh_track(PersonTrack& track, TrackAux& aux,
                     const std::vector<std::pair<int, const PersonDetection*>>& views,
                     std::int64_t frame, SplitRng& rng);

  std::vector<CameraModel> cameras_;
  std::map<int, int> camera_index_;
  TrackerOptions opts_;
  std::vector<PersonTrack> tracks_;
  std::vector<TrackAux> aux_;
  ReIdCache cache_;
  SplitRng root_;
  int next_id_ = 0;
};

}  // namespace omnikit::track

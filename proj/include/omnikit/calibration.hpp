#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omnikit/geometry.hpp"
#include "omnikit/rng.hpp"

namespace omnikit::calib {

struct BoardModel {
  int id = 0;
  std::vector<Eigen::Vector3d> corners;  // board frame, z = 0

  static BoardModel grid(int id, int rows, int cols, double pitch_m);
};

// camera ids in this module are numeric strings; SchemaError otherwise
int numeric_id(const CameraModel& cam);

struct CornerObservation {
  int camera_id = 0;
  int board_id = 0;
  int corner_index = 0;
  Pixel pixel;
};

struct PoseGraphEdge {
  int camera_id = 0;
  int board_id = 0;
  RigidPose cam_from_board;
  double residual = 0.0;  // mean reprojection error of the PnP fit, px
};

struct PoseGraph {
  std::vector<PoseGraphEdge> edges;
};

struct UnifiedPoses {
  std::map<int, RigidPose> camera_pose;  // world -> camera, same sense as CameraModel.pose
  std::map<int, RigidPose> board_pose;   // board -> world
};

// Planar PnP: homography initialization, LM refinement, reflection correction
// so the board normal faces the camera. `cam` carries intrinsics only.
RigidPose solve_pnp(const BoardModel& board, const std::vector<CornerObservation>& obs,
                    const CameraModel& cam);

// Chains every node to the Board-0 frame along minimum-cumulative-residual
// paths from the most-connected camera (ties: lowest id).
UnifiedPoses unify_pose_graph(const PoseGraph& graph);

enum class BaMode { extrinsics_only, full, full_with_intrinsics };

struct BaOptions {
  BaMode mode = BaMode::full;
  int max_iters = 200;
};

struct BaProblemData {
  std::vector<BoardModel> boards;
  std::vector<CameraModel> cameras;        // poses = initial extrinsics
  std::map<int, RigidPose> board_world;    // initial board poses (board -> world)
  std::vector<CornerObservation> observations;
};

struct BaSolution {
  std::vector<CameraModel> cameras;
  std::map<int, RigidPose> board_world;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
};

// Board 0 is the gauge and never moves.
BaSolution bundle_adjust(const BaProblemData& data, const BaOptions& opts = {});

// Robust multi-view refinement of a single board pose with fixed extrinsics;
// Cauchy(2 px) stage then Huber(1 px) stage.
RigidPose refine_board_pose_multiview(const BoardModel& board,
                                      const std::vector<CornerObservation>& obs,
                                      const std::vector<CameraModel>& cameras,
                                      const RigidPose& init);

struct CalibrationStats {
  double mean_px = 0.0;
  double std_px = 0.0;
  double frac_le_1px = 0.0;
  double frac_le_2px = 0.0;
  int count = 0;
};

CalibrationStats reprojection_stats(const std::vector<CameraModel>& cameras,
                                    const std::map<int, RigidPose>& board_world,
                                    const std::vector<BoardModel>& boards,
                                    const std::vector<CornerObservation>& obs);

// Synthetic rig: cameras on inward-looking rings over a room-scale floor,
// boards on floor and walls, observations with optional pixel noise.
struct CalibScene {
  std::vector<CameraModel> cameras;     // ground truth
  std::vector<BoardModel> boards;
  std::vector<RigidPose> board_world;   // ground truth, board -> world
  std::vector<CornerObservation> observations;
  double room_w = 0.0, room_l = 0.0, room_h = 0.0;
};

CalibScene generate_calib_scene(std::uint64_t seed, int n_cameras, int n_boards, double noise_px);

// Full pipeline: per-pair PnP -> pose graph -> unification -> two-phase
// bundle adjustment. Returns the refined rig expressed in the Board-0 frame.
struct PipelineResult {
  std::vector<CameraModel> cameras;
  std::map<int, RigidPose> board_world;
  CalibrationStats stats;
};

PipelineResult calibrate_pipeline(const std::vector<BoardModel>& boards,
                                  const std::vector<CameraModel>& intrinsics,
                                  const std::vector<CornerObservation>& obs, BaMode mode);

}  // namespace omnikit::calib

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "omnikit/calibration.hpp"
#include "omnikit/geometry.hpp"

namespace omnikit {

// Calibration file: JSON array of cameras (or an object with a "cameras"
// key). T_world_cam holds the 4x4 world-to-camera matrix (row major), i.e.
// exactly CameraModel::pose. Round-trips are bit exact for every numeric
// field.
std::string cameras_to_json(const std::vector<CameraModel>& cams);
std::vector<CameraModel> cameras_from_json(const std::string& text);

void save_calibration(const std::filesystem::path& path, const std::vector<CameraModel>& cams);
std::vector<CameraModel> load_calibration(const std::filesystem::path& path);

// Observations file: board geometry, camera intrinsics (poses identity), and
// the per-corner pixel measurements a calibration run consumes.
struct ObservationSet {
  std::vector<calib::BoardModel> boards;
  std::vector<CameraModel> cameras;
  std::vector<calib::CornerObservation> observations;
};

void save_observations(const std::filesystem::path& path, const ObservationSet& set);
ObservationSet load_observations(const std::filesystem::path& path);

}  // namespace omnikit

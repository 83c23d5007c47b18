#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omnikit/geometry.hpp"

namespace omnikit::cov {

// Per-voxel camera visibility, one bit per camera packed into 64-bit words.
struct VisibilityMatrix {
  std::vector<std::string> camera_ids;
  std::vector<Eigen::Vector3d> voxel_centers;
  double resolution = 0.01;
  int words = 0;                      // words per voxel row
  std::vector<std::uint64_t> masks;   // voxel-major, camera c at word c/64 bit c%64

  int num_cameras() const { return static_cast<int>(camera_ids.size()); }
  int num_voxels() const { return static_cast<int>(voxel_centers.size()); }
  bool visible(int cam, int voxel) const;
};

// Unique occupied grid cells, centers at (i + 0.5) * resolution, sorted by index.
std::vector<Eigen::Vector3d> voxelize(const std::vector<Eigen::Vector3d>& points,
                                      double resolution = 0.01);

constexpr double kDefaultDepthMin = 0.3;
constexpr double kDefaultDepthMax = 8.0;

VisibilityMatrix visibility_matrix(const std::vector<CameraModel>& cameras,
                                   const std::vector<Eigen::Vector3d>& voxels,
                                   double d_min = kDefaultDepthMin,
                                   double d_max = kDefaultDepthMax,
                                   double resolution = 0.01);

// Fraction of voxels seen by at least min_views cameras of the subset
// (indices into F.camera_ids).
double coverage_fraction(const VisibilityMatrix& F, const std::vector<int>& subset, int min_views);

struct SweepRow {
  int count = 0;
  int min_views = 0;
  double mean_coverage = 0.0;
};

// Mean coverage over n_subsets uniformly sampled camera subsets per count,
// rows ordered counts-major then thresholds. Deterministic for a given seed.
std::vector<SweepRow> coverage_sweep(const VisibilityMatrix& F, const std::vector<int>& counts,
                                     int n_subsets, const std::vector<int>& m_list,
                                     std::uint64_t seed);

// Greedy removal order: each step drops the camera whose removal keeps the
// minimum pairwise distance of the remainder largest, ties to the lowest index.
std::vector<int> farthest_point_order(const std::vector<Eigen::Vector3d>& camera_positions);

struct JointVisibility {
  int n_views = 0;
  double bound = 0.0;  // min over visible pairs of 1/sin(ray angle); inf below 2 views
};

JointVisibility joint_visibility_and_bound(const std::vector<CameraModel>& cameras,
                                           const Eigen::Vector3d& joint,
                                           double d_min = kDefaultDepthMin,
                                           double d_max = kDefaultDepthMax);

// Box room shell plus furniture blobs, sampled on a deterministic grid.
std::vector<Eigen::Vector3d> make_room_cloud(std::uint64_t seed, double spacing = 0.05);

}  // namespace omnikit::cov

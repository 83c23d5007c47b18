#include "omnikit/coverage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "omnikit/error.hpp"
#include "omnikit/parallel.hpp"
#include "omnikit/rng.hpp"

namespace omnikit::cov {

bool VisibilityMatrix::visible(int cam, int voxel) const {
  const std::uint64_t word = masks[static_cast<size_t>(voxel) * words + cam / 64];
  return (word >> (cam % 64)) & 1u;
}

std::vector<Eigen::Vector3d> voxelize(const std::vector<Eigen::Vector3d>& points,
                                      double resolution) {
  if (points.empty()) fail("BadInput", "voxelize: empty point set");
  if (!(resolution > 0)) fail("BadInput", "voxelize: resolution must be positive");
  std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> cells;
  cells.reserve(points.size());
  for (const auto& p : points) {
    cells.emplace_back(static_cast<std::int64_t>(std::floor(p.x() / resolution)),
                       static_cast<std::int64_t>(std::floor(p.y() / resolution)),
                       static_cast<std::int64_t>(std::floor(p.z() / resolution)));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(cells.size());
  for (const auto& [ix, iy, iz] : cells) {
    centers.emplace_back((static_cast<double>(ix) + 0.5) * resolution,
                         (static_cast<double>(iy) + 0.5) * resolution,
                         (static_cast<double>(iz) + 0.5) * resolution);
  }
  return centers;
}

VisibilityMatrix visibility_matrix(const std::vector<CameraModel>& cameras,
                                   const std::vector<Eigen::Vector3d>& voxels, double d_min,
                                   double d_max, double resolution) {
  VisibilityMatrix F;
  F.resolution = resolution;
  F.voxel_centers = voxels;
  for (const auto& c : cameras) F.camera_ids.push_back(c.id);
  const int C = static_cast<int>(cameras.size());
  F.words = std::max(1, (C + 63) / 64);
  F.masks.assign(static_cast<size_t>(voxels.size()) * F.words, 0);

  const int V = static_cast<int>(voxels.size());
  auto fill_range = [&](int lo, int hi) {
    for (int v = lo; v < hi; ++v) {
      std::uint64_t* row = F.masks.data() + static_cast<size_t>(v) * F.words;
      for (int c = 0; c < C; ++c) {
        if (cameras[static_cast<size_t>(c)].frustum_visible(voxels[static_cast<size_t>(v)], d_min,
                                                            d_max)) {
          row[c / 64] |= std::uint64_t{1} << (c % 64);
        }
      }
    }
  };
  parallel_ranges(V, 4096, fill_range);
  return F;
}

namespace {

std::vector<std::uint64_t> subset_mask(const VisibilityMatrix& F, const std::vector<int>& subset) {
  std::vector<std::uint64_t> mask(static_cast<size_t>(F.words), 0);
  for (int idx : subset) {
    if (idx < 0 || idx >= F.num_cameras()) fail("BadInput", "camera index out of range");
    mask[static_cast<size_t>(idx / 64)] |= std::uint64_t{1} << (idx % 64);
  }
  return mask;
}

// voxels with >= min_views set bits under the mask
std::int64_t covered_count(const VisibilityMatrix& F, const std::vector<std::uint64_t>& mask,
                           int min_views) {
  std::int64_t covered = 0;
  const size_t W = static_cast<size_t>(F.words);
  for (int v = 0; v < F.num_voxels(); ++v) {
    const std::uint64_t* row = F.masks.data() + static_cast<size_t>(v) * W;
    int seen = 0;
    for (size_t w = 0; w < W; ++w) seen += std::popcount(row[w] & mask[w]);
    if (seen >= min_views) ++covered;
  }
  return covered;
}

}  // namespace

double coverage_fraction(const VisibilityMatrix& F, const std::vector<int>& subset,
                         int min_views) {
  if (min_views < 1) fail("BadInput", "coverage threshold must be at least 1");
  if (F.num_voxels() == 0) return 0.0;
  const auto mask = subset_mask(F, subset);
  return static_cast<double>(covered_count(F, mask, min_views)) /
         static_cast<double>(F.num_voxels());
}

std::vector<SweepRow> coverage_sweep(const VisibilityMatrix& F, const std::vector<int>& counts,
                                     int n_subsets, const std::vector<int>& m_list,
                                     std::uint64_t seed) {
  const int C = F.num_cameras();
  for (int count : counts)
    if (count < 1 || count > C) fail("BadInput", "subset size exceeds camera count");
  if (n_subsets < 1) fail("BadInput", "need at least one subset");

  SplitRng root(seed);
  std::vector<SweepRow> rows;
  for (int count : counts) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(count));
    std::map<int, double> sums;
    for (int m : m_list) sums[m] = 0.0;
    for (int s = 0; s < n_subsets; ++s) {
      const std::vector<int> subset = rng.sample_subset(C, count);
      const auto mask = subset_mask(F, subset);
      for (int m : m_list) {
        sums[m] += static_cast<double>(covered_count(F, mask, m)) /
                   static_cast<double>(std::max(1, F.num_voxels()));
      }
    }
    for (int m : m_list) rows.push_back({count, m, sums[m] / n_subsets});
  }
  return rows;
}

namespace {

double min_pairwise_excluding(const std::vector<Eigen::Vector3d>& pos,
                              const std::vector<int>& alive, int skip) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < alive.size(); ++i) {
    if (alive[i] == skip) continue;
    for (size_t j = i + 1; j < alive.size(); ++j) {
      if (alive[j] == skip) continue;
      best = std::min(best, (pos[static_cast<size_t>(alive[i])] -
                             pos[static_cast<size_t>(alive[j])])
                                .norm());
    }
  }
  return best;
}

}  // namespace

std::vector<int> farthest_point_order(const std::vector<Eigen::Vector3d>& camera_positions) {
  if (camera_positions.size() < 2) fail("BadInput", "need at least two cameras to order");
  std::vector<int> alive(camera_positions.size());
  for (size_t i = 0; i < alive.size(); ++i) alive[i] = static_cast<int>(i);
  std::vector<int> order;
  while (alive.size() > 1) {
    int pick = alive.front();
    double best = -1.0;
    for (int cand : alive) {
      const double d = min_pairwise_excluding(camera_positions, alive, cand);
      if (d > best) {
        best = d;
        pick = cand;
      }
    }
    order.push_back(pick);
    alive.erase(std::find(alive.begin(), alive.end(), pick));
  }
  order.push_back(alive.front());
  return order;
}

JointVisibility joint_visibility_and_bound(const std::vector<CameraModel>& cameras,
                                           const Eigen::Vector3d& joint, double d_min,
                                           double d_max) {
  std::vector<Eigen::Vector3d> rays;
  for (const auto& cam : cameras) {
    if (cam.frustum_visible(joint, d_min, d_max)) {
      rays.push_back((joint - cam.center()).normalized());
    }
  }
  JointVisibility out;
  out.n_views = static_cast<int>(rays.size());
  if (out.n_views < 2) {
    out.bound = std::numeric_limits<double>::infinity();
    return out;
  }
  double max_sin = 0.0;
  for (size_t i = 0; i < rays.size(); ++i)
    for (size_t j = i + 1; j < rays.size(); ++j)
      max_sin = std::max(max_sin, rays[i].cross(rays[j]).norm());
  out.bound = max_sin > 0 ? 1.0 / max_sin : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<Eigen::Vector3d> make_room_cloud(std::uint64_t seed, double spacing) {
  // matches the calibration scene footprint: 5.5 x 4.2 m floor, 2.6 m ceiling
  const double hx = 2.75, hy = 2.1, hz = 2.6;
  std::vector<Eigen::Vector3d> pts;
  const int nx = static_cast<int>(2 * hx / spacing), ny = static_cast<int>(2 * hy / spacing);
  const int nz = static_cast<int>(hz / spacing);
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      pts.emplace_back(-hx + i * spacing, -hy + j * spacing, 0.0);
  for (int k = 0; k <= nz; ++k) {
    for (int i = 0; i <= nx; ++i) {
      pts.emplace_back(-hx + i * spacing, -hy, k * spacing);
      pts.emplace_back(-hx + i * spacing, hy, k * spacing);
    }
    for (int j = 0; j <= ny; ++j) {
      pts.emplace_back(-hx, -hy + j * spacing, k * spacing);
      pts.emplace_back(hx, -hy + j * spacing, k * spacing);
    }
  }
  // furniture: a table slab and a few ellipsoid blobs
  for (double x = -0.6; x <= 0.6; x += spacing)
    for (double y = -0.4; y <= 0.4; y += spacing) pts.emplace_back(x, y, 0.75);
  SplitRng rng(seed);
  for (int blob = 0; blob < 4; ++blob) {
    const Eigen::Vector3d c(rng.uniform(-1.8, 1.8), rng.uniform(-1.3, 1.3), rng.uniform(0.3, 1.2));
    const double r = rng.uniform(0.15, 0.35);
    for (int s = 0; s < 400; ++s) {
      Eigen::Vector3d d(rng.normal(), rng.normal(), rng.normal());
      d.normalize();
      pts.emplace_back(c + r * d);
    }
  }
  return pts;
}

}  // namespace omnikit::cov

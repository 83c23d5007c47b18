#include <doctest.h>

#include <cmath>
#include <limits>

#include "omnikit/calibration.hpp"
#include "omnikit/coverage.hpp"
#include "omnikit/error.hpp"
#include "omnikit/rng.hpp"

using namespace omnikit;
using namespace omnikit::cov;
using omnikit::calib::CalibScene;
using omnikit::calib::generate_calib_scene;

namespace {

CameraModel look_at(const Eigen::Vector3d& from, const Eigen::Vector3d& to, int id) {
  CameraModel cam;
  cam.id = std::to_string(id);
  cam.width = 2048;
  cam.height = 1536;
  cam.fx = cam.fy = 1100;
  cam.cx = 1024;
  cam.cy = 768;
  const Eigen::Vector3d fwd = (to - from).normalized();
  Eigen::Vector3d up(0, 0, 1);
  if (std::abs(fwd.dot(up)) > 0.99) up = Eigen::Vector3d(0, 1, 0);
  const Eigen::Vector3d right = fwd.cross(up).normalized();
  const Eigen::Vector3d down = fwd.cross(right).normalized();
  Eigen::Matrix3d R_wc;
  R_wc.col(0) = right;
  R_wc.col(1) = down;
  R_wc.col(2) = fwd;
  cam.pose = RigidPose{R_wc.transpose(), -(R_wc.transpose() * from)};
  return cam;
}

}  // namespace

TEST_SUITE("voxelize") {
  TEST_CASE("cell assignment and dedup") {
    const auto one = voxelize({{0.004, 0.004, 0.004}}, 0.01);
    REQUIRE(one.size() == 1);
    CHECK(one[0].isApprox(Eigen::Vector3d(0.005, 0.005, 0.005), 1e-12));

    const auto merged = voxelize({{0.001, 0.001, 0.001}, {0.009, 0.002, 0.0}}, 0.01);
    CHECK(merged.size() == 1);

    const auto neg = voxelize({{-0.004, 0.0, 0.0}}, 0.01);
    CHECK(neg[0].x() == doctest::Approx(-0.005));
  }

  TEST_CASE("dense cube count matches the closed form") {
    // 0.1 m cube sampled at 1 mm with inclusive ends: indices 0..10 per axis
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j)
        for (int k = 0; k <= 100; ++k) pts.emplace_back(i * 1e-3, j * 1e-3, k * 1e-3);
    const auto vox = voxelize(pts, 0.01);
    CHECK(vox.size() == 11u * 11u * 11u);
  }

  TEST_CASE("bad inputs raise") {
    CHECK_THROWS_AS(voxelize({}, 0.01), Error);
    CHECK_THROWS_AS(voxelize({{0, 0, 0}}, 0.0), Error);
  }
}

TEST_SUITE("visibility") {
  TEST_CASE("rows and columns follow the frustum") {
    std::vector<CameraModel> cams;
    cams.push_back(look_at({0, 0, 1}, {5, 0, 1}, 0));   // +x
    cams.push_back(look_at({0, 0, 1}, {-5, 0, 1}, 1));  // -x
    std::vector<Eigen::Vector3d> voxels = {{2, 0, 1}, {3, 0.2, 1.1}, {2.5, -0.1, 0.9}};
    const VisibilityMatrix F = visibility_matrix(cams, voxels, 0.3, 8.0);
    for (int v = 0; v < 3; ++v) {
      CHECK(F.visible(0, v));
      CHECK_FALSE(F.visible(1, v));
    }
  }

  TEST_CASE("ring row sums equal an independent projection loop") {
    std::vector<CameraModel> cams;
    for (int c = 0; c < 12; ++c) {
      const double a = 2 * M_PI * c / 12;
      cams.push_back(look_at({2.2 * std::cos(a), 2.2 * std::sin(a), 1.8}, {0, 0, 0.8}, c));
      cams.back().dist = {-0.1, 0.02, 0.0003, -0.0002, 0.001};
    }
    SplitRng rng(400);
    std::vector<Eigen::Vector3d> voxels;
    for (int i = 0; i < 500; ++i)
      voxels.emplace_back(rng.uniform(-1.5, 1.5), rng.uniform(-1.2, 1.2), rng.uniform(0, 2.2));
    const VisibilityMatrix F = visibility_matrix(cams, voxels, 0.3, 8.0);

    for (size_t v = 0; v < voxels.size(); ++v) {
      int brute = 0;
      for (const auto& cam : cams) {
        const Eigen::Vector3d pc = cam.pose.apply(voxels[v]);
        if (pc.z() < 0.3 || pc.z() > 8.0) continue;
        Pixel px;
        try {
          px = cam.project_camera(pc);
        } catch (const Error&) {
          continue;
        }
        if (px.u >= 0 && px.u < cam.width && px.v >= 0 && px.v < cam.height) ++brute;
      }
      int fast = 0;
      for (int c = 0; c < 12; ++c) fast += F.visible(c, static_cast<int>(v)) ? 1 : 0;
      CHECK(fast == brute);
    }
  }
}

TEST_SUITE("coverage_fraction") {
  TEST_CASE("hand-counted matrix") {
    // 2 cameras, 3 voxels: F = [[1,1,0],[1,0,0]]
    VisibilityMatrix F;
    F.camera_ids = {"0", "1"};
    F.voxel_centers = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    F.words = 1;
    F.masks = {0b11, 0b01, 0b00};
    CHECK(coverage_fraction(F, {0, 1}, 2) == doctest::Approx(1.0 / 3.0));
    CHECK(coverage_fraction(F, {0, 1}, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(coverage_fraction(F, {}, 1) == 0.0);
    CHECK(coverage_fraction(F, {1}, 1) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(coverage_fraction(F, {0}, 0), Error);
    CHECK_THROWS_AS(coverage_fraction(F, {5}, 1), Error);
  }

  TEST_CASE("exact monotonicity in threshold and subset") {
    const CalibScene scene = generate_calib_scene(31, 16, 3, 0.0);
    std::vector<Eigen::Vector3d> voxels;
    SplitRng rng(401);
    for (int i = 0; i < 800; ++i)
      voxels.emplace_back(rng.uniform(-2.5, 2.5), rng.uniform(-1.9, 1.9), rng.uniform(0, 2.4));
    const VisibilityMatrix F = visibility_matrix(scene.cameras, voxels);

    std::vector<int> grow;
    double prev_subset = 0.0;
    for (int c = 0; c < 16; ++c) {
      grow.push_back(c);
      const double now = coverage_fraction(F, grow, 2);
      CHECK(now >= prev_subset);
      prev_subset = now;
    }
    double prev_m = 1.1;
    for (int m : {1, 2, 4, 6, 10, 15}) {
      const double now = coverage_fraction(F, grow, m);
      CHECK(now <= prev_m);
      prev_m = now;
    }
  }
}

TEST_SUITE("coverage_sweep") {
  TEST_CASE("full count collapses to the exact fraction") {
    const CalibScene scene = generate_calib_scene(32, 10, 3, 0.0);
    std::vector<Eigen::Vector3d> voxels;
    SplitRng rng(402);
    for (int i = 0; i < 400; ++i)
      voxels.emplace_back(rng.uniform(-2, 2), rng.uniform(-1.5, 1.5), rng.uniform(0, 2.2));
    const VisibilityMatrix F = visibility_matrix(scene.cameras, voxels);

    std::vector<int> all(10);
    for (int i = 0; i < 10; ++i) all[i] = i;
    const auto rows = coverage_sweep(F, {10}, 25, {1, 2, 4}, 7);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
      CHECK(r.count == 10);
      CHECK(r.mean_coverage == doctest::Approx(coverage_fraction(F, all, r.min_views)));
    }
  }

  TEST_CASE("deterministic and monotone in camera count") {
    const CalibScene scene = generate_calib_scene(33, 12, 3, 0.0);
    std::vector<Eigen::Vector3d> voxels;
    SplitRng rng(403);
    for (int i = 0; i < 400; ++i)
      voxels.emplace_back(rng.uniform(-2, 2), rng.uniform(-1.5, 1.5), rng.uniform(0, 2.2));
    const VisibilityMatrix F = visibility_matrix(scene.cameras, voxels);

    const std::vector<int> counts = {2, 4, 6, 8, 10, 12};
    const auto a = coverage_sweep(F, counts, 25, {1, 2, 4}, 99);
    const auto b = coverage_sweep(F, counts, 25, {1, 2, 4}, 99);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].mean_coverage == b[i].mean_coverage);

    for (int m : {1, 2, 4}) {
      double prev = -1.0;
      for (const auto& r : a) {
        if (r.min_views != m) continue;
        CHECK(r.mean_coverage >= prev - 0.02);
        prev = r.mean_coverage;
      }
    }
  }
}

TEST_SUITE("farthest_point") {
  TEST_CASE("collinear, pair, and square layouts") {
    const auto tri = farthest_point_order({{0, 0, 0}, {1, 0, 0}, {10, 0, 0}});
    CHECK(tri[0] == 1);

    const auto pair = farthest_point_order({{0, 0, 0}, {3, 0, 0}});
    CHECK(pair[0] == 0);
    CHECK(pair[1] == 1);

    const double s = 2.0;
    const auto square = farthest_point_order({{0, 0, 0}, {s, 0, 0}, {s, s, 0}, {0, s, 0}});
    std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {s, 0, 0}, {s, s, 0}, {0, s, 0}};
    std::vector<int> remaining = {0, 1, 2, 3};
    remaining.erase(std::find(remaining.begin(), remaining.end(), square[0]));
    double min_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < remaining.size(); ++i)
      for (size_t j = i + 1; j < remaining.size(); ++j)
        min_d = std::min(min_d, (pos[static_cast<size_t>(remaining[i])] -
                                 pos[static_cast<size_t>(remaining[j])])
                                    .norm());
    CHECK(min_d == doctest::Approx(s));
  }

  TEST_CASE("matches brute-force greedy on random layouts") {
    for (int trial = 0; trial < 20; ++trial) {
      SplitRng rng(500 + static_cast<std::uint64_t>(trial));
      const int n = rng.uniform_int(2, 10);
      std::vector<Eigen::Vector3d> pos;
      for (int i = 0; i < n; ++i)
        pos.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 2));

      // independent greedy: recompute min pairwise distance from scratch each step
      std::vector<int> alive(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) alive[static_cast<size_t>(i)] = i;
      std::vector<int> expect;
      while (alive.size() > 1) {
        int best_cand = -1;
        double best_d = -1.0;
        for (int cand : alive) {
          double d = std::numeric_limits<double>::infinity();
          for (size_t i = 0; i < alive.size(); ++i)
            for (size_t j = i + 1; j < alive.size(); ++j) {
              if (alive[i] == cand || alive[j] == cand) continue;
              d = std::min(d, (pos[static_cast<size_t>(alive[i])] -
                               pos[static_cast<size_t>(alive[j])])
                                  .norm());
            }
          if (d > best_d) {
            best_d = d;
            best_cand = cand;
          }
        }
        expect.push_back(best_cand);
        alive.erase(std::find(alive.begin(), alive.end(), best_cand));
      }
      expect.push_back(alive.front());

      CHECK(farthest_point_order(pos) == expect);
    }
  }

  TEST_CASE("reverse order never shrinks the spread") {
    SplitRng rng(510);
    std::vector<Eigen::Vector3d> pos;
    for (int i = 0; i < 14; ++i)
      pos.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 2.5));
    const auto order = farthest_point_order(pos);

    std::vector<int> kept;
    double prev = std::numeric_limits<double>::infinity();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      kept.push_back(*it);
      if (kept.size() < 2) continue;
      double min_d = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < kept.size(); ++i)
        for (size_t j = i + 1; j < kept.size(); ++j)
          min_d = std::min(min_d, (pos[static_cast<size_t>(kept[i])] -
                                   pos[static_cast<size_t>(kept[j])])
                                      .norm());
      CHECK(min_d <= prev + 1e-12);
      prev = min_d;
    }
  }
}

TEST_SUITE("joint_visibility") {
  TEST_CASE("textbook angles") {
    const Eigen::Vector3d joint(0, 0, 1);
    std::vector<CameraModel> ninety = {look_at({-2, 0, 1}, joint, 0), look_at({0, -2, 1}, joint, 1)};
    const auto b90 = joint_visibility_and_bound(ninety, joint);
    CHECK(b90.n_views == 2);
    CHECK(b90.bound == doctest::Approx(1.0).epsilon(1e-9));

    // 30 degrees apart as seen from the joint
    const double r = 2.0;
    std::vector<CameraModel> thirty = {
        look_at({r, 0, 1}, joint, 0),
        look_at({r * std::cos(M_PI / 6), r * std::sin(M_PI / 6), 1}, joint, 1)};
    const auto b30 = joint_visibility_and_bound(thirty, joint);
    CHECK(b30.n_views == 2);
    CHECK(b30.bound == doctest::Approx(2.0).epsilon(1e-9));

    std::vector<CameraModel> lone = {look_at({-2, 0, 1}, joint, 0)};
    const auto b1 = joint_visibility_and_bound(lone, joint);
    CHECK(b1.n_views == 1);
    CHECK(std::isinf(b1.bound));
  }

  TEST_CASE("obtuse pairs use the supplement and more views never hurt") {
    const Eigen::Vector3d joint(0, 0, 1);
    // 150 degrees admits the same sine as 30 degrees
    std::vector<CameraModel> wide = {
        look_at({2, 0, 1}, joint, 0),
        look_at({2 * std::cos(5 * M_PI / 6), 2 * std::sin(5 * M_PI / 6), 1}, joint, 1)};
    const auto b150 = joint_visibility_and_bound(wide, joint);
    CHECK(b150.bound == doctest::Approx(2.0).epsilon(1e-9));

    std::vector<CameraModel> more = wide;
    more.push_back(look_at({0, 2, 1}, joint, 2));
    const auto b3 = joint_visibility_and_bound(more, joint);
    CHECK(b3.n_views == 3);
    CHECK(b3.bound <= b150.bound + 1e-12);
    CHECK(b3.bound >= 1.0 - 1e-12);
  }

  TEST_CASE("out-of-frustum cameras are excluded") {
    const Eigen::Vector3d joint(0, 0, 1);
    std::vector<CameraModel> cams = {look_at({-2, 0, 1}, joint, 0),
                                     look_at({0, -2, 1}, joint, 1),
                                     look_at({2, 0, 1}, {2, 5, 1}, 2)};  // looks away
    const auto jv = joint_visibility_and_bound(cams, joint);
    CHECK(jv.n_views == 2);
  }
}

TEST_SUITE("room_cloud") {
  TEST_CASE("deterministic, bounded, and dense enough") {
    const auto a = make_room_cloud(11, 0.05);
    const auto b = make_room_cloud(11, 0.05);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() > 20000);
    for (size_t i = 0; i < a.size(); i += 97) {
      CHECK(a[i].x() == b[i].x());
      CHECK(a[i].y() == b[i].y());
      CHECK(a[i].z() == b[i].z());
    }
    for (const auto& p : a) {
      CHECK(std::abs(p.x()) <= 2.75 + 0.36);
      CHECK(std::abs(p.y()) <= 2.1 + 0.36);
      CHECK(p.z() >= -0.36);
      CHECK(p.z() <= 2.6 + 1e-9);
    }
  }

  TEST_CASE("paper-scale rig covers the room") {
    const CalibScene scene = generate_calib_scene(1, 24, 4, 0.0);
    const auto cloud = make_room_cloud(11, 0.1);
    const auto voxels = voxelize(cloud, 0.1);
    const VisibilityMatrix F = visibility_matrix(scene.cameras, voxels, 0.3, 8.0, 0.1);
    std::vector<int> all(scene.cameras.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    CHECK(coverage_fraction(F, all, 4) >= 0.80);
    CHECK(coverage_fraction(F, all, 1) >= coverage_fraction(F, all, 4));
  }
}

#include "omnikit/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "omnikit/error.hpp"
#include "omnikit/optim.hpp"

namespace omnikit::calib {

int numeric_id(const CameraModel& cam) {
  try {
    size_t pos = 0;
    const int id = std::stoi(cam.id, &pos);
    if (pos != cam.id.size()) throw std::invalid_argument("trailing");
    return id;
  } catch (const std::exception&) {
    fail("SchemaError", "camera id '" + cam.id + "' is not numeric");
  }
}

BoardModel BoardModel::grid(int id, int rows, int cols, double pitch_m) {
  BoardModel b;
  b.id = id;
  const double x0 = -0.5 * (cols - 1) * pitch_m;
  const double y0 = -0.5 * (rows - 1) * pitch_m;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      b.corners.emplace_back(x0 + c * pitch_m, y0 + r * pitch_m, 0.0);
  return b;
}

namespace {

constexpr double kBehindPenalty = 1e6;

void reproject_residual(const CameraModel& cam, const Eigen::Vector3d& cam_point,
                        const Pixel& observed, double* out) {
  if (cam_point.z() <= 1e-9) {
    out[0] = kBehindPenalty;
    out[1] = kBehindPenalty;
    return;
  }
  const Pixel p = cam.project_camera(cam_point);
  out[0] = p.u - observed.u;
  out[1] = p.v - observed.v;
}

// Single-pose reprojection problem: the pose maps board points into the
// camera frame of each listed view.
class PoseReprojProblem : public LeastSquaresProblem {
 public:
  struct Term {
    const CameraModel* cam;
    Eigen::Vector3d point;  // board/local frame
    Pixel observed;
  };

  PoseReprojProblem(RigidPose init, std::vector<Term> terms, bool pose_is_world_to_entity)
      : pose_(init), terms_(std::move(terms)), world_sense_(pose_is_world_to_entity) {}

  int num_params() const override { return 6; }
  int num_residuals() const override { return 2 * static_cast<int>(terms_.size()); }
  int num_blocks() const override { return static_cast<int>(terms_.size()); }
  Block block(int b) const override { return {2 * b, 2, {0, 1, 2, 3, 4, 5}}; }

  void eval_block(int b, const Eigen::VectorXd& p, double* out) const override {
    const RigidPose pose = retract_pose(pose_, p.head<3>(), p.tail<3>());
    const Term& t = terms_[static_cast<size_t>(b)];
    Eigen::Vector3d cam_point;
    if (world_sense_) {
      cam_point = t.cam->pose.apply(pose.apply(t.point));
    } else {
      cam_point = pose.apply(t.point);
    }
    reproject_residual(*t.cam, cam_point, t.observed, out);
  }

  void retract(Eigen::VectorXd& p) override {
    pose_ = retract_pose(pose_, p.head<3>(), p.tail<3>());
    p.setZero();
  }

  const RigidPose& pose() const { return pose_; }

 private:
  RigidPose pose_;
  std::vector<Term> terms_;
  bool world_sense_;
};

double refine_pose(PoseReprojProblem& problem, const RobustLoss& loss, int max_iters = 200) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
  LmOptions opts;
  opts.loss = loss;
  opts.max_iters = max_iters;
  const LmResult res = lm_solve(problem, p, opts);
  return res.final_cost;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d U = svd.matrixU();
    U.col(2) *= -1;
    R = U * svd.matrixV().transpose();
  }
  return R;
}

// DLT homography board plane -> normalized image plane, Hartley-normalized
Eigen::Matrix3d fit_homography(const std::vector<Eigen::Vector2d>& src,
                               const std::vector<Eigen::Vector2d>& dst) {
  auto normalize = [](const std::vector<Eigen::Vector2d>& pts, std::vector<Eigen::Vector2d>& out) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    double scale = 0;
    for (const auto& p : pts) scale += (p - mean).norm();
    scale = std::sqrt(2.0) * static_cast<double>(pts.size()) / std::max(scale, 1e-12);
    out.resize(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) out[i] = scale * (pts[i] - mean);
    Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
    T(0, 0) = T(1, 1) = scale;
    T(0, 2) = -scale * mean.x();
    T(1, 2) = -scale * mean.y();
    return T;
  };

  std::vector<Eigen::Vector2d> s, d;
  const Eigen::Matrix3d Ts = normalize(src, s);
  const Eigen::Matrix3d Td = normalize(dst, d);

  Eigen::MatrixXd A(2 * src.size(), 9);
  for (size_t i = 0; i < src.size(); ++i) {
    const double x = s[i].x(), y = s[i].y();
    const double u = d[i].x(), v = d[i].y();
    A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  if (!h.allFinite()) fail("NoSolution", "homography estimation failed");
  Eigen::Matrix3d H;
  H << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  return Td.inverse() * H * Ts;
}

RigidPose pose_from_homography(const Eigen::Matrix3d& H) {
  const double norm = 2.0 / (H.col(0).norm() + H.col(1).norm());
  Eigen::Vector3d r1 = norm * H.col(0);
  Eigen::Vector3d r2 = norm * H.col(1);
  Eigen::Vector3d t = norm * H.col(2);
  if (t.z() < 0) {
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Eigen::Matrix3d R;
  R.col(0) = r1;
  R.col(1) = r2;
  R.col(2) = r1.cross(r2);
  return {orthonormalize(R), t};
}

// rotate the board by pi about an in-plane axis through its centroid; flips
// the normal while keeping the plane fixed
RigidPose flip_board_pose(const RigidPose& pose, const Eigen::Vector3d& centroid_local) {
  const Eigen::Vector3d c_cam = pose.apply(centroid_local);
  const Eigen::Vector3d n = pose.R.col(2);
  Eigen::Vector3d axis = c_cam.normalized().cross(n);
  if (axis.norm() < 1e-9) axis = pose.R.col(0);
  axis.normalize();
  const Eigen::Matrix3d rot = so3_exp(M_PI * axis);
  return {rot * pose.R, rot * (pose.t - c_cam) + c_cam};
}

double mean_reproj_px(const CameraModel& cam, const RigidPose& board_to_cam,
                      const BoardModel& board, const std::vector<CornerObservation>& obs) {
  double sum = 0;
  for (const auto& o : obs) {
    const Eigen::Vector3d p = board_to_cam.apply(board.corners[static_cast<size_t>(o.corner_index)]);
    if (p.z() <= 1e-9) return kBehindPenalty;
    const Pixel px = cam.project_camera(p);
    sum += std::hypot(px.u - o.pixel.u, px.v - o.pixel.v);
  }
  return sum / static_cast<double>(obs.size());
}

}  // namespace

RigidPose solve_pnp(const BoardModel& board, const std::vector<CornerObservation>& obs,
                    const CameraModel& cam) {
  if (obs.size() < 4) fail("Degenerate", "need at least 4 corners");

  std::vector<Eigen::Vector2d> board_xy, image_n;
  for (const auto& o : obs) {
    const Eigen::Vector3d& c = board.corners.at(static_cast<size_t>(o.corner_index));
    board_xy.emplace_back(c.x(), c.y());
    image_n.push_back(cam.undistort(o.pixel));
  }

  // collinearity check on the observed board points
  {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : board_xy) mean += p;
    mean /= static_cast<double>(board_xy.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : board_xy) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    if (eig.eigenvalues()(0) < 1e-12 * std::max(eig.eigenvalues()(1), 1e-12))
      fail("Degenerate", "observed corners are collinear");
  }

  const RigidPose init = pose_from_homography(fit_homography(board_xy, image_n));
  if (!init.R.allFinite() || !init.t.allFinite()) fail("NoSolution", "homography decomposition failed");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& o : obs) centroid += board.corners[static_cast<size_t>(o.corner_index)];
  centroid /= static_cast<double>(obs.size());

  std::vector<PoseReprojProblem::Term> terms;
  for (const auto& o : obs)
    terms.push_back({&cam, board.corners[static_cast<size_t>(o.corner_index)], o.pixel});

  auto facing = [&](const RigidPose& pose) {
    const Eigen::Vector3d c = pose.apply(centroid);
    return pose.R.col(2).dot(c) < 0.0;
  };

  PoseReprojProblem direct(init, terms, false);
  const double cost_direct = refine_pose(direct, RobustLoss::none_loss());
  PoseReprojProblem flipped(flip_board_pose(direct.pose(), centroid), terms, false);
  const double cost_flipped = refine_pose(flipped, RobustLoss::none_loss());

  const bool direct_ok = facing(direct.pose());
  const bool flipped_ok = facing(flipped.pose());
  RigidPose best;
  if (direct_ok && (!flipped_ok || cost_direct <= cost_flipped)) {
    best = direct.pose();
  } else if (flipped_ok) {
    best = flipped.pose();
  } else {
    fail("NoSolution", "no orientation faces the camera");
  }
  if (!best.is_valid(1e-6)) fail("NoSolution", "refined pose is not a rigid transform");
  return best;
}

UnifiedPoses unify_pose_graph(const PoseGraph& graph) {
  if (graph.edges.empty()) fail("Disconnected", "empty pose graph");

  // node key: cameras even, boards odd
  auto cam_key = [](int id) { return 2 * id; };
  auto board_key = [](int id) { return 2 * id + 1; };

  std::map<int, std::vector<int>> adjacency;  // node -> edge indices
  std::map<int, std::set<int>> cam_degree;
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    adjacency[cam_key(edge.camera_id)].push_back(static_cast<int>(e));
    adjacency[board_key(edge.board_id)].push_back(static_cast<int>(e));
    cam_degree[edge.camera_id].insert(edge.board_id);
  }

  int root_cam = -1;
  size_t best_degree = 0;
  for (const auto& [id, boards] : cam_degree) {
    if (boards.size() > best_degree) {
      best_degree = boards.size();
      root_cam = id;
    }
  }

  // minimum cumulative residual to each node; M = node frame -> root frame
  std::map<int, double> dist;
  std::map<int, RigidPose> to_root;
  using QItem = std::pair<double, int>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> queue;
  dist[cam_key(root_cam)] = 0.0;
  to_root[cam_key(root_cam)] = RigidPose::identity();
  queue.push({0.0, cam_key(root_cam)});

  while (!queue.empty()) {
    const auto [d, node] = queue.top();
    queue.pop();
    if (d > dist[node] + 1e-15) continue;
    for (int ei : adjacency[node]) {
      const auto& edge = graph.edges[static_cast<size_t>(ei)];
      const bool from_cam = node == cam_key(edge.camera_id);
      const int next = from_cam ? board_key(edge.board_id) : cam_key(edge.camera_id);
      const double nd = d + edge.residual;
      auto it = dist.find(next);
      if (it != dist.end() && it->second <= nd) continue;
      dist[next] = nd;
      to_root[next] = from_cam ? compose(to_root[node], edge.cam_from_board)
                               : compose(to_root[node], edge.cam_from_board.inverse());
      queue.push({nd, next});
    }
  }

  auto it0 = to_root.find(board_key(0));
  std::string missing;
  for (const auto& [node, edges] : adjacency) {
    if (!to_root.count(node)) {
      missing += (node % 2 == 0 ? " camera:" : " board:") + std::to_string(node / 2);
    }
  }
  if (it0 == to_root.end()) fail("Disconnected", "Board 0 unreachable;" + missing);
  if (!missing.empty()) fail("Disconnected", "unreachable nodes:" + missing);

  const RigidPose root_to_world = it0->second.inverse();  // root frame -> Board-0 frame
  UnifiedPoses out;
  for (const auto& [node, M] : to_root) {
    const RigidPose world_pose = compose(root_to_world, M);  // node -> world
    if (node % 2 == 0) {
      out.camera_pose[node / 2] = world_pose.inverse();
    } else {
      out.board_pose[node / 2] = world_pose;
    }
  }
  return out;
}

namespace {

class BundleProblem : public LeastSquaresProblem {
 public:
  BundleProblem(const BaProblemData& data, BaMode mode) : mode_(mode) {
    for (const auto& b : data.boards) boards_by_id_[b.id] = &b;
    cameras_ = data.cameras;
    for (size_t i = 0; i < cameras_.size(); ++i)
      cam_index_[numeric_id(cameras_[i])] = static_cast<int>(i);
    board_pose_ = data.board_world;
    gauge_board_ = board_pose_.begin()->first;  // lowest id held fixed

    const int cam_params = mode == BaMode::full_with_intrinsics ? 15 : 6;
    int cursor = 0;
    for (size_t i = 0; i < cameras_.size(); ++i) {
      cam_offset_.push_back(cursor);
      cursor += cam_params;
    }
    for (const auto& [id, pose] : board_pose_) {
      if (id == gauge_board_) continue;
      board_offset_[id] = cursor;
      cursor += 6;
    }
    n_params_ = cursor;

    obs_ = data.observations;
    for (const auto& o : obs_) {
      Block blk;
      blk.r_begin = 2 * static_cast<int>(blocks_.size());
      blk.r_count = 2;
      const int co = cam_offset_[static_cast<size_t>(cam_index_.at(o.camera_id))];
      for (int k = 0; k < cam_params; ++k) blk.params.push_back(co + k);
      auto bo = board_offset_.find(o.board_id);
      if (bo != board_offset_.end())
        for (int k = 0; k < 6; ++k) blk.params.push_back(bo->second + k);
      blocks_.push_back(std::move(blk));
    }
  }

  int num_params() const override { return n_params_; }
  int num_residuals() const override { return 2 * static_cast<int>(obs_.size()); }
  int num_blocks() const override { return static_cast<int>(obs_.size()); }
  Block block(int b) const override { return blocks_[static_cast<size_t>(b)]; }

  void eval_block(int b, const Eigen::VectorXd& p, double* out) const override {
    const auto& o = obs_[static_cast<size_t>(b)];
    const int ci = cam_index_.at(o.camera_id);
    const int co = cam_offset_[static_cast<size_t>(ci)];
    const RigidPose cam_pose =
        retract_pose(cameras_[static_cast<size_t>(ci)].pose, p.segment<3>(co), p.segment<3>(co + 3));

    RigidPose board = board_pose_.at(o.board_id);
    auto bo = board_offset_.find(o.board_id);
    if (bo != board_offset_.end())
      board = retract_pose(board, p.segment<3>(bo->second), p.segment<3>(bo->second + 3));

    CameraModel cam = cameras_[static_cast<size_t>(ci)];
    if (mode_ == BaMode::full_with_intrinsics) {
      cam.fx = p[co + 6];
      cam.fy = p[co + 7];
      cam.cx = p[co + 8];
      cam.cy = p[co + 9];
      for (int k = 0; k < 5; ++k) cam.dist[static_cast<size_t>(k)] = p[co + 10 + k];
    }

    const Eigen::Vector3d corner =
        boards_by_id_.at(o.board_id)->corners.at(static_cast<size_t>(o.corner_index));
    reproject_residual(cam, cam_pose.apply(board.apply(corner)), o.pixel, out);
  }

  void retract(Eigen::VectorXd& p) override {
    for (size_t i = 0; i < cameras_.size(); ++i) {
      const int co = cam_offset_[i];
      cameras_[i].pose = retract_pose(cameras_[i].pose, p.segment<3>(co), p.segment<3>(co + 3));
      p.segment<3>(co).setZero();
      p.segment<3>(co + 3).setZero();
    }
    for (auto& [id, pose] : board_pose_) {
      auto bo = board_offset_.find(id);
      if (bo == board_offset_.end()) continue;
      pose = retract_pose(pose, p.segment<3>(bo->second), p.segment<3>(bo->second + 3));
      p.segment<3>(bo->second).setZero();
      p.segment<3>(bo->second + 3).setZero();
    }
  }

  Eigen::VectorXd initial_params() const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_params_);
    if (mode_ == BaMode::full_with_intrinsics) {
      for (size_t i = 0; i < cameras_.size(); ++i) {
        const int co = cam_offset_[i];
        p[co + 6] = cameras_[i].fx;
        p[co + 7] = cameras_[i].fy;
        p[co + 8] = cameras_[i].cx;
        p[co + 9] = cameras_[i].cy;
        for (int k = 0; k < 5; ++k) p[co + 10 + k] = cameras_[i].dist[static_cast<size_t>(k)];
      }
    }
    return p;
  }

  BaSolution extract(const Eigen::VectorXd& p) const {
    BaSolution sol;
    sol.cameras = cameras_;
    if (mode_ == BaMode::full_with_intrinsics) {
      for (size_t i = 0; i < sol.cameras.size(); ++i) {
        const int co = cam_offset_[i];
        sol.cameras[i].fx = p[co + 6];
        sol.cameras[i].fy = p[co + 7];
        sol.cameras[i].cx = p[co + 8];
        sol.cameras[i].cy = p[co + 9];
        for (int k = 0; k < 5; ++k) sol.cameras[i].dist[static_cast<size_t>(k)] = p[co + 10 + k];
      }
    }
    sol.board_world = board_pose_;
    return sol;
  }

 private:
  BaMode mode_;
  std::map<int, const BoardModel*> boards_by_id_;
  std::vector<CameraModel> cameras_;
  std::map<int, int> cam_index_;
  std::map<int, RigidPose> board_pose_;
  int gauge_board_ = 0;
  std::vector<int> cam_offset_;
  std::map<int, int> board_offset_;
  std::vector<CornerObservation> obs_;
  std::vector<Block> blocks_;
  int n_params_ = 0;
};

}  // namespace

BaSolution bundle_adjust(const BaProblemData& data, const BaOptions& opts) {
  if (data.observations.empty()) fail("NoDetections", "no observations");
  if (data.board_world.empty()) fail("NoDetections", "no board poses");
  BundleProblem problem(data, opts.mode);
  Eigen::VectorXd p = problem.initial_params();
  LmOptions lm;
  lm.max_iters = opts.max_iters;
  const LmResult res = lm_solve(problem, p, lm);
  BaSolution sol = problem.extract(p);
  sol.initial_cost = res.initial_cost;
  sol.final_cost = res.final_cost;
  sol.iterations = res.iterations;
  return sol;
}

RigidPose refine_board_pose_multiview(const BoardModel& board,
                                      const std::vector<CornerObservation>& obs,
                                      const std::vector<CameraModel>& cameras,
                                      const RigidPose& init) {
  std::map<int, const CameraModel*> cams_by_id;
  for (const auto& c : cameras) cams_by_id[numeric_id(c)] = &c;

  std::map<int, int> per_cam_count;
  std::vector<PoseReprojProblem::Term> terms;
  for (const auto& o : obs) {
    auto it = cams_by_id.find(o.camera_id);
    if (it == cams_by_id.end()) continue;
    per_cam_count[o.camera_id]++;
    terms.push_back({it->second, board.corners.at(static_cast<size_t>(o.corner_index)), o.pixel});
  }
  bool enough = false;
  for (const auto& [id, n] : per_cam_count) enough |= n >= 4;
  if (!enough) fail("NoDetections", "no camera observes at least 4 corners");

  PoseReprojProblem stage1(init, terms, true);
  refine_pose(stage1, RobustLoss::cauchy(2.0));
  PoseReprojProblem stage2(stage1.pose(), terms, true);
  refine_pose(stage2, RobustLoss::huber(1.0));
  return stage2.pose();
}

CalibrationStats reprojection_stats(const std::vector<CameraModel>& cameras,
                                    const std::map<int, RigidPose>& board_world,
                                    const std::vector<BoardModel>& boards,
                                    const std::vector<CornerObservation>& obs) {
  std::map<int, const CameraModel*> cams_by_id;
  for (const auto& c : cameras) cams_by_id[numeric_id(c)] = &c;
  std::map<int, const BoardModel*> boards_by_id;
  for (const auto& b : boards) boards_by_id[b.id] = &b;

  CalibrationStats stats;
  double sum = 0, sumsq = 0;
  int le1 = 0, le2 = 0;
  for (const auto& o : obs) {
    const CameraModel& cam = *cams_by_id.at(o.camera_id);
    const BoardModel& board = *boards_by_id.at(o.board_id);
    const Eigen::Vector3d world =
        board_world.at(o.board_id).apply(board.corners.at(static_cast<size_t>(o.corner_index)));
    const Pixel px = cam.project(world);
    const double e = std::hypot(px.u - o.pixel.u, px.v - o.pixel.v);
    sum += e;
    sumsq += e * e;
    le1 += e <= 1.0;
    le2 += e <= 2.0;
    stats.count++;
  }
  if (stats.count == 0) return stats;
  const double n = stats.count;
  stats.mean_px = sum / n;
  stats.std_px = std::sqrt(std::max(0.0, sumsq / n - stats.mean_px * stats.mean_px));
  stats.frac_le_1px = le1 / n;
  stats.frac_le_2px = le2 / n;
  return stats;
}

CalibScene generate_calib_scene(std::uint64_t seed, int n_cameras, int n_boards,
                                double noise_px) {
  if (n_cameras < 2) fail("BadArgument", "need at least 2 cameras");
  if (n_boards < 1) fail("BadArgument", "need at least 1 board");

  SplitRng root(seed);
  SplitRng rng_cam = root.split(1);
  SplitRng rng_board = root.split(2);
  SplitRng rng_noise = root.split(3);

  CalibScene scene;
  scene.room_w = 5.5;
  scene.room_l = 4.2;
  scene.room_h = 2.6;

  const int per_ring = n_cameras > 24 ? (n_cameras + 1) / 2 : n_cameras;
  for (int i = 0; i < n_cameras; ++i) {
    CameraModel c;
    c.id = std::to_string(i);
    c.width = 2048;
    c.height = 1536;
    c.fx = rng_cam.uniform(1050, 1250);
    c.fy = c.fx * rng_cam.uniform(0.998, 1.002);
    c.cx = 1024 + rng_cam.uniform(-25, 25);
    c.cy = 768 + rng_cam.uniform(-25, 25);
    c.dist = {rng_cam.uniform(-0.22, -0.12), rng_cam.uniform(0.02, 0.06),
              rng_cam.uniform(-0.001, 0.001), rng_cam.uniform(-0.001, 0.001),
              rng_cam.uniform(-0.01, 0.01)};

    const int ring = i / per_ring;
    const int in_ring = i % per_ring;
    const int ring_count = std::min(per_ring, n_cameras - ring * per_ring);
    const double angle = 2 * M_PI * in_ring / std::max(1, ring_count) + ring * 0.13 +
                         rng_cam.uniform(-0.03, 0.03);
    const double rx = 2.45, ry = 1.75;
    const double h = (ring == 0 ? 2.25 : 2.45) + rng_cam.uniform(-0.05, 0.05);
    const Eigen::Vector3d center(rx * std::cos(angle), ry * std::sin(angle), h);
    const Eigen::Vector3d target(rng_cam.uniform(-0.4, 0.4), rng_cam.uniform(-0.4, 0.4),
                                 rng_cam.uniform(0.6, 1.1));

    const Eigen::Vector3d z = (target - center).normalized();
    Eigen::Vector3d up(0, 0, 1);
    Eigen::Vector3d x = up.cross(z).normalized();
    Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix3d R_wc;
    R_wc.row(0) = x.transpose();
    R_wc.row(1) = y.transpose();
    R_wc.row(2) = z.transpose();
    c.pose = {R_wc, -(R_wc * center)};
    scene.cameras.push_back(c);
  }

  const double max_x = scene.room_w / 2 - 0.35, max_y = scene.room_l / 2 - 0.35;
  for (int b = 0; b < n_boards; ++b) {
    BoardModel model = BoardModel::grid(b, 5, 7, 0.06);
    RigidPose pose;
    for (int attempt = 0; attempt < 60; ++attempt) {
      if (b == 0) {
        // gauge board flat on the floor near the room center
        const double yaw = rng_board.uniform(0, 2 * M_PI);
        pose = {so3_exp(Eigen::Vector3d(0, 0, yaw)),
                {rng_board.uniform(-0.4, 0.4), rng_board.uniform(-0.4, 0.4), 0.0}};
      } else if (b % 3 != 0) {
        // floor boards with a small tilt
        const double yaw = rng_board.uniform(0, 2 * M_PI);
        const Eigen::Vector3d tilt(rng_board.uniform(-0.12, 0.12), rng_board.uniform(-0.12, 0.12),
                                   0.0);
        pose = {so3_exp(tilt) * so3_exp(Eigen::Vector3d(0, 0, yaw)),
                {rng_board.uniform(-max_x, max_x), rng_board.uniform(-max_y, max_y),
                 rng_board.uniform(0.0, 0.25)}};
      } else {
        // wall boards, normal pointing into the room
        const int wall = rng_board.uniform_int(0, 3);
        const double along = rng_board.uniform(-0.7, 0.7);
        const double height = rng_board.uniform(0.6, 1.5);
        Eigen::Vector3d normal, position;
        switch (wall) {
          case 0: normal = {-1, 0, 0}; position = {scene.room_w / 2 - 0.02, along * max_y, height}; break;
          case 1: normal = {1, 0, 0}; position = {-scene.room_w / 2 + 0.02, along * max_y, height}; break;
          case 2: normal = {0, -1, 0}; position = {along * max_x, scene.room_l / 2 - 0.02, height}; break;
          default: normal = {0, 1, 0}; position = {along * max_x, -scene.room_l / 2 + 0.02, height}; break;
        }
        const Eigen::Vector3d z_axis = normal;
        const Eigen::Vector3d x_axis = Eigen::Vector3d(0, 0, 1).cross(z_axis).normalized();
        const Eigen::Vector3d y_axis = z_axis.cross(x_axis);
        Eigen::Matrix3d R;
        R.col(0) = x_axis;
        R.col(1) = y_axis;
        R.col(2) = z_axis;
        const double spin = rng_board.uniform(-0.3, 0.3);
        pose = {R * so3_exp(Eigen::Vector3d(0, 0, spin)), position};
      }

      int cams_seeing = 0;
      for (const auto& cam : scene.cameras) {
        int corners_seen = 0;
        for (const auto& corner : model.corners)
          corners_seen += cam.frustum_visible(pose.apply(corner), 0.3, 9.0);
        cams_seeing += corners_seen >= 8;
      }
      if (cams_seeing >= 2) break;
    }
    scene.boards.push_back(model);
    scene.board_world.push_back(pose);
  }

  for (const auto& cam : scene.cameras) {
    const int cam_id = numeric_id(cam);
    for (int b = 0; b < n_boards; ++b) {
      const auto& model = scene.boards[static_cast<size_t>(b)];
      for (size_t k = 0; k < model.corners.size(); ++k) {
        const Eigen::Vector3d world = scene.board_world[static_cast<size_t>(b)].apply(model.corners[k]);
        if (!cam.frustum_visible(world, 0.3, 9.0)) continue;
        Pixel px = cam.project(world);
        if (noise_px > 0) {
          px.u += rng_noise.normal(0, noise_px);
          px.v += rng_noise.normal(0, noise_px);
        }
        scene.observations.push_back({cam_id, b, static_cast<int>(k), px});
      }
    }
  }
  return scene;
}

PipelineResult calibrate_pipeline(const std::vector<BoardModel>& boards,
                                  const std::vector<CameraModel>& intrinsics,
                                  const std::vector<CornerObservation>& obs, BaMode mode) {
  std::map<int, const BoardModel*> boards_by_id;
  for (const auto& b : boards) boards_by_id[b.id] = &b;
  std::map<int, const CameraModel*> cams_by_id;
  for (const auto& c : intrinsics) cams_by_id[numeric_id(c)] = &c;

  std::map<std::pair<int, int>, std::vector<CornerObservation>> groups;
  for (const auto& o : obs) groups[{o.camera_id, o.board_id}].push_back(o);

  PoseGraph graph;
  for (const auto& [key, group] : groups) {
    if (group.size() < 6) continue;
    const auto& cam = *cams_by_id.at(key.first);
    const auto& board = *boards_by_id.at(key.second);
    RigidPose pose;
    try {
      pose = solve_pnp(board, group, cam);
    } catch (const Error&) {
      continue;  // drop unusable pairs; connectivity is checked below
    }
    graph.edges.push_back({key.first, key.second, pose, mean_reproj_px(cam, pose, board, group)});
  }

  const UnifiedPoses unified = unify_pose_graph(graph);
  for (const auto& [key, group] : groups) {
    if (!unified.camera_pose.count(key.first))
      fail("Disconnected", "camera " + std::to_string(key.first) + " has no usable edge");
    if (!unified.board_pose.count(key.second))
      fail("Disconnected", "board " + std::to_string(key.second) + " has no usable edge");
  }

  BaProblemData data;
  data.boards = boards;
  for (const auto& c : intrinsics) {
    CameraModel cam = c;
    cam.pose = unified.camera_pose.at(numeric_id(c));
    data.cameras.push_back(cam);
  }
  data.board_world = unified.board_pose;
  data.observations = obs;

  BaOptions ext;
  ext.mode = BaMode::extrinsics_only;
  BaSolution sol = bundle_adjust(data, ext);
  if (mode != BaMode::extrinsics_only) {
    BaProblemData round2 = data;
    round2.cameras = sol.cameras;
    round2.board_world = sol.board_world;
    BaOptions second;
    second.mode = mode;
    sol = bundle_adjust(round2, second);
  }

  PipelineResult result;
  result.cameras = sol.cameras;
  result.board_world = sol.board_world;
  result.stats = reprojection_stats(sol.cameras, sol.board_world, boards, obs);
  return result;
}

}  // namespace omnikit::calib

#include "omnikit/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omnikit/error.hpp"
#include "omnikit/calibration.hpp"
#include "omnikit/hungarian.hpp"
#include "omnikit/triangulation.hpp"

namespace omnikit::track {

const std::array<int, kNumJoints> kWholeBodyIndex = [] {
  std::array<int, kNumJoints> m{};
  int n = 0;
  for (int i = 0; i <= 22; ++i) m[static_cast<size_t>(n++)] = i;     // body + feet
  for (int i = 91; i <= 132; ++i) m[static_cast<size_t>(n++)] = i;   // both hands
  return m;
}();

double Keypoint::confidence() const { return std::sqrt(std::max(0.0, score_x * score_y)); }

Pixel PersonDetection::torso_centroid() const {
  Pixel c;
  for (int j : kTorsoJoints) {
    c.u += keypoints[static_cast<size_t>(j)].px.u;
    c.v += keypoints[static_cast<size_t>(j)].px.v;
  }
  c.u /= kTorsoJoints.size();
  c.v /= kTorsoJoints.size();
  return c;
}

Pixel PersonDetection::hip_midpoint() const {
  const Pixel& l = keypoints[kLeftHip].px;
  const Pixel& r = keypoints[kRightHip].px;
  return {0.5 * (l.u + r.u), 0.5 * (l.v + r.v)};
}

bool promote_frame(const std::set<int>& active_cameras,
                   const std::map<std::int64_t, std::set<int>>& reports_by_frame,
                   std::int64_t frame) {
  if (active_cameras.empty()) fail("BadInput", "promote_frame: no active cameras");
  const auto it = reports_by_frame.find(frame);
  if (it == reports_by_frame.end()) return false;
  int reporting = 0;
  for (int cam : it->second) reporting += active_cameras.count(cam) ? 1 : 0;
  const int need = std::max<int>(
      4, static_cast<int>(std::ceil(0.6 * static_cast<double>(active_cameras.size()))));
  return reporting >= need;
}

Eigen::Vector3d PersonTrack::hip_mid() const {
  return 0.5 * (joints[kLeftHip] + joints[kRightHip]);
}

std::array<Eigen::Vector3d, kNumJoints> PersonTrack::predict() const {
  std::array<Eigen::Vector3d, kNumJoints> out = joints;
  const Eigen::Vector3d shift = velocity * n_miss;
  for (size_t j = 0; j < out.size(); ++j)
    if (valid[j]) out[j] += shift;
  return out;
}

Eigen::Vector3d updated_velocity(const Eigen::Vector3d& velocity,
                                 const Eigen::Vector3d& displacement, int gap_frames) {
  if (gap_frames < 1) return velocity;
  Eigen::Vector3d per_frame = displacement / gap_frames;
  const double norm = per_frame.norm();
  if (norm > kVelocityClamp) per_frame *= kVelocityClamp / norm;
  Eigen::Vector3d v = kVelocityMomentum * velocity + (1.0 - kVelocityMomentum) * per_frame;
  const double vn = v.norm();
  if (vn > kVelocityClamp) v *= kVelocityClamp / vn;
  return v;
}

namespace {

// centroid of the projected torso joints plus hip depth; nullopt when the
// torso is unusable in this camera
struct ProjectedTorso {
  Pixel centroid;
  double depth = 0.0;
};

std::optional<ProjectedTorso> project_torso(const std::array<Eigen::Vector3d, kNumJoints>& joints,
                                            const std::array<bool, kNumJoints>& valid,
                                            const CameraModel& cam) {
  Pixel sum;
  int n = 0;
  for (int j : kTorsoJoints) {
    if (!valid[static_cast<size_t>(j)]) continue;
    try {
      const Pixel px = cam.project(joints[static_cast<size_t>(j)]);
      sum.u += px.u;
      sum.v += px.v;
      ++n;
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  if (n == 0) return std::nullopt;
  Eigen::Vector3d hip = 0.5 * (joints[kLeftHip] + joints[kRightHip]);
  const double depth = cam.pose.apply(hip).z();
  if (depth <= 0) return std::nullopt;
  return ProjectedTorso{{sum.u / n, sum.v / n}, depth};
}

Pixel undistorted_pinhole(const CameraModel& cam, const Pixel& px) {
  const Eigen::Vector2d xn = cam.undistort(px);
  return {cam.fx * xn.x() + cam.cx, cam.fy * xn.y() + cam.cy};
}

}  // namespace

std::map<int, std::vector<int>> associate_stage1(const std::vector<PersonTrack>& tracks,
                                                 const std::vector<KeypointReport>& frame_reports,
                                                 const std::vector<CameraModel>& cameras,
                                                 double tau_base, double d_ref) {
  std::map<int, const CameraModel*> cam_by_id;
  for (const auto& c : cameras) cam_by_id[calib::numeric_id(c)] = &c;

  std::map<int, std::vector<int>> out;
  for (const auto& report : frame_reports) {
    const auto cit = cam_by_id.find(report.camera_id);
    if (cit == cam_by_id.end()) fail("BadInput", "report from unknown camera");
    const CameraModel& cam = *cit->second;

    const int T = static_cast<int>(tracks.size());
    const int D = static_cast<int>(report.persons.size());
    std::vector<int>& assign = out[report.camera_id];
    assign.assign(static_cast<size_t>(T), -1);
    if (T == 0 || D == 0) continue;

    Eigen::MatrixXd cost(T, D);
    cost.setConstant(kForbiddenCost);
    for (int t = 0; t < T; ++t) {
      const auto& track = tracks[static_cast<size_t>(t)];
      const auto predicted = track.predict();
      const auto proj = project_torso(predicted, track.valid, cam);
      if (!proj) continue;
      const double tau = tau_base * d_ref / proj->depth;
      for (int d = 0; d < D; ++d) {
        const Pixel det = report.persons[static_cast<size_t>(d)].torso_centroid();
        const double dist = std::hypot(det.u - proj->centroid.u, det.v - proj->centroid.v);
        if (dist <= tau) cost(t, d) = dist;
      }
    }
    assign = hungarian(cost);
  }
  return out;
}

std::vector<NewCandidate> associate_stage2(const std::vector<KeypointReport>& frame_reports,
                                           const std::map<int, std::vector<bool>>& used,
                                           const std::vector<CameraModel>& cameras,
                                           double inlier_px, int min_support) {
  std::map<int, const CameraModel*> cam_by_id;
  for (const auto& c : cameras) cam_by_id[calib::numeric_id(c)] = &c;

  struct Free {
    int camera_id;
    int person;
    const CameraModel* cam;
    Pixel hip_pinhole;
  };
  std::vector<Free> free;
  for (const auto& report : frame_reports) {
    const auto uit = used.find(report.camera_id);
    for (size_t p = 0; p < report.persons.size(); ++p) {
      if (uit != used.end() && uit->second[p]) continue;
      const CameraModel& cam = *cam_by_id.at(report.camera_id);
      try {
        free.push_back({report.camera_id, static_cast<int>(p), &cam,
                        undistorted_pinhole(cam, report.persons[p].hip_midpoint())});
      } catch (const Error&) {
      }
    }
  }

  struct Candidate {
    Eigen::Vector3d hip;
    std::map<int, int> claimed;
    double err_sum = 0.0;
  };
  std::vector<Candidate> candidates;
  for (size_t a = 0; a < free.size(); ++a) {
    for (size_t b = a + 1; b < free.size(); ++b) {
      if (free[a].camera_id == free[b].camera_id) continue;
      Eigen::Vector3d hip;
      try {
        hip = triangulate_dlt(
            {{free[a].hip_pinhole, free[a].cam}, {free[b].hip_pinhole, free[b].cam}});
      } catch (const Error&) {
        continue;
      }
      // support: per camera, the nearest free detection within the gate,
      // compared in raw pixel space (projection includes distortion)
      Candidate cand;
      cand.hip = hip;
      std::map<int, double> best_err;
      for (const auto& f : free) {
        const Eigen::Vector3d pc = f.cam->pose.apply(hip);
        if (pc.z() <= 0) continue;
        const Pixel reproj = f.cam->project_camera(pc);
        const auto rit =
            std::find_if(frame_reports.begin(), frame_reports.end(),
                         [&](const KeypointReport& r) { return r.camera_id == f.camera_id; });
        const Pixel raw_hip = rit->persons[static_cast<size_t>(f.person)].hip_midpoint();
        const double err = std::hypot(reproj.u - raw_hip.u, reproj.v - raw_hip.v);
        if (err > inlier_px) continue;
        const auto bit = best_err.find(f.camera_id);
        if (bit == best_err.end() || err < bit->second) {
          best_err[f.camera_id] = err;
          cand.claimed[f.camera_id] = f.person;
        }
      }
      cand.err_sum = 0.0;
      for (const auto& [cid, e] : best_err) cand.err_sum += e;
      if (static_cast<int>(cand.claimed.size()) >= min_support) candidates.push_back(cand);
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.claimed.size() != y.claimed.size()) return x.claimed.size() > y.claimed.size();
    return x.err_sum < y.err_sum;
  });

  std::vector<NewCandidate> accepted;
  std::set<std::pair<int, int>> taken;
  for (const auto& cand : candidates) {
    std::map<int, int> claim;
    for (const auto& [cid, p] : cand.claimed)
      if (!taken.count({cid, p})) claim[cid] = p;
    if (static_cast<int>(claim.size()) < min_support) continue;
    for (const auto& [cid, p] : claim) taken.insert({cid, p});
    // refit on the surviving claim set
    std::vector<View> views;
    std::vector<Pixel> pin;
    pin.reserve(claim.size());
    for (const auto& [cid, p] : claim) {
      const auto rit = std::find_if(frame_reports.begin(), frame_reports.end(),
                                    [&](const KeypointReport& r) { return r.camera_id == cid; });
      const CameraModel& cam = *cam_by_id.at(cid);
      pin.push_back(undistorted_pinhole(cam, rit->persons[static_cast<size_t>(p)].hip_midpoint()));
      views.push_back({pin.back(), &cam});
    }
    NewCandidate nc;
    try {
      nc.hip = triangulate_dlt(views);
    } catch (const Error&) {
      nc.hip = cand.hip;
    }
    nc.claimed = claim;
    accepted.push_back(std::move(nc));
  }
  return accepted;
}

void update_lifecycle(std::vector<PersonTrack>& tracks, const std::vector<bool>& matched,
                      std::vector<PersonTrack>& births, ReIdCache& cache, std::int64_t frame,
                      int& next_id) {
  // drop entries at or past expiry
  cache.entries.erase(std::remove_if(cache.entries.begin(), cache.entries.end(),
                                     [&](const ReIdEntry& e) { return frame >= e.expiry_frame; }),
                      cache.entries.end());

  std::vector<PersonTrack> survivors;
  survivors.reserve(tracks.size() + births.size());
  for (size_t i = 0; i < tracks.size(); ++i) {
    PersonTrack& t = tracks[i];
    if (matched[i]) {
      t.n_miss = 0;
      t.last_seen = frame;
      if (t.state == TrackState::tentative) {
        t.tentative_count = std::min(kConfirmStreak, t.tentative_count + 1);
        if (t.tentative_count >= kConfirmStreak) t.state = TrackState::confirmed;
      }
      survivors.push_back(std::move(t));
    } else {
      ++t.n_miss;
      if (t.state == TrackState::tentative) continue;  // one gap kills a tentative track
      if (t.n_miss >= kPruneAfter) {
        t.state = TrackState::pruned;
        cache.entries.push_back({t.id, t.hip_mid(), frame + kCacheFrames});
      } else {
        survivors.push_back(std::move(t));
      }
    }
  }

  for (PersonTrack& b : births) {
    b.state = TrackState::tentative;
    b.tentative_count = 1;
    b.n_miss = 0;
    b.last_seen = frame;
    int revived = -1;
    double best = kReIdRadius;
    size_t best_idx = 0;
    for (size_t e = 0; e < cache.entries.size(); ++e) {
      const double d = (cache.entries[e].last_position - b.hip_mid()).norm();
      if (d <= best) {
        best = d;
        revived = cache.entries[e].old_id;
        best_idx = e;
      }
    }
    if (revived >= 0) {
      b.id = revived;
      cache.entries.erase(cache.entries.begin() + static_cast<std::ptrdiff_t>(best_idx));
    } else {
      b.id = next_id++;
    }
    survivors.push_back(std::move(b));
  }
  tracks = std::move(survivors);
}

Tracker::Tracker(std::vector<CameraModel> cameras, TrackerOptions opts)
    : cameras_(std::move(cameras)), opts_(opts), root_(opts.seed) {
  for (size_t i = 0; i < cameras_.size(); ++i)
    camera_index_[calib::numeric_id(cameras_[i])] = static_cast<int>(i);
}

std::vector<const PersonTrack*> Tracker::confirmed() const {
  std::vector<const PersonTrack*> out;
  for (const auto& t : tracks_)
    if (t.state == TrackState::confirmed) out.push_back(&t);
  return out;
}

std::optional<Eigen::Vector3d> Tracker::triangulate_joint(
    int joint, const std::vector<std::pair<int, const PersonDetection*>>& views,
    SplitRng& rng) const {
  std::vector<View> usable;
  std::vector<Pixel> pin;
  pin.reserve(views.size());
  for (const auto& [camera_id, person] : views) {
    const Keypoint& kp = person->keypoints[static_cast<size_t>(joint)];
    if (kp.confidence() <= kScoreGate) continue;
    const CameraModel& cam = cameras_[static_cast<size_t>(camera_index_.at(camera_id))];
    try {
      pin.push_back(undistorted_pinhole(cam, kp.px));
      usable.push_back({pin.back(), &cam});
    } catch (const Error&) {
    }
  }
  try {
    if (static_cast<int>(usable.size()) >= opts_.min_support) {
      return triangulate_ransac(usable, rng.split(static_cast<std::uint64_t>(joint)),
                                opts_.ransac_px)
          .point;
    }
    if (usable.size() == 2) return triangulate_dlt(usable);
  } catch (const Error&) {
  }
  return std::nullopt;
}

void Tracker::refresh_track(PersonTrack& track, TrackAux& aux,
                            const std::vector<std::pair<int, const PersonDetection*>>& views,
                            std::int64_t frame, SplitRng& rng) {
  std::array<std::optional<Eigen::Vector3d>, kNumJoints> raw;
  for (int j = 0; j < kNumJoints; ++j) raw[static_cast<size_t>(j)] = triangulate_joint(j, views, rng);

  // velocity from the raw hip midpoint before smoothing
  const int gap = static_cast<int>(frame - track.last_seen);
  if (gap >= 1 && raw[kLeftHip] && raw[kRightHip] && track.valid[kLeftHip] &&
      track.valid[kRightHip]) {
    const Eigen::Vector3d new_mid = 0.5 * (*raw[kLeftHip] + *raw[kRightHip]);
    track.velocity = updated_velocity(track.velocity, new_mid - track.hip_mid(), gap);
  }

  for (int j = 0; j < kNumJoints; ++j) {
    auto& f = aux.filters[static_cast<size_t>(j)];
    if (!raw[static_cast<size_t>(j)]) continue;
    const Eigen::Vector3d& p = *raw[static_cast<size_t>(j)];
    if (f.last_frame >= 0 && frame - f.last_frame > opts_.joint_reset_frames) {
      for (auto& s : f.axis) s.reset();
    }
    const double dt = f.last_frame < 0 ? 1.0 / opts_.fps
                                       : static_cast<double>(frame - f.last_frame) / opts_.fps;
    Eigen::Vector3d smoothed;
    for (int a = 0; a < 3; ++a) smoothed[a] = one_euro_step(f.axis[static_cast<size_t>(a)], p[a], dt, {});
    track.joints[static_cast<size_t>(j)] = smoothed;
    track.valid[static_cast<size_t>(j)] = true;
    f.last_frame = frame;
  }
}

void Tracker::step(std::int64_t frame, const std::vector<KeypointReport>& reports) {
  SplitRng frame_rng = root_.split(static_cast<std::uint64_t>(frame));

  const auto assignments = associate_stage1(tracks_, reports, cameras_, opts_.tau_base, opts_.d_ref);

  // views per track and claimed-detection flags per camera
  std::vector<std::vector<std::pair<int, const PersonDetection*>>> views(tracks_.size());
  std::map<int, std::vector<bool>> used;
  for (const auto& report : reports) used[report.camera_id].assign(report.persons.size(), false);
  for (const auto& report : reports) {
    const auto ait = assignments.find(report.camera_id);
    if (ait == assignments.end()) continue;
    for (size_t t = 0; t < tracks_.size(); ++t) {
      const int d = ait->second[t];
      if (d < 0) continue;
      views[t].push_back({report.camera_id, &report.persons[static_cast<size_t>(d)]});
      used[report.camera_id][static_cast<size_t>(d)] = true;
    }
  }

  std::vector<bool> matched(tracks_.size(), false);
  for (size_t t = 0; t < tracks_.size(); ++t) {
    if (views[t].empty()) continue;
    matched[t] = true;
    SplitRng track_rng = frame_rng.split(static_cast<std::uint64_t>(tracks_[t].id));
    refresh_track(tracks_[t], aux_.at(static_cast<size_t>(t)), views[t], frame, track_rng);
  }

  const auto candidates =
      associate_stage2(reports, used, cameras_, opts_.stage2_px, opts_.min_support);

  std::vector<PersonTrack> births;
  std::vector<TrackAux> birth_aux;
  for (size_t c = 0; c < candidates.size(); ++c) {
    std::vector<std::pair<int, const PersonDetection*>> bviews;
    for (const auto& [cid, p] : candidates[c].claimed) {
      const auto rit = std::find_if(reports.begin(), reports.end(),
                                    [&](const KeypointReport& r) { return r.camera_id == cid; });
      bviews.push_back({cid, &rit->persons[static_cast<size_t>(p)]});
    }
    PersonTrack b;
    TrackAux baux;
    SplitRng birth_rng = frame_rng.split(0x10000 + static_cast<std::uint64_t>(c));
    b.last_seen = frame;
    refresh_track(b, baux, bviews, frame, birth_rng);
    if (!b.valid[kLeftHip] || !b.valid[kRightHip]) continue;
    births.push_back(std::move(b));
    birth_aux.push_back(std::move(baux));
  }

  // keep per-track aux aligned through lifecycle by id
  std::map<int, TrackAux> aux_by_id;
  for (size_t t = 0; t < tracks_.size(); ++t) aux_by_id[tracks_[t].id] = std::move(aux_[t]);
  const size_t n_births = births.size();
  update_lifecycle(tracks_, matched, births, cache_, frame, next_id_);
  for (size_t b = 0; b < n_births; ++b) {
    const PersonTrack& born = tracks_[tracks_.size() - n_births + b];
    aux_by_id[born.id] = std::move(birth_aux[b]);
  }
  aux_.clear();
  for (const auto& t : tracks_) aux_.push_back(std::move(aux_by_id[t.id]));
}

}  // namespace omnikit::track

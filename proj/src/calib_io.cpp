#include "omnikit/calib_io.hpp"

#include <nlohmann/json.hpp>

#include "omnikit/error.hpp"
#include "omnikit/io_util.hpp"

namespace omnikit {

using nlohmann::json;

static json camera_to_json(const CameraModel& c) {
  json j;
  j["id"] = c.id;
  j["width"] = c.width;
  j["height"] = c.height;
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["dist"] = c.dist;
  std::vector<double> T(16);
  const Eigen::Matrix4d M = c.pose.matrix();
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 4; ++col) T[static_cast<size_t>(r * 4 + col)] = M(r, col);
  j["T_world_cam"] = T;
  return j;
}

static CameraModel camera_from_json(const json& j) {
  CameraModel c;
  try {
    c.id = j.at("id").get<std::string>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    const auto d = j.at("dist").get<std::vector<double>>();
    if (d.size() != 5) fail("SchemaError", "dist must have 5 entries");
    std::copy(d.begin(), d.end(), c.dist.begin());
    const auto T = j.at("T_world_cam").get<std::vector<double>>();
    if (T.size() != 16) fail("SchemaError", "T_world_cam must have 16 entries");
    Eigen::Matrix4d M;
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col) M(r, col) = T[static_cast<size_t>(r * 4 + col)];
    c.pose = RigidPose::from_matrix(M);
  } catch (const json::exception& e) {
    fail("SchemaError", std::string("bad camera entry: ") + e.what());
  }
  if (c.fx <= 0 || c.fy <= 0) fail("SchemaError", "fx, fy must be positive");
  return c;
}

std::string cameras_to_json(const std::vector<CameraModel>& cams) {
  json arr = json::array();
  for (const auto& c : cams) arr.push_back(camera_to_json(c));
  return arr.dump(2) + "\n";
}

std::vector<CameraModel> cameras_from_json(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) fail("SchemaError", "calibration file is not valid JSON");
  const json* arr = &root;
  if (root.is_object() && root.contains("cameras")) arr = &root["cameras"];
  if (!arr->is_array()) fail("SchemaError", "expected an array of cameras");
  std::vector<CameraModel> cams;
  for (const auto& j : *arr) cams.push_back(camera_from_json(j));
  return cams;
}

void save_calibration(const std::filesystem::path& path, const std::vector<CameraModel>& cams) {
  atomic_write(path, cameras_to_json(cams));
}

std::vector<CameraModel> load_calibration(const std::filesystem::path& path) {
  return cameras_from_json(read_file(path));
}

void save_observations(const std::filesystem::path& path, const ObservationSet& set) {
  json j;
  j["boards"] = json::array();
  for (const calib::BoardModel& b : set.boards) {
    json corners = json::array();
    for (const Eigen::Vector3d& c : b.corners) corners.push_back({c.x(), c.y(), c.z()});
    j["boards"].push_back({{"id", b.id}, {"corners", corners}});
  }
  j["cameras"] = json::parse(cameras_to_json(set.cameras));
  j["observations"] = json::array();
  for (const calib::CornerObservation& o : set.observations) {
    j["observations"].push_back({{"camera_id", o.camera_id},
                                 {"board_id", o.board_id},
                                 {"corner_index", o.corner_index},
                                 {"u", o.pixel.u},
                                 {"v", o.pixel.v}});
  }
  atomic_write(path, j.dump(2) + "\n");
}

ObservationSet load_observations(const std::filesystem::path& path) {
  json root = json::parse(read_file(path), nullptr, false);
  if (root.is_discarded()) fail("SchemaError", "observations file is not valid JSON");
  ObservationSet set;
  try {
    for (const json& jb : root.at("boards")) {
      calib::BoardModel b;
      b.id = jb.at("id").get<int>();
      for (const json& jc : jb.at("corners")) {
        if (jc.size() != 3) fail("SchemaError", "board corner must have 3 coordinates");
        b.corners.emplace_back(jc[0].get<double>(), jc[1].get<double>(), jc[2].get<double>());
      }
      set.boards.push_back(std::move(b));
    }
    set.cameras = cameras_from_json(root.at("cameras").dump());
    for (const json& jo : root.at("observations")) {
      calib::CornerObservation o;
      o.camera_id = jo.at("camera_id").get<int>();
      o.board_id = jo.at("board_id").get<int>();
      o.corner_index = jo.at("corner_index").get<int>();
      o.pixel = {jo.at("u").get<double>(), jo.at("v").get<double>()};
      set.observations.push_back(o);
    }
  } catch (const json::exception& e) {
    fail("SchemaError", std::string("bad observations file: ") + e.what());
  }
  return set;
}

}  // namespace omnikit

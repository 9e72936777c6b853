#include "ledsync/eval_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ledsync/fiducial_frame.hpp"

namespace ledsync {

namespace {

std::vector<std::string> CsvRows(const std::string& file, const std::string& header) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file);
  std::vector<std::string> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      if (line != header) throw SchemaError(file + ":1", "expected header " + header);
      first = false;
      continue;
    }
    rows.push_back(line);
  }
  if (first) throw SchemaError(file + ":1", "missing header");
  return rows;
}

std::vector<Vec3> Points3(const Json& j, const std::string& path) {
  using namespace json_util;
  const Json& arr = Array(j, path);
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto v = Numbers(arr[i], Join(path, i), 3);
    out.emplace_back(v[0], v[1], v[2]);
  }
  return out;
}

std::vector<RigidPose> Poses(const Json& j, const std::string& path) {
  const Json& arr = json_util::Array(j, path);
  std::vector<RigidPose> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(PoseFromJson(arr[i], json_util::Join(path, i), 1e-6));
  }
  return out;
}

Json PosesToJson(const std::vector<RigidPose>& poses) {
  Json arr = Json::array();
  for (const auto& p : poses) arr.push_back(PoseToJson(p));
  return arr;
}

Json Points3ToJson(const std::vector<Vec3>& pts) {
  Json arr = Json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y(), p.z()});
  return arr;
}

}  // namespace

CameraModel CameraFromJson(const Json& j, const std::string& path) {
  using namespace json_util;
  CameraModel c;
  c.fx = Number(Field(j, "fx", path), Join(path, "fx"));
  c.fy = Number(Field(j, "fy", path), Join(path, "fy"));
  c.cx = Number(Field(j, "cx", path), Join(path, "cx"));
  c.cy = Number(Field(j, "cy", path), Join(path, "cy"));
  c.width = static_cast<int>(Integer(Field(j, "width", path), Join(path, "width")));
  c.height = static_cast<int>(Integer(Field(j, "height", path), Join(path, "height")));
  try {
    c.Validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.empty() ? "/" : path, e.what());
  }
  return c;
}

Json CameraToJson(const CameraModel& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

std::vector<ObservationGrid> ReadObservationsCsv(const std::string& file, std::size_t views,
                                                 std::size_t frames, std::size_t points) {
  std::vector<ObservationGrid> grids(views, ObservationGrid(frames, std::vector<std::optional<Vec2>>(points)));
  const auto rows = CsvRows(file, "view,frame,point,x,y");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line = rows[r];
    if (line.empty()) continue;
    const std::string where = file + ":" + std::to_string(r + 2);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    long long v, f, p;
    double x, y;
    std::string rest;
    if (!(in >> v >> f >> p >> x >> y) || (in >> rest)) {
      throw SchemaError(where, "expected view,frame,point,x,y");
    }
    if (v < 0 || f < 0 || p < 0 || static_cast<std::size_t>(v) >= views ||
        static_cast<std::size_t>(f) >= frames || static_cast<std::size_t>(p) >= points) {
      throw SchemaError(where, "index out of range");
    }
    auto& cell = grids[v][f][p];
    if (cell) throw SchemaError(where, "duplicate observation");
    cell = Vec2(x, y);
  }
  return grids;
}

void WriteObservationsCsv(const std::vector<ObservationGrid>& views, std::ostream& out) {
  out << "view,frame,point,x,y\n" << std::setprecision(17);
  for (std::size_t v = 0; v < views.size(); ++v)
    for (std::size_t f = 0; f < views[v].size(); ++f)
      for (std::size_t p = 0; p < views[v][f].size(); ++p)
        if (const auto& o = views[v][f][p]) {
          out << v << ',' << f << ',' << p << ',' << o->x() << ',' << o->y() << '\n';
        }
}

StereoScene StereoSceneFromJson(const Json& j, const std::string& observations_csv) {
  using namespace json_util;
  StereoScene s;
  s.left = CameraFromJson(Field(j, "left", ""), "/left");
  s.right = CameraFromJson(Field(j, "right", ""), "/right");
  s.left_to_right = PoseFromJson(Field(j, "left_to_right", ""), "/left_to_right", 1e-6);
  s.board_poses = Poses(Field(j, "board_poses", ""), "/board_poses");
  s.board_points = Points3(Field(j, "board_points", ""), "/board_points");
  auto grids = ReadObservationsCsv(observations_csv, 2, s.board_poses.size(), s.board_points.size());
  s.left_observations = std::move(grids[0]);
  s.right_observations = std::move(grids[1]);
  return s;
}

IrRgbScene IrRgbSceneFromJson(const Json& j, const std::string& observations_csv) {
  using namespace json_util;
  IrRgbScene s;
  s.rgb = CameraFromJson(Field(j, "rgb", ""), "/rgb");
  s.ir_to_rgb = PoseFromJson(Field(j, "ir_to_rgb", ""), "/ir_to_rgb", 1e-6);
  s.marker_poses = Poses(Field(j, "marker_poses", ""), "/marker_poses");
  s.marker_points = Points3(Field(j, "marker_points", ""), "/marker_points");
  s.rgb_observations =
      std::move(ReadObservationsCsv(observations_csv, 1, s.marker_poses.size(), s.marker_points.size())[0]);
  return s;
}

Json StereoSceneToJson(const StereoScene& s) {
  return {{"left", CameraToJson(s.left)},
          {"right", CameraToJson(s.right)},
          {"left_to_right", PoseToJson(s.left_to_right)},
          {"board_poses", PosesToJson(s.board_poses)},
          {"board_points", Points3ToJson(s.board_points)}};
}

Json IrRgbSceneToJson(const IrRgbScene& s) {
  return {{"rgb", CameraToJson(s.rgb)},
          {"ir_to_rgb", PoseToJson(s.ir_to_rgb)},
          {"marker_poses", PosesToJson(s.marker_poses)},
          {"marker_points", Points3ToJson(s.marker_points)}};
}

void WriteRetimedCsv(const std::vector<RetimedFrame>& frames, std::ostream& out) {
  out << "frame_index,local_ms,global_ms\n" << std::setprecision(17);
  for (const auto& f : frames) out << f.frame_index << ',' << f.local_ms << ',' << f.global_ms << '\n';
}

std::vector<RetimedFrame> ReadRetimedCsv(const std::string& file) {
  std::vector<RetimedFrame> out;
  const auto rows = CsvRows(file, "frame_index,local_ms,global_ms");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line = rows[r];
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    RetimedFrame f;
    std::string rest;
    if (!(in >> f.frame_index >> f.local_ms >> f.global_ms) || (in >> rest)) {
      throw SchemaError(file + ":" + std::to_string(r + 2), "expected frame_index,local_ms,global_ms");
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace ledsync

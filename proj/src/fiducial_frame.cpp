#include "ledsync/fiducial_frame.hpp"

#include <fstream>

namespace ledsync {

Json PoseToJson(const RigidPose& pose) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation()(r, c));
  }
  const Vec3& t = pose.translation();
  return {{"rotation", rot}, {"translation", {t.x(), t.y(), t.z()}}};
}

RigidPose PoseFromJson(const Json& j, const std::string& path, double tolerance) {
  using namespace json_util;
  const auto rot = Numbers(Field(j, "rotation", path), Join(path, "rotation"), 9);
  const auto tr = Numbers(Field(j, "translation", path), Join(path, "translation"), 3);
  Mat3 r;
  r << rot[0], rot[1], rot[2], rot[3], rot[4], rot[5], rot[6], rot[7], rot[8];
  try {
    return RigidPose(r, Vec3(tr[0], tr[1], tr[2]), tolerance);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(Join(path, "rotation"), e.what());
  }
}

Json FiducialFrameToJson(const FiducialFrame& frame) {
  Json points = Json::array();
  for (const auto& p : frame.points) points.push_back({p.x(), p.y(), p.z()});
  Json j = {{"local_ts", frame.local_ts}, {"points", points}};
  if (frame.pose) j["pose"] = PoseToJson(*frame.pose);
  return j;
}

FiducialFrame FiducialFrameFromJson(const Json& j, const std::string& path) {
  using namespace json_util;
  FiducialFrame frame;
  frame.local_ts = Number(Field(j, "local_ts", path), Join(path, "local_ts"));
  const std::string points_path = Join(path, "points");
  const Json& points = Array(Field(j, "points", path), points_path);
  frame.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto xyz = Numbers(points[i], Join(points_path, i), 3);
    frame.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  if (j.contains("pose") && !j["pose"].is_null()) {
    frame.pose = PoseFromJson(j["pose"], Join(path, "pose"), 1e-6);
  }
  return frame;
}

std::vector<FiducialFrame> ReadFiducialFrames(const std::string& file) {
  const auto lines = json_util::ReadLines(file);
  std::vector<FiducialFrame> frames;
  frames.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    frames.push_back(FiducialFrameFromJson(lines[i], "/" + std::to_string(i)));
  }
  return frames;
}

void WriteFiducialFrames(const std::vector<FiducialFrame>& frames, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  for (const auto& f : frames) out << FiducialFrameToJson(f).dump() << '\n';
}

}  // namespace ledsync

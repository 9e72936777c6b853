// One sample of a 3D fiducial tracker: a timestamp plus unordered 3D points.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ledsync/geometry.hpp"
#include "ledsync/json_util.hpp"

namespace ledsync {

struct FiducialFrame {
  double local_ts = 0.0;
  std::vector<Vec3> points;
  // Marker pose reported by the tracker itself (board-local -> tracker).
  std::optional<RigidPose> pose;
};

Json FiducialFrameToJson(const FiducialFrame& frame);
// `path` prefixes schema error locations.
FiducialFrame FiducialFrameFromJson(const Json& j, const std::string& path);

std::vector<FiducialFrame> ReadFiducialFrames(const std::string& file);
void WriteFiducialFrames(const std::vector<FiducialFrame>& frames, const std::string& file);

Json PoseToJson(const RigidPose& pose);
RigidPose PoseFromJson(const Json& j, const std::string& path, double tolerance = 1e-9);

}  // namespace ledsync

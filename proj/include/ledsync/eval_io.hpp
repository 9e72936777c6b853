// File formats for the evaluation metrics and retimed streams.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ledsync/geometry.hpp"
#include "ledsync/json_util.hpp"

namespace ledsync {

CameraModel CameraFromJson(const Json& j, const std::string& path);
Json CameraToJson(const CameraModel& camera);

// Observations CSV with header view,frame,point,x,y. `views` x `frames` x
// `points` bounds the indices; cells not listed stay empty.
std::vector<ObservationGrid> ReadObservationsCsv(const std::string& file, std::size_t views,
                                                 std::size_t frames, std::size_t points);
void WriteObservationsCsv(const std::vector<ObservationGrid>& views, std::ostream& out);

// {"left", "right", "left_to_right", "board_poses", "board_points"}; the
// observations come from the CSV (view 0 = left, view 1 = right).
StereoScene StereoSceneFromJson(const Json& j, const std::string& observations_csv);
// {"rgb", "ir_to_rgb", "marker_poses", "marker_points"}; CSV view 0 only.
IrRgbScene IrRgbSceneFromJson(const Json& j, const std::string& observations_csv);

Json StereoSceneToJson(const StereoScene& scene);
Json IrRgbSceneToJson(const IrRgbScene& scene);

struct RetimedFrame {
  int frame_index = 0;
  double local_ms = 0.0;
  double global_ms = 0.0;
};

// CSV: frame_index,local_ms,global_ms
void WriteRetimedCsv(const std::vector<RetimedFrame>& frames, std::ostream& out);
std::vector<RetimedFrame> ReadRetimedCsv(const std::string& file);

}  // namespace ledsync

// Clock decoding from 3D fiducial sequences of an optical tracker.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ledsync/board.hpp"
#include "ledsync/decoder.hpp"
#include "ledsync/fiducial_frame.hpp"
#include "ledsync/geometry.hpp"

namespace ledsync {

struct FtkConfig {
  double rms_tol_mm = 1.0;
  double plane_tol_mm = 3.0;
  double match_tol_mm = 2.0;
};

// Corner LEDs plus the orientation LED, lifted to z = 0. The orientation LED
// makes the otherwise square template rotation-unique.
std::vector<Vec3> MarkerTemplate(const BoardGeometry& board);

// Least-squares rigid transform mapping src onto dst (Kabsch).
RigidPose FitRigid(std::span<const Vec3> src, std::span<const Vec3> dst);

// Per-coordinate RMS of dst - pose(src).
double RigidRms(const RigidPose& pose, std::span<const Vec3> src, std::span<const Vec3> dst);

// Finds the template among `points` and returns the board-local -> tracker
// pose. Absent if no assignment fits within rms_tol_mm, or if several do.
std::optional<RigidPose> DetectMarker3d(std::span<const Vec3> points,
                                        std::span<const Vec3> marker_template, double rms_tol_mm,
                                        std::string* diagnostic = nullptr);

LedReading DecodeFiducials(const FiducialFrame& frame, const RigidPose& pose,
                           const BoardGeometry& board, double plane_tol_mm, double match_tol_mm);

struct FtkDecodedFrame {
  DecodedFrame decoded;
  // Re-fitted from the fiducials; present whenever the marker was found.
  std::optional<RigidPose> fitted_pose;
  // As reported by the tracker, if the input carried one.
  std::optional<RigidPose> tracker_pose;
};

FtkDecodedFrame DecodeFiducialFrame(const FiducialFrame& frame, const BoardGeometry& board,
                                    const FtkConfig& config = {}, int frame_index = 0);

std::vector<FtkDecodedFrame> DecodeFiducialFrames(const std::vector<FiducialFrame>& frames,
                                                  const BoardGeometry& board,
                                                  const FtkConfig& config = {});

}  // namespace ledsync

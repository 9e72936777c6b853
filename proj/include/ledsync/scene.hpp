// Synthetic moving-target scenes with known extrinsics, for exercising the
// reprojection metrics and track alignment.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ledsync/geometry.hpp"
#include "ledsync/sync.hpp"

namespace ledsync {

// Target pose (target -> reference camera) as a function of global time.
using Motion = std::function<RigidPose(double t_ms)>;

// Target sweeping a Lissajous path across the view at `distance_mm` with a
// peak speed of about `speed_mm_per_s`, slowly rotating.
Motion SweepingMotion(double distance_mm, double speed_mm_per_s);

// cols x rows inner corners, origin at the board centre, z = 0.
std::vector<Vec3> CheckerboardCorners(int cols, int rows, double square_mm);

struct StereoRig {
  CameraModel left;
  CameraModel right;
  RigidPose left_to_right;
};

// Right camera 300 mm to the right of the left one, toed in by 10 degrees.
StereoRig DefaultStereoRig();

// Board poses sampled at pose_times; left and right observations at their
// own times, with isotropic Gaussian pixel noise.
StereoScene MakeStereoScene(const StereoRig& rig, std::span<const Vec3> points, const Motion& motion,
                            std::span<const double> pose_times, std::span<const double> left_times,
                            std::span<const double> right_times, double pixel_noise, std::uint64_t seed);

// Marker poses (marker -> IR tracker) at pose_times, RGB observations at
// rgb_times.
IrRgbScene MakeIrRgbScene(const CameraModel& rgb, const RigidPose& ir_to_rgb, std::span<const Vec3> points,
                          const Motion& motion, std::span<const double> pose_times,
                          std::span<const double> rgb_times, double pixel_noise, std::uint64_t seed);

// Observations of `points` by a camera at `camera_from_reference`, one frame
// per entry of frame_times; point ids are indices into `points`.
Track2D ObserveTrack(const std::string& stream_id, const CameraModel& camera,
                     const RigidPose& camera_from_reference, std::span<const Vec3> points,
                     const Motion& motion, std::span<const double> frame_times, double pixel_noise,
                     std::uint64_t seed);

}  // namespace ledsync

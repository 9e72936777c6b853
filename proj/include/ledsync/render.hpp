// Synthetic renderer for the LED clock board.
//
// Produces grayscale frames and 3D fiducial sequences with exactly known
// exposure windows. Every decoder and fitting test is checked against it.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ledsync/board.hpp"
#include "ledsync/fiducial_frame.hpp"
#include "ledsync/geometry.hpp"
#include "ledsync/image.hpp"

namespace ledsync {

// Half-open real-valued interval [start_ms, end_ms) on the global timeline.
struct TimeInterval {
  double start_ms = 0.0;
  double end_ms = 0.0;

  double Length() const { return end_ms - start_ms; }
  TimeInterval Shifted(double offset) const { return {start_ms + offset, end_ms + offset}; }
};

struct CaptureConfig {
  double fps = 30.0;
  double exposure_ms = 8.33;
  double alpha_true = 1.0;
  double beta_true = 0.0;
  // Exposure-start delay of the bottom image row relative to the top row.
  double rolling_shutter_skew_ms = 0.0;
  // Std of additive Gaussian intensity noise on the 0-255 scale.
  double noise_sigma = 0.0;
  double ambient = 140.0;
  // Multiplier on the LED disk radius (0.35 x ring pitch).
  double led_radius_scale = 1.0;
  // Sensor response to an LED that was on for a fraction b of a millisecond:
  // min(1, led_gain * b). LEDs saturate the sensor, so the default registers
  // any LED that was on at some point during the exposure.
  double led_gain = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 42;

  // Throws std::invalid_argument for out-of-range parameters.
  void Validate() const;

  double FramePeriodMs() const { return 1000.0 / fps; }
  double LocalTimestamp(int frame_index) const { return frame_index * FramePeriodMs(); }
  TimeInterval TrueWindow(int frame_index) const;
  double Response(double brightness) const;
};

struct RenderOptions {
  bool draw_marker = true;
  // IR look: no marker, plus the orientation LED next to corner 0.
  bool infrared = false;
  std::array<bool, 4> corners_enabled{true, true, true, true};
};

// Overlap (in ms) of `window` with the intervals during which ring LED
// `led_index` is lit, clamped to [0, 1].
double LedBrightness(int led_index, const TimeInterval& window);
// Counter and corner LEDs: lit if on for at least half of the window.
bool CounterBitLit(int bit, const TimeInterval& window);

// Gray levels of the rendered scene before LED light and noise.
inline constexpr double kBoardLevel = 25.0;
inline constexpr double kMarkerWhiteLevel = 225.0;

GrayImage RenderFrame(const BoardGeometry& board, const CameraModel& camera,
                      const Homography& board_to_image, const TimeInterval& window,
                      const CaptureConfig& config, int frame_index = 0,
                      const RenderOptions& options = {});

// Pose of the board in the camera frame, per frame index.
using PoseSchedule = std::function<RigidPose(int frame_index)>;

struct GroundTruthFrame {
  int frame_index = 0;
  double local_ts_ms = 0.0;
  TimeInterval true_window;
  RigidPose board_pose;
  // Absent for sequences without an image (3D tracker data).
  std::optional<Homography> homography;
};

struct GroundTruthManifest {
  double alpha_true = 1.0;
  double beta_true = 0.0;
  double fps = 30.0;
  double exposure_ms = 0.0;
  std::vector<GroundTruthFrame> frames;
};

GroundTruthManifest MakeManifest(const std::optional<CameraModel>& camera,
                                 const CaptureConfig& config,
                                 const PoseSchedule& trajectory, int n_frames,
                                 int first_frame = 0);

GrayImage RenderManifestFrame(const BoardGeometry& board, const CameraModel& camera,
                              const GroundTruthFrame& frame, const CaptureConfig& config,
                              const RenderOptions& options = {});

// Renders n_frames into `out_dir` as frame_NNNNNN.pgm plus manifest.json.
GroundTruthManifest RenderSequence(const BoardGeometry& board, const CameraModel& camera,
                                   const CaptureConfig& config, const PoseSchedule& trajectory,
                                   int n_frames, const std::filesystem::path& out_dir,
                                   const RenderOptions& options = {});

Json ManifestToJson(const GroundTruthManifest& manifest);
GroundTruthManifest ManifestFromJson(const Json& j);

struct FiducialSequence {
  std::vector<FiducialFrame> frames;
  GroundTruthManifest manifest;
};

// Points of every registered LED (corners, orientation LED, lit counter and
// ring LEDs) after the rigid board pose, with isotropic Gaussian noise.
FiducialSequence GenerateFiducialSequence(const CaptureConfig& config, const BoardGeometry& board,
                                          double marker_noise_mm, const PoseSchedule& trajectory,
                                          int n_frames);

// Single fiducial frame for an explicit window; used by tests and fixtures.
FiducialFrame GenerateFiducialFrame(const BoardGeometry& board, const RigidPose& pose,
                                    const TimeInterval& window, const CaptureConfig& config,
                                    double marker_noise_mm, double local_ts, int frame_index);

// Seed for frame-level randomness derived from (global seed, frame index).
std::uint64_t FrameSeed(std::uint64_t seed, int frame_index);

}  // namespace ledsync

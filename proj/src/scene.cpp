#include "ledsync/scene.hpp"

#include <cmath>
#include <numbers>

#include "ledsync/random.hpp"

namespace ledsync {

Motion SweepingMotion(double distance_mm, double speed_mm_per_s) {
  // x = A sin(w t), y = A/2 sin(2 w t): peak speed A w.
  const double amplitude = 0.15 * distance_mm;
  const double omega = speed_mm_per_s / amplitude / 1000.0;  // rad per ms
  return [=](double t) {
    const double a = omega * t;
    const Vec3 translation(amplitude * std::sin(a), 0.5 * amplitude * std::sin(2.0 * a + 0.3), distance_mm);
    const Mat3 facing = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
    const Mat3 wobble = AxisAngle(Vec3(0.6, 0.8, 0.0), 0.25 * std::sin(0.5 * a)) *
                        AxisAngle(Vec3(0, 0, 1), 0.2 * std::cos(0.3 * a));
    return RigidPose(NearestRotation(wobble * facing), translation);
  };
}

std::vector<Vec3> CheckerboardCorners(int cols, int rows, double square_mm) {
  std::vector<Vec3> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.emplace_back((c - (cols - 1) / 2.0) * square_mm, (r - (rows - 1) / 2.0) * square_mm, 0.0);
  return out;
}

StereoRig DefaultStereoRig() {
  StereoRig rig;
  const double toe = 10.0 * std::numbers::pi / 180.0;
  const Mat3 r = AxisAngle(Vec3(0, 1, 0), -toe);
  // Right camera centre at (300, 0, 0) in the left frame.
  rig.left_to_right = RigidPose(r, -(r * Vec3(300.0, 0.0, 0.0)));
  return rig;
}

namespace {

std::optional<Vec2> Noisy(const Vec2& p, double sigma, Rng& rng) {
  return p + sigma * Vec2(rng.Normal(), rng.Normal());
}

}  // namespace

StereoScene MakeStereoScene(const StereoRig& rig, std::span<const Vec3> points, const Motion& motion,
                            std::span<const double> pose_times, std::span<const double> left_times,
                            std::span<const double> right_times, double pixel_noise, std::uint64_t seed) {
  if (pose_times.size() != left_times.size() || pose_times.size() != right_times.size())
    throw std::invalid_argument("stereo scene needs one time per view in every list");
  Rng rng(seed);
  StereoScene s;
  s.left = rig.left;
  s.right = rig.right;
  s.left_to_right = rig.left_to_right;
  s.board_points.assign(points.begin(), points.end());
  for (std::size_t i = 0; i < pose_times.size(); ++i) {
    s.board_poses.push_back(motion(pose_times[i]));
    const RigidPose at_left = motion(left_times[i]);
    const RigidPose at_right = rig.left_to_right * motion(right_times[i]);
    std::vector<std::optional<Vec2>> l, r;
    for (const auto& x : points) {
      l.push_back(Noisy(Project(rig.left, at_left, x), pixel_noise, rng));
      r.push_back(Noisy(Project(rig.right, at_right, x), pixel_noise, rng));
    }
    s.left_observations.push_back(std::move(l));
    s.right_observations.push_back(std::move(r));
  }
  return s;
}

IrRgbScene MakeIrRgbScene(const CameraModel& rgb, const RigidPose& ir_to_rgb, std::span<const Vec3> points,
                          const Motion& motion, std::span<const double> pose_times,
                          std::span<const double> rgb_times, double pixel_noise, std::uint64_t seed) {
  if (pose_times.size() != rgb_times.size())
    throw std::invalid_argument("IR/RGB scene needs one RGB time per pose");
  Rng rng(seed);
  IrRgbScene s;
  s.rgb = rgb;
  s.ir_to_rgb = ir_to_rgb;
  s.marker_points.assign(points.begin(), points.end());
  for (std::size_t i = 0; i < pose_times.size(); ++i) {
    s.marker_poses.push_back(motion(pose_times[i]));
    const RigidPose at_rgb = ir_to_rgb * motion(rgb_times[i]);
    std::vector<std::optional<Vec2>> row;
    for (const auto& x : points) row.push_back(Noisy(Project(rgb, at_rgb, x), pixel_noise, rng));
    s.rgb_observations.push_back(std::move(row));
  }
  return s;
}

Track2D ObserveTrack(const std::string& stream_id, const CameraModel& camera,
                     const RigidPose& camera_from_reference, std::span<const Vec3> points,
                     const Motion& motion, std::span<const double> frame_times, double pixel_noise,
                     std::uint64_t seed) {
  Rng rng(seed);
  Track2D track{stream_id, {}};
  for (std::size_t f = 0; f < frame_times.size(); ++f) {
    const RigidPose pose = camera_from_reference * motion(frame_times[f]);
    for (std::size_t k = 0; k < points.size(); ++k) {
      track.observations.push_back(
          {static_cast<int>(f), static_cast<int>(k), *Noisy(Project(camera, pose, points[k]), pixel_noise, rng)});
    }
  }
  return track;
}

}  // namespace ledsync

// Pinhole projection, triangulation and the reprojection metrics used to
// evaluate synchronization quality.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "ledsync/homography.hpp"

namespace ledsync {

using Vec3 = Eigen::Vector3d;

class BehindCameraError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CameraModel {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 960.0;
  double cy = 540.0;
  int width = 1920;
  int height = 1080;

  void Validate() const;
  Mat3 K() const;
};

// Proper rigid transform x' = R x + t (translation in mm).
class RigidPose {
 public:
  RigidPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  // Throws std::invalid_argument unless rotation is orthonormal with
  // determinant +1 within `tolerance`.
  RigidPose(const Mat3& rotation, const Vec3& translation, double tolerance = 1e-9);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 Apply(const Vec3& x) const { return rotation_ * x + translation_; }
  RigidPose Inverse() const;
  // (a * b).Apply(x) == a.Apply(b.Apply(x))
  friend RigidPose operator*(const RigidPose& a, const RigidPose& b);

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Rotation about a unit axis by `angle` radians.
Mat3 AxisAngle(const Vec3& axis, double angle);
// Projects an arbitrary 3x3 matrix onto the closest proper rotation.
Mat3 NearestRotation(const Mat3& m);

// Pose maps world points into the camera frame.
Vec2 Project(const CameraModel& camera, const RigidPose& pose, const Vec3& point);

// Homography from board-plane mm (z = 0) to pixels for a board at `pose`.
Homography BoardToImage(const CameraModel& camera, const RigidPose& pose);

struct TriangulationView {
  CameraModel camera;
  RigidPose pose;
  Vec2 pixel;
};

// Linear DLT followed by Gauss-Newton refinement of the reprojection error
// (10 iterations or until the step is below 1e-10 mm). Throws
// DegenerateConfigurationError for parallel rays or coincident centres.
Vec3 Triangulate(std::span<const TriangulationView> views);

// Observation grid indexed [view][point]; missing entries are nullopt.
using ObservationGrid = std::vector<std::vector<std::optional<Vec2>>>;

struct StereoScene {
  CameraModel left;
  CameraModel right;
  RigidPose left_to_right;
  std::vector<RigidPose> board_poses;  // board -> left camera, one per view
  std::vector<Vec3> board_points;
  ObservationGrid left_observations;
  ObservationGrid right_observations;
};

// Symmetric mean reprojection error over both cameras, in pixels.
double StereoMreSymmetric(const StereoScene& scene);

struct IrRgbScene {
  CameraModel rgb;
  RigidPose ir_to_rgb;
  std::vector<RigidPose> marker_poses;  // marker -> IR tracker, one per pair
  std::vector<Vec3> marker_points;      // checkerboard corners, marker frame
  ObservationGrid rgb_observations;
};

double IrRgbMre(const IrRgbScene& scene);

// Mean Euclidean distance between matched 3D point sets.
double PoseSetDistance(std::span<const Vec3> a, std::span<const Vec3> b);

}  // namespace ledsync

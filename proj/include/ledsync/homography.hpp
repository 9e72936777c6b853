// Planar homography between the board plane (mm) and the image (px).

#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Core>

#include "ledsync/board.hpp"

namespace ledsync {

using Mat3 = Eigen::Matrix3d;

class DegenerateConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 3x3 projective map normalized so that the bottom-right entry is 1.
class Homography {
 public:
  static constexpr double kMinDeterminant = 1e-12;

  Homography() : matrix_(Mat3::Identity()) {}
  // Throws DegenerateConfigurationError if the matrix is not invertible or its
  // bottom-right entry vanishes.
  explicit Homography(const Mat3& matrix);

  const Mat3& matrix() const { return matrix_; }
  Homography Inverse() const;

  Vec2 Apply(const Vec2& p) const;
  // Homogeneous scale of the mapped point; positive for points in front of
  // the camera when the homography was built from a camera pose.
  double Depth(const Vec2& p) const;

  // 2x2 Jacobian of the map at p.
  Eigen::Matrix2d Jacobian(const Vec2& p) const;

 private:
  Mat3 matrix_;
};

// Normalized DLT from >= 4 correspondences. Exact for noise-free inputs.
// Throws DegenerateConfigurationError for rank-deficient configurations.
Homography EstimateHomography(std::span<const Vec2> src, std::span<const Vec2> dst);

}  // namespace ledsync

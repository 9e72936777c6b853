#include "ledsync/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace ledsync {

void CameraModel::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw std::invalid_argument("principal point must lie inside the image");
  }
}

Mat3 CameraModel::K() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

RigidPose::RigidPose(const Mat3& rotation, const Vec3& translation, double tolerance)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw std::invalid_argument("pose must be finite");
  }
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tolerance || std::abs(rotation.determinant() - 1.0) > tolerance) {
    throw std::invalid_argument("rotation is not proper orthonormal (deviation " +
                                std::to_string(ortho) + ")");
  }
}

RigidPose RigidPose::Inverse() const {
  RigidPose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

RigidPose operator*(const RigidPose& a, const RigidPose& b) {
  RigidPose out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return out;
}

Mat3 AxisAngle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Mat3 NearestRotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Vec2 Project(const CameraModel& camera, const RigidPose& pose, const Vec3& point) {
  const Vec3 pc = pose.Apply(point);
  if (!(pc.z() > 0.0)) throw BehindCameraError("point is not in front of the camera");
  return {camera.fx * pc.x() / pc.z() + camera.cx, camera.fy * pc.y() / pc.z() + camera.cy};
}

Homography BoardToImage(const CameraModel& camera, const RigidPose& pose) {
  Mat3 m;
  m.col(0) = pose.rotation().col(0);
  m.col(1) = pose.rotation().col(1);
  m.col(2) = pose.translation();
  return Homography(camera.K() * m);
}

Vec3 Triangulate(std::span<const TriangulationView> views) {
  if (views.size() < 2) throw DegenerateConfigurationError("triangulation needs two views");
  for (std::size_t a = 0; a < views.size(); ++a) {
    for (std::size_t b = a + 1; b < views.size(); ++b) {
      const Vec3 ca = views[a].pose.Inverse().translation();
      const Vec3 cb = views[b].pose.Inverse().translation();
      if ((ca - cb).norm() <= 1e-9 * std::max(1.0, ca.norm())) {
        throw DegenerateConfigurationError("views share a camera centre");
      }
    }
  }

  // Constraints in normalized image coordinates for better conditioning.
  Eigen::MatrixXd a(2 * views.size(), 4);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    const double xn = (v.pixel.x() - v.camera.cx) / v.camera.fx;
    const double yn = (v.pixel.y() - v.camera.cy) / v.camera.fy;
    Eigen::Matrix<double, 3, 4> p;
    p.leftCols<3>() = v.pose.rotation();
    p.col(3) = v.pose.translation() / 1000.0;  // metres keep the system balanced
    a.row(2 * i) = xn * p.row(2) - p.row(0);
    a.row(2 * i + 1) = yn * p.row(2) - p.row(1);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 1e-12 * sv(0))) throw DegenerateConfigurationError("rays are parallel");
  const Eigen::Vector4d xh = svd.matrixV().col(3);
  if (std::abs(xh(3)) < 1e-12 * xh.head<3>().norm()) {
    throw DegenerateConfigurationError("triangulated point at infinity");
  }
  Vec3 x = xh.head<3>() / xh(3) * 1000.0;

  for (int iter = 0; iter < 10; ++iter) {
    Eigen::MatrixXd jac(2 * views.size(), 3);
    Eigen::VectorXd res(2 * views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto& v = views[i];
      const Vec3 pc = v.pose.Apply(x);
      if (!(pc.z() > 0.0)) throw BehindCameraError("triangulated point behind a camera");
      const double iz = 1.0 / pc.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << v.camera.fx * iz, 0, -v.camera.fx * pc.x() * iz * iz,
               0, v.camera.fy * iz, -v.camera.fy * pc.y() * iz * iz;
      jac.block<2, 3>(2 * i, 0) = dproj * v.pose.rotation();
      res.segment<2>(2 * i) =
          Vec2(v.camera.fx * pc.x() * iz + v.camera.cx, v.camera.fy * pc.y() * iz + v.camera.cy) - v.pixel;
    }
    const Vec3 step = (jac.transpose() * jac).ldlt().solve(-jac.transpose() * res);
    if (!step.allFinite()) break;
    x += step;
    if (step.norm() < 1e-10) break;
  }
  return x;
}

namespace {

const Vec2& RequireObservation(const ObservationGrid& grid, std::size_t view, std::size_t point,
                               const char* which) {
  if (view >= grid.size() || point >= grid[view].size() || !grid[view][point]) {
    throw std::invalid_argument(std::string("missing ") + which + " observation for view " +
                                std::to_string(view) + ", point " + std::to_string(point));
  }
  return *grid[view][point];
}

}  // namespace

double StereoMreSymmetric(const StereoScene& scene) {
  const std::size_t n = scene.board_poses.size();
  const std::size_t m = scene.board_points.size();
  if (n == 0 || m == 0) throw std::invalid_argument("MRE needs at least one view and one point");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const RigidPose right_pose = scene.left_to_right * scene.board_poses[i];
    for (std::size_t j = 0; j < m; ++j) {
      const Vec2& x1 = RequireObservation(scene.left_observations, i, j, "left");
      const Vec2& x2 = RequireObservation(scene.right_observations, i, j, "right");
      sum += (x1 - Project(scene.left, scene.board_poses[i], scene.board_points[j])).norm();
      sum += (x2 - Project(scene.right, right_pose, scene.board_points[j])).norm();
    }
  }
  return sum / (2.0 * static_cast<double>(n * m));
}

double IrRgbMre(const IrRgbScene& scene) {
  const std::size_t n = scene.marker_poses.size();
  const std::size_t m = scene.marker_points.size();
  if (n == 0 || m == 0) throw std::invalid_argument("MRE needs at least one pair and one point");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const RigidPose to_rgb = scene.ir_to_rgb * scene.marker_poses[i];
    for (std::size_t j = 0; j < m; ++j) {
      const Vec2& x = RequireObservation(scene.rgb_observations, i, j, "rgb");
      sum += (x - Project(scene.rgb, to_rgb, scene.marker_points[j])).norm();
    }
  }
  return sum / static_cast<double>(n * m);
}

double PoseSetDistance(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("pose sets differ in size: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  if (a.empty()) throw std::invalid_argument("pose sets are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).norm();
  return sum / static_cast<double>(a.size());
}

}  // namespace ledsync

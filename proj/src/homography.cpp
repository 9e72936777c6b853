#include "ledsync/homography.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace ledsync {

Homography::Homography(const Mat3& matrix) {
  if (!matrix.allFinite() || std::abs(matrix(2, 2)) < 1e-300) {
    throw DegenerateConfigurationError("homography has a vanishing bottom-right entry");
  }
  matrix_ = matrix / matrix(2, 2);
  if (!(std::abs(matrix_.determinant()) > kMinDeterminant)) {
    throw DegenerateConfigurationError("homography is not invertible");
  }
}

Homography Homography::Inverse() const { return Homography(matrix_.inverse()); }

Vec2 Homography::Apply(const Vec2& p) const {
  const Eigen::Vector3d q = matrix_ * p.homogeneous();
  return q.hnormalized();
}

double Homography::Depth(const Vec2& p) const {
  return matrix_.row(2).dot(p.homogeneous());
}

Eigen::Matrix2d Homography::Jacobian(const Vec2& p) const {
  const Eigen::Vector3d q = matrix_ * p.homogeneous();
  const double w = q.z();
  Eigen::Matrix2d j;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      j(r, c) = (matrix_(r, c) * w - q(r) * matrix_(2, c)) / (w * w);
    }
  }
  return j;
}

namespace {

// Similarity transform moving the centroid to the origin with mean distance
// sqrt(2).
Mat3 NormalizingTransform(std::span<const Vec2> points) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  if (!(mean_dist > 0.0)) throw DegenerateConfigurationError("coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0, -s * centroid.x(),
       0, s, -s * centroid.y(),
       0, 0, 1;
  return t;
}

bool HasCollinearTriple(std::span<const Vec2> pts) {
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      for (std::size_t c = b + 1; c < pts.size(); ++c) {
        const Vec2 u = pts[b] - pts[a];
        const Vec2 v = pts[c] - pts[a];
        const double cross = u.x() * v.y() - u.y() * v.x();
        if (std::abs(cross) <= 1e-9 * u.norm() * v.norm()) return true;
      }
    }
  }
  return false;
}

}  // namespace

Homography EstimateHomography(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("homography needs matched point lists");
  }
  const std::size_t n = src.size();
  if (n < 4) throw DegenerateConfigurationError("homography needs at least 4 correspondences");
  // With exactly four points any collinear triple leaves the system
  // underdetermined.
  if (n == 4 && (HasCollinearTriple(src) || HasCollinearTriple(dst))) {
    throw DegenerateConfigurationError("three of four correspondences are collinear");
  }

  const Mat3 ts = NormalizingTransform(src);
  const Mat3 td = NormalizingTransform(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * src[i].homogeneous();
    const Eigen::Vector3d q = td * dst[i].homogeneous();
    const double x = p.x(), y = p.y();
    const double u = q.x(), v = q.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Null space must be one-dimensional. For 4 points the matrix is 8x9 and
  // has 8 singular values; for more points the 9th is the residual.
  const Eigen::Index rank_index = 7;
  if (sv.size() <= rank_index || !(sv(rank_index) > 1e-10 * sv(0))) {
    throw DegenerateConfigurationError("rank-deficient homography system");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2),
        h(3), h(4), h(5),
        h(6), h(7), h(8);
  return Homography(td.inverse() * hn * ts);
}

}  // namespace ledsync

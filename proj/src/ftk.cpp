#include "ledsync/ftk.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ledsync/parallel.hpp"

namespace ledsync {

std::vector<Vec3> MarkerTemplate(const BoardGeometry& board) {
  std::vector<Vec3> t;
  for (const auto& c : board.corners) t.emplace_back(c.x(), c.y(), 0.0);
  if (board.orientation_led) t.emplace_back(board.orientation_led->x(), board.orientation_led->y(), 0.0);
  return t;
}

RigidPose FitRigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3) {
    throw std::invalid_argument("rigid fit needs >= 3 matched points");
  }
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(src.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) cov += (dst[i] - cd) * (src[i] - cs).transpose();
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return RigidPose(r, cd - r * cs, 1e-6);
}

double RigidRms(const RigidPose& pose, std::span<const Vec3> src, std::span<const Vec3> dst) {
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) sum += (dst[i] - pose.Apply(src[i])).squaredNorm();
  return std::sqrt(sum / (3.0 * static_cast<double>(src.size())));
}

std::optional<RigidPose> DetectMarker3d(std::span<const Vec3> points,
                                        std::span<const Vec3> marker_template, double rms_tol_mm,
                                        std::string* diagnostic) {
  auto fail = [&](const std::string& why) -> std::optional<RigidPose> {
    if (diagnostic) *diagnostic = why;
    return std::nullopt;
  };
  const std::size_t m = marker_template.size();
  if (m < 3) throw std::invalid_argument("template needs >= 3 points");
  if (points.size() < std::max<std::size_t>(4, m)) return fail("too few points");
  // Noise on a distance is about sqrt(2) times the per-point noise; allow a
  // generous multiple of the RMS tolerance before the exact RMS check.
  const double prune = 4.0 * rms_tol_mm;
  std::vector<std::vector<double>> tdist(m, std::vector<double>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) tdist[a][b] = (marker_template[a] - marker_template[b]).norm();

  std::vector<std::size_t> assign(m);
  std::vector<Vec3> matched(m);
  std::vector<RigidPose> accepted;
  double best_rms = 0.0;
  auto search = [&](auto&& self, std::size_t depth) -> void {
    if (depth == m) {
      for (std::size_t i = 0; i < m; ++i) matched[i] = points[assign[i]];
      const RigidPose pose = FitRigid(marker_template, matched);
      const double rms = RigidRms(pose, marker_template, matched);
      if (rms <= rms_tol_mm) {
        if (accepted.empty() || rms < best_rms) best_rms = rms;
        accepted.push_back(pose);
      }
      return;
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < depth && ok; ++k) {
        ok = assign[k] != i &&
             std::abs((points[i] - points[assign[k]]).norm() - tdist[depth][k]) <= prune;
      }
      if (!ok) continue;
      assign[depth] = i;
      self(self, depth + 1);
    }
  };
  search(search, 0);
  if (accepted.empty()) return fail("no point subset matches the marker template");
  if (accepted.size() > 1) {
    return fail("ambiguous: " + std::to_string(accepted.size()) + " assignments match");
  }
  return accepted.front();
}

namespace {

// Tracker points in board-local coordinates that lie on the board plane.
std::vector<Vec2> PlanarPoints(const FiducialFrame& frame, const RigidPose& pose, double plane_tol) {
  const RigidPose inverse = pose.Inverse();
  std::vector<Vec2> out;
  for (const auto& p : frame.points) {
    const Vec3 b = inverse.Apply(p);
    if (std::abs(b.z()) <= plane_tol) out.push_back(b.head<2>());
  }
  return out;
}

bool Near(const std::vector<Vec2>& pts, const Vec2& led, double tol) {
  return std::any_of(pts.begin(), pts.end(), [&](const Vec2& p) { return (p - led).norm() <= tol; });
}

}  // namespace

LedReading DecodeFiducials(const FiducialFrame& frame, const RigidPose& pose,
                           const BoardGeometry& board, double plane_tol_mm, double match_tol_mm) {
  const auto planar = PlanarPoints(frame, pose, plane_tol_mm);
  LedReading reading;
  for (int k = 0; k < kRingSize; ++k) reading.ring[k] = Near(planar, board.ring[k], match_tol_mm);
  for (int k = 0; k < kCounterBits; ++k) {
    reading.counter_bits[k] = Near(planar, board.counter[k], match_tol_mm);
    if (reading.counter_bits[k]) reading.counter |= std::int64_t{1} << k;
  }
  return reading;
}

namespace {

// Refits the pose on every fiducial matched to a known LED position.
RigidPose RefinePose(const FiducialFrame& frame, const RigidPose& pose, const BoardGeometry& board,
                     const FtkConfig& config) {
  std::vector<Vec2> known(board.ring.begin(), board.ring.end());
  known.insert(known.end(), board.counter.begin(), board.counter.end());
  known.insert(known.end(), board.corners.begin(), board.corners.end());
  if (board.orientation_led) known.push_back(*board.orientation_led);
  const RigidPose inverse = pose.Inverse();
  std::vector<Vec3> src, dst;
  for (const auto& p : frame.points) {
    const Vec3 b = inverse.Apply(p);
    if (std::abs(b.z()) > config.plane_tol_mm) continue;
    for (const auto& k : known) {
      if ((b.head<2>() - k).norm() <= config.match_tol_mm) {
        src.emplace_back(k.x(), k.y(), 0.0);
        dst.push_back(p);
        break;
      }
    }
  }
  if (src.size() < 3) return pose;
  return FitRigid(src, dst);
}

}  // namespace

FtkDecodedFrame DecodeFiducialFrame(const FiducialFrame& frame, const BoardGeometry& board,
                                    const FtkConfig& config, int frame_index) {
  FtkDecodedFrame out;
  out.decoded.frame_index = frame_index;
  out.tracker_pose = frame.pose;
  try {
    std::string why;
    const auto templ = MarkerTemplate(board);
    const auto pose = DetectMarker3d(frame.points, templ, config.rms_tol_mm, &why);
    if (!pose) throw DecodeError(Rejection::kNoMarker, 1, why);
    out.fitted_pose = RefinePose(frame, *pose, board, config);
    const LedReading reading =
        DecodeFiducials(frame, *out.fitted_pose, board, config.plane_tol_mm, config.match_tol_mm);
    const Sector sector = FindSector(reading.ring);
    AcceptedFrame ok;
    ok.counter = reading.counter;
    ok.first_lit = sector.first;
    ok.last_lit = sector.last;
    ok.window = DecodeWindow(reading.counter, sector.first, sector.last);
    out.decoded.outcome = ok;
  } catch (const DecodeError& e) {
    out.decoded.outcome = RejectedFrame{e.reason(), e.step(), e.what()};
  }
  return out;
}

std::vector<FtkDecodedFrame> DecodeFiducialFrames(const std::vector<FiducialFrame>& frames,
                                                  const BoardGeometry& board,
                                                  const FtkConfig& config) {
  std::vector<FtkDecodedFrame> out(frames.size());
  ParallelFor(frames.size(), [&](std::size_t i) {
    out[i] = DecodeFiducialFrame(frames[i], board, config, static_cast<int>(i));
  });
  return out;
}

}  // namespace ledsync

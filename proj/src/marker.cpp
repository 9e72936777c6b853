#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "components.hpp"
#include "ledsync/decoder.hpp"
#include "polygon.hpp"

namespace ledsync {
namespace {

// Local-mean threshold: dark where I < mean(window) - offset.
std::vector<std::uint8_t> AdaptiveDarkMask(const GrayImage& image, const DecoderConfig& config) {
  const int w = image.width();
  const int h = image.height();
  const int win = std::max(3, std::min(w, h) / std::max(1, config.threshold_window_divisor));
  const int half = win / 2;
  std::vector<std::int64_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto I = [&](int x, int y) -> std::int64_t& {
    return integral[static_cast<std::size_t>(y) * (w + 1) + x];
  };
  for (int y = 0; y < h; ++y) {
    std::int64_t row = 0;
    const auto src = image.row(y);
    for (int x = 0; x < w; ++x) {
      row += src[x];
      I(x + 1, y + 1) = I(x + 1, y) + row;
    }
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half), y1 = std::min(h, y + half + 1);
    const auto src = image.row(y);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half), x1 = std::min(w, x + half + 1);
      const std::int64_t sum = I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0);
      const double mean = static_cast<double>(sum) / ((x1 - x0) * (y1 - y0));
      mask[static_cast<std::size_t>(y) * w + x] = src[x] < mean - config.threshold_offset;
    }
  }
  return mask;
}

// Moves each quad edge onto the dark-to-bright transition of the marker's
// outer border and re-intersects adjacent edges.
std::array<Vec2, 4> RefineEdges(const GrayImage& image, const std::array<Vec2, 4>& quad) {
  const Vec2 centre = (quad[0] + quad[1] + quad[2] + quad[3]) / 4.0;
  const double module = std::sqrt(std::abs(polygon::SignedArea(quad))) / 6.0;
  const double reach = std::clamp(0.35 * module, 1.0, 8.0) + 1.0;
  constexpr double kStep = 0.25;

  std::array<Eigen::Vector3d, 4> lines;  // a x + b y + c = 0
  for (int e = 0; e < 4; ++e) {
    const Vec2 a = quad[e];
    const Vec2 b = quad[(e + 1) % 4];
    const Vec2 dir = (b - a).normalized();
    Vec2 normal(-dir.y(), dir.x());
    if (normal.dot((a + b) / 2.0 - centre) < 0) normal = -normal;
    const int samples = std::clamp(static_cast<int>((b - a).norm() / 2.0), 6, 40);
    std::vector<Vec2> crossings;
    for (int i = 0; i < samples; ++i) {
      const double t = 0.1 + 0.8 * (i + 0.5) / samples;
      const Vec2 p = a + t * (b - a);
      std::vector<double> profile;
      for (double s = -reach; s <= reach + 1e-9; s += kStep) {
        const Vec2 q = p + s * normal;
        profile.push_back(image.Sample(q.x(), q.y()));
      }
      const std::size_t n = profile.size();
      const double lo = (profile[0] + profile[1] + profile[2]) / 3.0;
      const double hi = (profile[n - 1] + profile[n - 2] + profile[n - 3]) / 3.0;
      if (hi - lo < 20.0) continue;
      const double mid = 0.5 * (lo + hi);
      double best = 1e300;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        if ((profile[k] < mid) != (profile[k + 1] < mid)) {
          const double f = (mid - profile[k]) / (profile[k + 1] - profile[k]);
          const double s = -reach + (k + f) * kStep;
          if (std::abs(s) < std::abs(best)) best = s;
        }
      }
      if (best < 1e299) crossings.push_back(p + best * normal);
    }
    if (crossings.size() < 4) return quad;
    Vec2 mean = Vec2::Zero();
    for (const auto& c : crossings) mean += c;
    mean /= static_cast<double>(crossings.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& c : crossings) cov += (c - mean) * (c - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Vec2 n = eig.eigenvectors().col(0);
    lines[e] = Eigen::Vector3d(n.x(), n.y(), -n.dot(mean));
  }
  std::array<Vec2, 4> refined;
  for (int k = 0; k < 4; ++k) {
    const Eigen::Vector3d p = lines[(k + 3) % 4].cross(lines[k]);
    if (std::abs(p.z()) < 1e-12) return quad;
    refined[k] = p.head<2>() / p.z();
    if ((refined[k] - quad[k]).norm() > 0.5 * module + 2.0) return quad;
  }
  return refined;
}

struct GridSample {
  std::array<double, 36> cell{};       // 6x6 module means, row-major
  std::array<double, 36> agreement{};  // fraction of sub-samples on the majority side
  double quiet = 0.0;                  // mean of the white margin
  double border = 0.0;                 // mean of the 20 border modules
};

// Samples the 6x6 module grid of a quad whose vertex 0 is the canonical
// top-left corner.
GridSample SampleGrid(const GrayImage& image, const std::array<Vec2, 4>& quad) {
  const std::array<Vec2, 4> canon = {Vec2(0, 0), Vec2(6, 0), Vec2(6, 6), Vec2(0, 6)};
  const Homography h = EstimateHomography(canon, quad);
  auto at = [&](double u, double v) {
    const Vec2 p = h.Apply(Vec2(u, v));
    return image.Sample(p.x(), p.y());
  };
  constexpr std::array<double, 3> kOffsets = {0.3, 0.5, 0.7};
  GridSample g;
  std::array<std::array<double, 9>, 36> subs;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      double sum = 0.0;
      int k = 0;
      for (double dv : kOffsets) {
        for (double du : kOffsets) {
          const double v = at(c + du, r + dv);
          subs[r * 6 + c][k++] = v;
          sum += v;
        }
      }
      g.cell[r * 6 + c] = sum / 9.0;
    }
  }
  double quiet = 0.0;
  for (int i = 0; i < 6; ++i) {
    quiet += at(i + 0.5, -0.25) + at(i + 0.5, 6.25) + at(-0.25, i + 0.5) + at(6.25, i + 0.5);
  }
  g.quiet = quiet / 24.0;
  double border = 0.0;
  for (int i = 0; i < 36; ++i) {
    const int r = i / 6, c = i % 6;
    if (r == 0 || r == 5 || c == 0 || c == 5) border += g.cell[i];
  }
  g.border = border / 20.0;
  const double thr = 0.5 * (g.quiet + g.border);
  for (int i = 0; i < 36; ++i) {
    int bright = 0;
    for (double v : subs[i]) bright += v > thr;
    g.agreement[i] = std::max(bright, 9 - bright) / 9.0;
  }
  return g;
}

}  // namespace

std::optional<DetectedMarker> DetectMarker(const GrayImage& image, const BoardGeometry& board,
                                           const DecoderConfig& config, std::string* diagnostic) {
  auto fail = [&](const std::string& why) -> std::optional<DetectedMarker> {
    if (diagnostic) *diagnostic = why;
    return std::nullopt;
  };
  if (image.empty()) return fail("empty image");
  const int w = image.width();
  const auto mask = AdaptiveDarkMask(image, config);
  const auto regions = components::Label(
      w, image.height(), [&](int x, int y) { return mask[static_cast<std::size_t>(y) * w + x] != 0; },
      24);

  std::vector<DetectedMarker> found;
  for (const auto& region : regions) {
    if (region.xmax - region.xmin < 6 || region.ymax - region.ymin < 6) continue;
    std::vector<Vec2> boundary;
    boundary.reserve(2 * region.runs.size());
    for (const auto& run : region.runs) {
      boundary.emplace_back(run.x0, run.y);
      boundary.emplace_back(run.x1, run.y);
    }
    const auto hull = polygon::ConvexHull(std::move(boundary));
    if (hull.size() < 4) continue;
    const double hull_area = std::abs(polygon::SignedArea(hull));
    if (hull_area < 36.0) continue;
    auto quad = polygon::Clockwise(polygon::MaxAreaQuad(hull));
    if (std::abs(polygon::SignedArea(quad)) < 0.9 * hull_area) continue;
    // Hull vertices are dark pixel centres; the border edge is half a pixel out.
    const Vec2 c = (quad[0] + quad[1] + quad[2] + quad[3]) / 4.0;
    for (auto& q : quad) q += 0.5 * (q - c).normalized();
    try {
      quad = RefineEdges(image, quad);
      const GridSample g = SampleGrid(image, quad);
      if (g.quiet - g.border < 30.0) continue;
      const double thr = 0.5 * (g.quiet + g.border);
      bool ok = true;
      for (int i = 0; i < 36 && ok; ++i) {
        const int r = i / 6, col = i % 6;
        const bool edge = r == 0 || r == 5 || col == 0 || col == 5;
        if (g.agreement[i] < 7.0 / 9.0) ok = false;
        if (edge && g.cell[i] > thr) ok = false;
      }
      if (!ok) continue;
      int matches = 0;
      int match_rotation = 0;
      for (int s = 0; s < 4; ++s) {
        const std::array<Vec2, 4> rotated = {quad[s], quad[(s + 1) % 4], quad[(s + 2) % 4],
                                             quad[(s + 3) % 4]};
        const GridSample gs = s == 0 ? g : SampleGrid(image, rotated);
        bool same = true;
        for (int k = 0; k < 16 && same; ++k) {
          const int r = k / 4 + 1, col = k % 4 + 1;
          same = (gs.cell[r * 6 + col] > thr) == (board.marker_bits[k] != 0);
        }
        if (same) {
          ++matches;
          match_rotation = s;
        }
      }
      if (matches != 1) continue;
      DetectedMarker m;
      for (int k = 0; k < 4; ++k) m.corners[k] = quad[(match_rotation + k) % 4];
      m.area_fraction = std::abs(polygon::SignedArea(m.corners)) /
                        (static_cast<double>(w) * image.height());
      found.push_back(m);
    } catch (const DegenerateConfigurationError&) {
      continue;
    }
  }
  if (found.empty()) return fail("no candidate matched the marker code");
  if (found.size() > 1) return fail("ambiguous: " + std::to_string(found.size()) + " candidates matched");
  return found.front();
}

}  // namespace ledsync

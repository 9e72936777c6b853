// Small planar polygon helpers shared by the image and IR decoders.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ledsync/board.hpp"

namespace ledsync::polygon {

inline double Cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Shoelace area; positive for clockwise order in y-down image coordinates.
template <typename Points>
double SignedArea(const Points& pts) {
  double a = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

// Andrew's monotone chain. Returns the hull counter-clockwise in y-up terms,
// without repeating the first point.
inline std::vector<Vec2> ConvexHull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && Cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && Cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Largest-area quadrilateral with vertices on the hull. Exhaustive for small
// hulls, otherwise seeded from the diameter and refined by coordinate ascent.
inline std::array<Vec2, 4> MaxAreaQuad(const std::vector<Vec2>& hull) {
  const std::size_t n = hull.size();
  auto area = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return std::abs(SignedArea(std::array<Vec2, 4>{hull[a], hull[b], hull[c], hull[d]}));
  };
  std::array<std::size_t, 4> best{0, 0, 0, 0};
  if (n < 4) {
    for (std::size_t i = 0; i < 4; ++i) best[i] = std::min(i, n - 1);
  } else if (n <= 40) {
    double best_area = -1.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        for (std::size_t c = b + 1; c < n; ++c)
          for (std::size_t d = c + 1; d < n; ++d) {
            const double s = area(a, b, c, d);
            if (s > best_area) {
              best_area = s;
              best = {a, b, c, d};
            }
          }
  } else {
    std::size_t ia = 0, ib = 0;
    double diameter = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = (hull[i] - hull[j]).squaredNorm();
        if (d > diameter) {
          diameter = d;
          ia = i;
          ib = j;
        }
      }
    auto farthest = [&](std::size_t from, std::size_t to) {
      std::size_t arg = from;
      double dist = -1.0;
      for (std::size_t i = (from + 1) % n; i != to; i = (i + 1) % n) {
        const double d = std::abs(Cross(hull[ia], hull[ib], hull[i]));
        if (d > dist) {
          dist = d;
          arg = i;
        }
      }
      return arg;
    };
    best = {ia, farthest(ia, ib), ib, farthest(ib, ia)};
    // Move one vertex at a time within its arc while the area grows.
    for (bool improved = true; improved;) {
      improved = false;
      for (int v = 0; v < 4; ++v) {
        const std::size_t lo = best[(v + 3) % 4];
        const std::size_t hi = best[(v + 1) % 4];
        double current = area(best[0], best[1], best[2], best[3]);
        for (std::size_t i = (lo + 1) % n; i != hi; i = (i + 1) % n) {
          auto trial = best;
          trial[v] = i;
          const double s = area(trial[0], trial[1], trial[2], trial[3]);
          if (s > current + 1e-9) {
            current = s;
            best = trial;
            improved = true;
          }
        }
      }
    }
  }
  return {hull[best[0]], hull[best[1]], hull[best[2]], hull[best[3]]};
}

// Reorders a convex quad so that its y-down shoelace area is positive.
inline std::array<Vec2, 4> Clockwise(std::array<Vec2, 4> q) {
  if (SignedArea(q) < 0) std::swap(q[1], q[3]);
  return q;
}

}  // namespace ledsync::polygon

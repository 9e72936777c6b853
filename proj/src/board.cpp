#include "ledsync/board.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ledsync/json_util.hpp"

namespace ledsync {
namespace {

constexpr double kRingRadiusMm = 110.0;
constexpr double kCounterRowY = -115.0;
constexpr double kCounterHalfSpan = 93.75;
constexpr double kCornerOffset = 115.0;
constexpr double kMarkerSideMm = 120.0;

// Orientation-unique code: every rotation differs from the original in at
// least 8 of the 16 modules.
constexpr std::array<std::uint8_t, 16> kMarkerBits = {
    1, 0, 1, 1,  //
    0, 1, 0, 0,  //
    1, 1, 0, 1,  //
    0, 0, 1, 0};

double Cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::array<std::uint8_t, 16> RotateBits(const std::array<std::uint8_t, 16>& bits) {
  std::array<std::uint8_t, 16> out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out[c * 4 + (3 - r)] = bits[r * 4 + c];
  }
  return out;
}

}  // namespace

double BoardGeometry::LedPitch() const {
  if (ring.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ring.size(); ++k) {
    sum += (ring[(k + 1) % ring.size()] - ring[k]).norm();
  }
  return sum / static_cast<double>(ring.size());
}

double BoardGeometry::MarkerSide() const {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    sum += (marker_corners[(i + 1) % 4] - marker_corners[i]).norm();
  }
  return sum / 4.0;
}

Vec2 BoardGeometry::MarkerCenter() const {
  Vec2 c = Vec2::Zero();
  for (const auto& p : marker_corners) c += p;
  return c / 4.0;
}

void BoardGeometry::Validate() const {
  if (ring.size() != static_cast<std::size_t>(kRingSize)) {
    throw std::invalid_argument("ring must have 100 LEDs");
  }
  if (counter.size() != static_cast<std::size_t>(kCounterBits)) {
    throw std::invalid_argument("counter must have 16 LEDs");
  }
  if (!(board_size_mm > 0.0)) {
    throw std::invalid_argument("board_size_mm must be positive");
  }
  // Adjacent ring indices must be the closest pairs, which also rules out
  // duplicate positions.
  const double pitch = LedPitch();
  for (std::size_t k = 0; k < ring.size(); ++k) {
    const double next = (ring[(k + 1) % ring.size()] - ring[k]).norm();
    if (!(next > 0.0) || next > 1.5 * pitch) {
      throw std::invalid_argument("ring LED " + std::to_string(k) +
                                  " is not a spatial neighbour of its successor");
    }
    for (std::size_t m = 0; m < ring.size(); ++m) {
      const std::size_t gap = (m + ring.size() - k) % ring.size();
      if (gap <= 1 || gap >= ring.size() - 1) continue;
      if ((ring[m] - ring[k]).norm() < next * 0.999) {
        throw std::invalid_argument("ring LEDs are not ordered along the circle");
      }
    }
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      for (int c = b + 1; c < 4; ++c) {
        const double area = std::abs(Cross(corners[b] - corners[a], corners[c] - corners[a]));
        const double scale = (corners[b] - corners[a]).norm() * (corners[c] - corners[a]).norm();
        if (!(area > 1e-9 * scale)) {
          throw std::invalid_argument("corner LEDs must not be collinear");
        }
      }
    }
  }
  auto rotated = marker_bits;
  for (int r = 1; r < 4; ++r) {
    rotated = RotateBits(rotated);
    if (rotated == marker_bits) {
      throw std::invalid_argument("marker code is rotation-symmetric");
    }
  }
}

BoardGeometry DefaultBoardGeometry() {
  BoardGeometry board;
  board.ring.reserve(kRingSize);
  // Clockwise from 12 o'clock.
  for (int k = 0; k < kRingSize; ++k) {
    const double angle = std::numbers::pi / 2.0 - 2.0 * std::numbers::pi * k / kRingSize;
    board.ring.emplace_back(kRingRadiusMm * std::cos(angle), kRingRadiusMm * std::sin(angle));
  }
  // Leftmost LED is the most significant bit, the list is LSB first.
  const double step = 2.0 * kCounterHalfSpan / (kCounterBits - 1);
  for (int bit = 0; bit < kCounterBits; ++bit) {
    board.counter.emplace_back(kCounterHalfSpan - step * bit, kCounterRowY);
  }
  board.corners = {Vec2(-kCornerOffset, kCornerOffset), Vec2(kCornerOffset, kCornerOffset),
                   Vec2(kCornerOffset, -kCornerOffset), Vec2(-kCornerOffset, -kCornerOffset)};
  const double h = kMarkerSideMm / 2.0;
  board.marker_corners = {Vec2(-h, h), Vec2(h, h), Vec2(h, -h), Vec2(-h, -h)};
  board.marker_bits = kMarkerBits;
  board.board_size_mm = 250.0;
  board.orientation_led = Vec2(-95.0, 105.0);
  return board;
}

namespace {

Json PointsToJson(const auto& points) {
  Json arr = Json::array();
  for (const auto& p : points) arr.push_back({p.x(), p.y()});
  return arr;
}

}  // namespace

BoardGeometry LoadBoardGeometry(const std::filesystem::path& path) {
  using namespace json_util;
  const Json doc = ReadFile(path.string());
  BoardGeometry board;

  const Json& ring = Array(Field(doc, "ring", ""), "/ring", kRingSize);
  for (std::size_t i = 0; i < ring.size(); ++i) board.ring.push_back(Point2(ring[i], Join("/ring", i)));
  const Json& counter = Array(Field(doc, "counter", ""), "/counter", kCounterBits);
  for (std::size_t i = 0; i < counter.size(); ++i) {
    board.counter.push_back(Point2(counter[i], Join("/counter", i)));
  }
  const Json& corners = Array(Field(doc, "corners", ""), "/corners", 4);
  for (std::size_t i = 0; i < 4; ++i) board.corners[i] = Point2(corners[i], Join("/corners", i));
  const Json& marker = Array(Field(doc, "marker_corners", ""), "/marker_corners", 4);
  for (std::size_t i = 0; i < 4; ++i) {
    board.marker_corners[i] = Point2(marker[i], Join("/marker_corners", i));
  }
  const Json& bits = Array(Field(doc, "marker_bits", ""), "/marker_bits", 16);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto v = Integer(bits[i], Join("/marker_bits", i));
    if (v != 0 && v != 1) throw SchemaError(Join("/marker_bits", i), "expected 0 or 1");
    board.marker_bits[i] = static_cast<std::uint8_t>(v);
  }
  board.board_size_mm = Number(Field(doc, "board_size_mm", ""), "/board_size_mm");
  if (doc.contains("orientation_led")) {
    board.orientation_led = Point2(doc["orientation_led"], "/orientation_led");
  }
  try {
    board.Validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError("/", e.what());
  }
  return board;
}

void SaveBoardGeometry(const BoardGeometry& board, const std::filesystem::path& path) {
  Json doc;
  doc["ring"] = PointsToJson(board.ring);
  doc["counter"] = PointsToJson(board.counter);
  doc["corners"] = PointsToJson(board.corners);
  doc["marker_corners"] = PointsToJson(board.marker_corners);
  doc["marker_bits"] = Json::array();
  for (auto b : board.marker_bits) doc["marker_bits"].push_back(static_cast<int>(b));
  doc["board_size_mm"] = board.board_size_mm;
  if (board.orientation_led) {
    doc["orientation_led"] = {board.orientation_led->x(), board.orientation_led->y()};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace ledsync

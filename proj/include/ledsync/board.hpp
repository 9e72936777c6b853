// Board geometry shared by the renderer and the decoders.
//
// All coordinates are millimetres in the board plane, origin at the board
// centre, x to the right and y up when the board is viewed from the front.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ledsync/clock.hpp"

namespace ledsync {

using Vec2 = Eigen::Vector2d;

struct BoardGeometry {
  // Ring LED k is lit during millisecond k of every revolution.
  std::vector<Vec2> ring;
  // Counter LED k carries bit k (index 0 = least significant bit).
  std::vector<Vec2> counter;
  std::array<Vec2, 4> corners;
  // Outer corners of the marker's dark border, in the order top-left,
  // top-right, bottom-right, bottom-left (viewed from the front).
  std::array<Vec2, 4> marker_corners;
  // Interior 4x4 code, row-major, row 0 at the top. 1 = white module.
  std::array<std::uint8_t, 16> marker_bits{};
  double board_size_mm = 250.0;
  // IR-only LED next to corner 0 that breaks the square symmetry of the
  // corner LEDs for IR images and 3D trackers.
  std::optional<Vec2> orientation_led;

  // Mean spacing of adjacent ring LEDs.
  double LedPitch() const;
  // Radius of the LED disk used both for rendering and for sampling.
  double LedRadius() const { return 0.35 * LedPitch(); }
  double MarkerSide() const;
  double MarkerModule() const { return MarkerSide() / 6.0; }
  // Width of the white margin around the marker's dark border.
  double MarkerQuietZone() const { return 0.5 * MarkerModule(); }
  Vec2 MarkerCenter() const;

  // Throws std::invalid_argument with a description of the first violation.
  void Validate() const;
};

BoardGeometry DefaultBoardGeometry();

BoardGeometry LoadBoardGeometry(const std::filesystem::path& path);
void SaveBoardGeometry(const BoardGeometry& board,
                       const std::filesystem::path& path);

}  // namespace ledsync

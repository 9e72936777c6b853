// Image decoder: marker detection, two-stage rectification and LED reading.

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ledsync/board.hpp"
#include "ledsync/clock.hpp"
#include "ledsync/homography.hpp"
#include "ledsync/image.hpp"
#include "ledsync/json_util.hpp"

namespace ledsync {

enum class Rejection {
  kNoMarker,
  kMarkerTooSmall,
  kCornerDeviation,
  kNoSector,
  kMultipleSectors,
  kCounterBoundary,
  kThresholdAmbiguous,
};

std::string_view RejectionName(Rejection r);
std::optional<Rejection> ParseRejection(std::string_view name);

// Raised by the individual pipeline stages; decode functions turn it into a
// rejected DecodedFrame.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(Rejection reason, int step, const std::string& detail)
      : std::runtime_error(std::string(RejectionName(reason)) + ": " + detail),
        reason_(reason), step_(step) {}

  Rejection reason() const { return reason_; }
  int step() const { return step_; }

 private:
  Rejection reason_;
  int step_;
};

struct DecoderConfig {
  double corner_tol_mm = 10.0;
  double k_abs = 12.0;
  double k_rel = 0.2;
  // Half-width of the ambiguity band, as a fraction of the lit margin.
  double ambiguity_band = 0.25;
  double min_marker_area_fraction = 0.002;
  // Adaptive threshold window is min(width, height) / divisor.
  int threshold_window_divisor = 16;
  double threshold_offset = 7.0;
  // No visible marker; bootstrap from the corner LEDs and the orientation LED.
  bool infrared = false;
};

struct DetectedMarker {
  // Image positions of the board's marker_corners, same order.
  std::array<Vec2, 4> corners;
  double area_fraction = 0.0;
};

// Returns nullopt if no candidate or more than one candidate matches. The
// reason is written to `diagnostic` when given.
std::optional<DetectedMarker> DetectMarker(const GrayImage& image, const BoardGeometry& board,
                                           const DecoderConfig& config = {},
                                           std::string* diagnostic = nullptr);

// Subpixel image positions of the 4 corner LEDs. Throws DecodeError
// (CornerDeviation, step 3) if one is missing or off by more than tol_mm.
std::array<Vec2, 4> LocateCornerLeds(const GrayImage& image, const Homography& coarse,
                                     const BoardGeometry& board, const DecoderConfig& config = {});

struct LedReading {
  std::int64_t counter = 0;
  std::array<bool, kRingSize> ring{};
  std::array<bool, kCounterBits> counter_bits{};
};

// Throws DecodeError (ThresholdAmbiguous, step 5) for unreliable LEDs.
LedReading DecodeLeds(const GrayImage& image, const Homography& refined, const BoardGeometry& board,
                      const DecoderConfig& config = {});

struct Sector {
  int first = 0;
  int last = 0;
};

// Single contiguous run of lit ring LEDs that does not wrap past index 99.
// Throws DecodeError (NoSector, MultipleSectors or CounterBoundary, step 5).
Sector FindSector(const std::array<bool, kRingSize>& ring);

struct AcceptedFrame {
  ExposureWindow window;
  std::int64_t counter = 0;
  int first_lit = 0;
  int last_lit = 0;
  Homography coarse;
  Homography refined;
};

struct RejectedFrame {
  Rejection reason = Rejection::kNoMarker;
  int step = 0;
  std::string detail;
};

struct DecodedFrame {
  int frame_index = 0;
  std::variant<AcceptedFrame, RejectedFrame> outcome;

  bool accepted() const { return std::holds_alternative<AcceptedFrame>(outcome); }
  const AcceptedFrame& result() const { return std::get<AcceptedFrame>(outcome); }
  const RejectedFrame& rejection() const { return std::get<RejectedFrame>(outcome); }
};

DecodedFrame DecodeFrame(const GrayImage& image, const BoardGeometry& board,
                         const DecoderConfig& config = {}, int frame_index = 0);

// Decodes every frame_NNNNNN.pgm in `dir`, in parallel, ordered by index.
std::vector<DecodedFrame> DecodeDirectory(const std::filesystem::path& dir,
                                          const BoardGeometry& board,
                                          const DecoderConfig& config = {});

// {"frame": i, "window": [s, e]} or {"frame": i, "reject": name, "step": n}
Json DecodedFrameToJson(const DecodedFrame& frame);

// Parsed form of a decoded line; only the fields present in the JSON form.
struct DecodedRecord {
  int frame_index = 0;
  std::optional<ExposureWindow> window;
  std::optional<Rejection> reason;
  int step = 0;
};
DecodedRecord DecodedRecordFromJson(const Json& j, const std::string& path);
std::vector<DecodedRecord> ReadDecodedFrames(const std::string& file);

}  // namespace ledsync

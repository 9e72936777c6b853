// Clock encoding of the LED board and the local <-> global time model.
//
// The ring has 100 LEDs, one lit at a time, advancing every millisecond. A
// 16-bit binary counter counts completed 100 ms revolutions, so the board
// encodes 65536 * 100 ms (about 109 minutes) before wrapping.

#pragma once

#include <cstdint>
#include <stdexcept>

namespace ledsync {

inline constexpr int kRingSize = 100;
inline constexpr int kCounterBits = 16;
inline constexpr std::int64_t kCounterModulus = std::int64_t{1} << kCounterBits;
inline constexpr std::int64_t kRevolutionMs = kRingSize;
inline constexpr std::int64_t kClockPeriodMs = kCounterModulus * kRevolutionMs;

// Instantaneous LED state at one global millisecond.
struct ClockState {
  std::uint16_t counter = 0;
  int ring_index = 0;

  friend bool operator==(const ClockState&, const ClockState&) = default;
};

// Decoded exposure window on the global timeline. Both endpoints are
// inclusive millisecond indices: end_ms is the last lit ring LED.
struct ExposureWindow {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  std::int64_t ArcLength() const { return end_ms - start_ms + 1; }

  friend bool operator==(const ExposureWindow&,
                         const ExposureWindow&) = default;
};

// Thrown when a lit arc wraps past ring index 99, i.e. the counter changed
// during the exposure.
class CounterBoundaryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

ClockState EncodeClockState(std::int64_t global_ms);

ExposureWindow DecodeWindow(std::int64_t counter, int first_lit, int last_lit);

// Linear clock model: global = alpha * local + beta (milliseconds).
class TimeModel {
 public:
  // Bounds for a model accepted from fitting. Real oscillator drift is a few
  // ppm, anything outside this range indicates a broken sample set.
  static constexpr double kMinFittedAlpha = 0.9;
  static constexpr double kMaxFittedAlpha = 1.1;

  TimeModel() = default;
  TimeModel(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double ToGlobal(double local_ms) const { return alpha_ * local_ms + beta_; }
  double ToLocal(double global_ms) const {
    return (global_ms - beta_) / alpha_;
  }

  bool WithinFittedBounds() const {
    return alpha_ >= kMinFittedAlpha && alpha_ <= kMaxFittedAlpha;
  }

 private:
  double alpha_ = 1.0;
  double beta_ = 0.0;
};

double LocalToGlobal(const TimeModel& model, double local_ms);

// One (local timestamp, decoded global start) measurement.
struct Sample {
  double local_ts = 0.0;
  double global_start = 0.0;
};

}  // namespace ledsync

#include "ledsync/clock.hpp"

#include <cmath>
#include <string>

namespace ledsync {

ClockState EncodeClockState(std::int64_t global_ms) {
  if (global_ms < 0) {
    throw std::invalid_argument("clock time must be non-negative, got " +
                                std::to_string(global_ms));
  }
  ClockState state;
  state.ring_index = static_cast<int>(global_ms % kRingSize);
  state.counter =
      static_cast<std::uint16_t>((global_ms / kRevolutionMs) % kCounterModulus);
  return state;
}

ExposureWindow DecodeWindow(std::int64_t counter, int first_lit,
                            int last_lit) {
  if (counter < 0 || counter >= kCounterModulus) {
    throw std::invalid_argument("counter out of range: " +
                                std::to_string(counter));
  }
  if (first_lit < 0 || first_lit >= kRingSize || last_lit < 0 ||
      last_lit >= kRingSize) {
    throw std::invalid_argument("ring index out of range");
  }
  if (last_lit < first_lit) {
    throw CounterBoundaryError("lit arc " + std::to_string(first_lit) + ".." +
                               std::to_string(last_lit) +
                               " wraps the counter boundary");
  }
  return {counter * kRevolutionMs + first_lit,
          counter * kRevolutionMs + last_lit};
}

TimeModel::TimeModel(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("time model requires finite alpha > 0");
  }
}

double LocalToGlobal(const TimeModel& model, double local_ms) {
  return model.ToGlobal(local_ms);
}

}  // namespace ledsync

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "ledsync/clock.hpp"

namespace ledsync {
namespace {

TEST(EncodeClockState, ArcStart1240) {
  const ClockState s = EncodeClockState(1240);
  EXPECT_EQ(s.counter, 12);
  EXPECT_EQ(s.ring_index, 40);
}

TEST(EncodeClockState, Zero) {
  EXPECT_EQ(EncodeClockState(0), (ClockState{0, 0}));
}

TEST(EncodeClockState, WrapsAfterFullCounterPeriod) {
  const std::int64_t t = 65536LL * 100;
  EXPECT_EQ(t, 6553600);
  EXPECT_EQ(EncodeClockState(t), (ClockState{0, 0}));
  EXPECT_EQ(EncodeClockState(t - 1), (ClockState{65535, 99}));
  EXPECT_EQ(EncodeClockState(t + 1234), (ClockState{12, 34}));
}

TEST(EncodeClockState, RejectsNegativeTime) {
  EXPECT_THROW(EncodeClockState(-1), std::invalid_argument);
}

TEST(DecodeWindow, EighteenLitLeds) {
  EXPECT_EQ(DecodeWindow(12, 40, 57), (ExposureWindow{1240, 1257}));
  EXPECT_EQ(DecodeWindow(12, 40, 57).ArcLength(), 18);
}

TEST(DecodeWindow, SingleLed) { EXPECT_EQ(DecodeWindow(0, 0, 0), (ExposureWindow{0, 0})); }

TEST(DecodeWindow, WrapIsCounterBoundary) {
  EXPECT_THROW(DecodeWindow(5, 98, 2), CounterBoundaryError);
}

TEST(DecodeWindow, RejectsOutOfRangeInputs) {
  EXPECT_THROW(DecodeWindow(-1, 0, 0), std::invalid_argument);
  EXPECT_THROW(DecodeWindow(65536, 0, 0), std::invalid_argument);
  EXPECT_THROW(DecodeWindow(0, 0, 100), std::invalid_argument);
  EXPECT_THROW(DecodeWindow(0, -1, 3), std::invalid_argument);
}

TEST(DecodeWindow, RoundTripOverFullRange) {
  for (std::int64_t t = 0; t < kClockPeriodMs; t += 997) {
    const ClockState s = EncodeClockState(t);
    EXPECT_EQ(DecodeWindow(s.counter, s.ring_index, s.ring_index), (ExposureWindow{t, t}));
  }
  const ClockState last = EncodeClockState(kClockPeriodMs - 1);
  EXPECT_EQ(DecodeWindow(last.counter, last.ring_index, last.ring_index),
            (ExposureWindow{kClockPeriodMs - 1, kClockPeriodMs - 1}));
}

TEST(LocalToGlobal, Examples) {
  EXPECT_EQ(LocalToGlobal(TimeModel(1.0, 0.0), 500.0), 500.0);
  EXPECT_EQ(LocalToGlobal(TimeModel(1.0, 5000.0), 1000.0), 6000.0);
  EXPECT_NEAR(LocalToGlobal(TimeModel(1.0001, 5000.0), 600000.0), 605060.0, 1e-9);
}

TEST(TimeModel, RejectsNonPositiveDrift) {
  EXPECT_THROW(TimeModel(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(TimeModel(-1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(TimeModel(std::numeric_limits<double>::quiet_NaN(), 0.0), std::invalid_argument);
}

TEST(TimeModel, FittedBounds) {
  EXPECT_TRUE(TimeModel(1.00001, 3.0).WithinFittedBounds());
  EXPECT_TRUE(TimeModel(0.9, 3.0).WithinFittedBounds());
  EXPECT_FALSE(TimeModel(1.2, 3.0).WithinFittedBounds());
}

TEST(TimeModel, MonotoneAndInvertible) {
  const TimeModel m(0.99993, -1234.5);
  double prev = -std::numeric_limits<double>::infinity();
  for (double t = 0; t < 1e7; t += 12345.678) {
    const double g = m.ToGlobal(t);
    EXPECT_GT(g, prev);
    prev = g;
    EXPECT_NEAR(m.ToLocal(g), t, 1e-9 * std::max(1.0, t));
  }
}

}  // namespace
}  // namespace ledsync

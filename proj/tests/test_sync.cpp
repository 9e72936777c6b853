#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ledsync/ftk.hpp"
#include "ledsync/random.hpp"
#include "ledsync/render.hpp"
#include "ledsync/sync.hpp"
#include "test_util.hpp"

namespace ledsync {
namespace {

TEST(FitTimeModel, TwoSampleClosedForm) {
  const std::vector<Sample> s = {{0, 5000}, {600000, 605060}};
  const FitResult f = FitTimeModel(s);
  EXPECT_NEAR(f.model.alpha(), 1.0001, 1e-12);
  EXPECT_NEAR(f.model.beta(), 5000.0, 1e-9);
  EXPECT_EQ(f.InlierIndices(), (std::vector<std::size_t>{0, 1}));
}

TEST(FitTimeModel, SingleSample) {
  const std::vector<Sample> s = {{100, 1100}};
  const FitResult f = FitTimeModel(s);
  EXPECT_EQ(f.model.alpha(), 1.0);
  EXPECT_EQ(f.model.beta(), 1000.0);
}

TEST(FitTimeModel, EmptyIsError) {
  EXPECT_THROW(FitTimeModel(std::vector<Sample>{}), std::invalid_argument);
}

TEST(FitTimeModel, NoTwoSamplesAgree) {
  // Every pair implies a drift far outside the plausible range.
  const std::vector<Sample> s = {{0, 0}, {1000, 5000}, {2000, 0}};
  EXPECT_THROW(FitTimeModel(s), IrreconcilableSamplesError);
}

// Inliers on the line (optionally quantized to whole ms like decoded starts),
// outliers displaced by +-outlier_offset. Outliers are appended last.
std::vector<Sample> Synthetic(double alpha, double beta, int inliers, int outliers, Rng& rng,
                              bool quantize = true, double outlier_offset = 500.0) {
  std::vector<Sample> s;
  for (int i = 0; i < inliers; ++i) {
    const double local = i * 15000.0 + rng.Uniform(0, 1000);
    const double global = alpha * local + beta;
    s.push_back({local, quantize ? std::floor(global) : global});
  }
  for (int i = 0; i < outliers; ++i) {
    const double local = i * 40000.0 + rng.Uniform(0, 1000);
    s.push_back({local, alpha * local + beta + (i % 2 ? outlier_offset : -outlier_offset)});
  }
  return s;
}

TEST(FitTimeModel, RansacRejectsOutliers) {
  Rng rng(1);
  const std::vector<Sample> s = Synthetic(1.00005, 2500.0, 20, 6, rng, false);
  const FitResult f = FitTimeModel(s, 7);
  EXPECT_LE(std::abs(f.model.alpha() - 1.00005), 1e-6);
  EXPECT_LE(std::abs(f.model.beta() - 2500.0), 0.5);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(f.inliers[i], i < 20) << i;
}

TEST(FitTimeModel, RansacWithQuantizedStarts) {
  // Whole-ms starts sit 0.5 ms below the line on average.
  Rng rng(5);
  const std::vector<Sample> s = Synthetic(1.00005, 2500.0, 20, 6, rng);
  const FitResult f = FitTimeModel(s, 7);
  EXPECT_LE(std::abs(f.model.alpha() - 1.00005), 1e-6);
  EXPECT_LE(std::abs(f.model.beta() - 2499.5), 0.5);
  EXPECT_EQ(f.InlierIndices().size(), 20u);
}

TEST(FitTimeModel, DeterministicForSeed) {
  Rng rng(2);
  const auto s = Synthetic(0.99998, -300.0, 15, 5, rng);
  const FitResult a = FitTimeModel(s, 99);
  const FitResult b = FitTimeModel(s, 99);
  EXPECT_EQ(a.model.alpha(), b.model.alpha());
  EXPECT_EQ(a.model.beta(), b.model.beta());
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(FitTimeModel, ExactOnNoiseFreeSamples) {
  for (int n : {2, 3, 10, 50}) {
    std::vector<Sample> s;
    for (int i = 0; i < n; ++i) {
      const double local = 1000.0 * i * i + 17.0;
      s.push_back({local, 1.000037 * local - 812.5});
    }
    const FitResult f = FitTimeModel(s);
    for (const auto& x : s) EXPECT_NEAR(f.model.ToGlobal(x.local_ts), x.global_start, 1e-9) << n;
    EXPECT_LT(f.rmse_residual_ms, 1e-9);
  }
}

TEST(FitTimeModel, ShiftingLocalTimeMovesBetaOnly) {
  std::vector<Sample> s;
  for (int i = 0; i < 12; ++i) s.push_back({3000.0 * i, 1.00002 * 3000.0 * i + 44.0});
  const FitResult base = FitTimeModel(s);
  for (double c : {-5000.0, 250.0, 1e6}) {
    auto shifted = s;
    for (auto& x : shifted) x.local_ts += c;
    const FitResult f = FitTimeModel(shifted);
    EXPECT_NEAR(f.model.alpha(), base.model.alpha(), 1e-12);
    EXPECT_NEAR(f.model.beta(), base.model.beta() - base.model.alpha() * c, 1e-6);
  }
}

TEST(FitTimeModel, BreakdownAtFortyPercentOutliers) {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const double alpha = 1.0 + rng.Uniform(-1e-4, 1e-4);
    const double beta = rng.Uniform(-1e5, 1e5);
    std::vector<Sample> s;
    std::vector<bool> truth;
    for (int i = 0; i < 10; ++i) {
      const double local = rng.Uniform(0, 6e5);
      s.push_back({local, alpha * local + beta + rng.Uniform(-0.5, 0.5)});
      truth.push_back(true);
    }
    for (int i = 0; i < 6; ++i) {
      const double local = rng.Uniform(0, 6e5);
      const double r = rng.Uniform(20.0, 5000.0) * (rng.Uniform() < 0.5 ? -1 : 1);
      s.push_back({local, alpha * local + beta + r});
      truth.push_back(false);
    }
    const FitResult f = FitTimeModel(s, seed);
    if (f.inliers != truth || std::abs(f.model.alpha() - alpha) > 1e-5) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(Retime, IdentityModel) {
  const StreamRecord s = StreamRecord::FromNominalRate("a", 30.0, 5);
  const auto g = Retime(TimeModel(), s);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(g[i], s.local_ts[i]);
}

TEST(Retime, TwoSampleModel) {
  const FitResult f = FitTimeModel(std::vector<Sample>{{0, 5000}, {600000, 605060}});
  StreamRecord s;
  s.local_ts = {0.0, 300000.0};
  EXPECT_NEAR(Retime(f.model, s)[1], 305030.0, 1e-6);
}

TEST(Retime, MonotoneOutput) {
  const StreamRecord s = StreamRecord::FromNominalRate("a", 59.94, 1000);
  const auto g = Retime(TimeModel(0.9999, 12.0), s);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

TEST(PairwiseRmse, Examples) {
  const std::vector<double> a = {0, 33.3, 66.7, 100};
  std::vector<std::pair<std::size_t, std::size_t>> pairs = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_EQ(PairwiseRmse(a, a, pairs), 0.0);
  std::vector<double> b = a;
  for (auto& x : b) x += 1.0;
  EXPECT_NEAR(PairwiseRmse(a, b, pairs), 1.0, 1e-12);
  EXPECT_THROW(PairwiseRmse(a, b, {}), std::invalid_argument);
}

std::vector<DecodedRecord> ToRecords(const std::vector<FtkDecodedFrame>& frames) {
  std::vector<DecodedRecord> out;
  for (const auto& f : frames) {
    DecodedRecord r;
    r.frame_index = f.decoded.frame_index;
    if (f.decoded.accepted()) r.window = f.decoded.result().window;
    out.push_back(r);
  }
  return out;
}

TEST(PairwiseRmse, SharedShutterEmulation) {
  // Two trackers triggered together: identical true windows, independent
  // poses and noise, decoded and fitted separately.
  const BoardGeometry board = DefaultBoardGeometry();
  CaptureConfig c;
  c.fps = 31.0;
  c.exposure_ms = 10.0;
  c.alpha_true = 1.00003;
  c.beta_true = 123456.7;
  const int n = 600;
  CaptureConfig c2 = c;
  c2.seed = 777;
  const auto a = GenerateFiducialSequence(c, board, 0.2, [](int i) {
    return testing::TiltedPose(0.3, 0.01 * i, 1000.0);
  }, n);
  const auto b = GenerateFiducialSequence(c2, board, 0.2, [](int i) {
    return testing::TiltedPose(0.5, -0.02 * i, 1400.0, Vec3(50, 0, 0));
  }, n);
  const auto fa = FitTimeModel(SamplesFromDecoded(ToRecords(DecodeFiducialFrames(a.frames, board)), c.fps), 1);
  const auto fb = FitTimeModel(SamplesFromDecoded(ToRecords(DecodeFiducialFrames(b.frames, board)), c.fps), 2);
  const StreamRecord s = StreamRecord::FromNominalRate("x", c.fps, n);
  const auto ta = Retime(fa.model, s);
  const auto tb = Retime(fb.model, s);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (int i = 0; i < n; ++i) pairs.emplace_back(i, i);
  EXPECT_LE(PairwiseRmse(ta, tb, pairs), 1.0);
}

TEST(SamplesFromDecoded, UsesAcceptedStarts) {
  std::vector<DecodedRecord> r(3);
  r[0].frame_index = 0;
  r[0].window = ExposureWindow{100, 110};
  r[1].frame_index = 1;
  r[1].reason = Rejection::kNoMarker;
  r[2].frame_index = 3;
  r[2].window = ExposureWindow{200, 210};
  const auto s = SamplesFromDecoded(r, 30.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[1].local_ts, 100.0);
  EXPECT_DOUBLE_EQ(s[1].global_start, 200.0);
}

Track2D LinearTrack(const std::string& id, int frames, const Vec2& p0, const Vec2& v) {
  Track2D t{id, {}};
  for (int i = 0; i < frames; ++i) t.observations.push_back({i, 7, p0 + i * v});
  return t;
}

TEST(AlignedStream, ExactFrameTimestamp) {
  const AlignedStream s("a", {0.0, 10.0, 20.0}, LinearTrack("a", 3, Vec2(0, 0), Vec2(1, 2)));
  for (AlignMode m : {AlignMode::kNearest, AlignMode::kInterpolate}) {
    const auto p = s.At(10.0, 7, m);
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(*p, Vec2(1, 2));
  }
}

TEST(AlignedStream, MidpointQuery) {
  const AlignedStream s("a", {0.0, 10.0, 20.0}, LinearTrack("a", 3, Vec2(0, 0), Vec2(4, 0)));
  EXPECT_EQ(*s.At(15.0, 7, AlignMode::kInterpolate), Vec2(6, 0));
  const Vec2 n = *s.At(15.0, 7, AlignMode::kNearest);
  EXPECT_TRUE(n == Vec2(4, 0) || n == Vec2(8, 0));
  EXPECT_EQ(*s.At(14.0, 7, AlignMode::kNearest), Vec2(4, 0));
  EXPECT_EQ(*s.At(16.0, 7, AlignMode::kNearest), Vec2(8, 0));
}

TEST(AlignedStream, GapsAndSpan) {
  Track2D t = LinearTrack("a", 3, Vec2(0, 0), Vec2(4, 0));
  t.observations.erase(t.observations.begin() + 1);  // point missing in frame 1
  const AlignedStream s("a", {0.0, 10.0, 20.0}, t);
  EXPECT_FALSE(s.At(5.0, 7, AlignMode::kInterpolate).has_value());
  EXPECT_FALSE(s.At(-1.0, 7, AlignMode::kNearest).has_value());
  EXPECT_FALSE(s.At(20.5, 7, AlignMode::kNearest).has_value());
  EXPECT_FALSE(s.At(10.0, 8, AlignMode::kNearest).has_value());
  EXPECT_EQ(s.PointIds(), std::vector<int>{7});
}

TEST(AlignedStream, RejectsBadInput) {
  EXPECT_THROW(AlignedStream("a", {0.0, 0.0}, Track2D{}), std::invalid_argument);
  Track2D dup = LinearTrack("a", 2, Vec2(0, 0), Vec2(1, 0));
  dup.observations.push_back(dup.observations.front());
  EXPECT_THROW(AlignedStream("a", {0.0, 1.0}, dup), std::invalid_argument);
  EXPECT_THROW(AlignedStream("a", {0.0, 1.0}, LinearTrack("a", 3, Vec2(0, 0), Vec2(1, 0))),
               std::invalid_argument);
}

TEST(AlignTracks, CircularMotionInterpolationWins) {
  // A point on a circle seen by two 30 fps streams half a frame apart.
  auto position = [](double t_ms) {
    const double a = 2.0 * std::numbers::pi * t_ms / 1000.0;
    return Vec2(500.0 + 100.0 * std::cos(a), 400.0 + 100.0 * std::sin(a));
  };
  std::vector<AlignedStream> streams;
  for (double offset : {0.0, 16.7}) {
    std::vector<double> ts;
    Track2D t{offset == 0.0 ? "a" : "b", {}};
    for (int i = 0; i < 90; ++i) {
      ts.push_back(offset + i * 1000.0 / 30.0);
      t.observations.push_back({i, 0, position(ts.back())});
    }
    streams.emplace_back(t.stream_id, ts, t);
  }
  Rng rng(4);
  std::vector<double> queries;
  for (int k = 0; k < 200; ++k) queries.push_back(rng.Uniform(20.0, 2900.0));
  const auto nearest = AlignTracks(streams, queries, AlignMode::kNearest);
  const auto interp = AlignTracks(streams, queries, AlignMode::kInterpolate);
  ASSERT_EQ(nearest.size(), 400u);
  ASSERT_EQ(interp.size(), 400u);
  double sum_n = 0.0, sum_i = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const double dn = (nearest[2 * q].pixel - nearest[2 * q + 1].pixel).norm();
    const double di = (interp[2 * q].pixel - interp[2 * q + 1].pixel).norm();
    EXPECT_LT(di, dn) << queries[q];
    sum_n += dn;
    sum_i += di;
  }
  EXPECT_LT(sum_i, sum_n);
}

TEST(StreamJson, RoundTripAndFitJson) {
  StreamRecord s = StreamRecord::FromNominalRate("cam0", 29.97, 4);
  s.samples = {{0.0, 5000.0}, {100.1, 5100.0}};
  const StreamRecord t = StreamFromJson(StreamToJson(s));
  EXPECT_EQ(t.stream_id, "cam0");
  EXPECT_EQ(t.fps_nominal, 29.97);
  EXPECT_EQ(t.local_ts.size(), 4u);
  ASSERT_EQ(t.samples.size(), 2u);
  EXPECT_EQ(t.samples[1].global_start, 5100.0);

  const FitResult f = FitTimeModel(s.samples);
  const Json j = FitToJson("cam0", f);
  EXPECT_EQ(j.at("inliers"), Json::array({0, 1}));
  const TimeModel m = ModelFromJson(j);
  EXPECT_EQ(m.alpha(), f.model.alpha());
  EXPECT_EQ(m.beta(), f.model.beta());
  EXPECT_THROW(StreamFromJson(Json::parse(R"({"stream_id": "x"})")), SchemaError);
}

TEST(AlignedCsv, Format) {
  std::vector<AlignedPoint> rows = {{12.5, "cam0", 3, Vec2(1.5, 2.25), AlignMode::kInterpolate}};
  std::ostringstream out;
  WriteAlignedCsv(rows, out);
  EXPECT_EQ(out.str(), "query_ms,stream_id,point_id,x,y,mode\n12.5,cam0,3,1.5,2.25,interpolate\n");
}

}  // namespace
}  // namespace ledsync

#include <cmath>

#include <gtest/gtest.h>

#include "ledsync/decoder.hpp"
#include "ledsync/ftk.hpp"
#include "ledsync/random.hpp"
#include "ledsync/render.hpp"
#include "test_util.hpp"

namespace ledsync {
namespace {

using testing::FrontalPose;
using testing::TiltedPose;

const TimeInterval kReference{1240.0, 1257.5};

FiducialFrame Frame(const RigidPose& pose, const TimeInterval& w, double noise = 0.0, int idx = 0) {
  return GenerateFiducialFrame(DefaultBoardGeometry(), pose, w, CaptureConfig{}, noise, 0.0, idx);
}

double PoseError(const RigidPose& a, const RigidPose& b) {
  return (a.rotation() - b.rotation()).norm() + (a.translation() - b.translation()).norm();
}

TEST(MarkerTemplate, FivePointsOnPlane) {
  const auto t = MarkerTemplate(DefaultBoardGeometry());
  ASSERT_EQ(t.size(), 5u);
  for (const auto& p : t) EXPECT_EQ(p.z(), 0.0);
}

TEST(FitRigid, RecoversTransform) {
  const RigidPose truth(AxisAngle(Vec3(1, -2, 0.5).normalized(), 1.2), Vec3(10, 20, 900));
  std::vector<Vec3> src = {Vec3(0, 0, 0), Vec3(100, 0, 0), Vec3(0, 50, 0), Vec3(30, 30, 20)};
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(truth.Apply(p));
  const RigidPose fit = FitRigid(src, dst);
  EXPECT_LT(PoseError(fit, truth), 1e-9);
  EXPECT_LT(RigidRms(fit, src, dst), 1e-9);
}

TEST(DetectMarker3d, NoiseFreePoseIsExact) {
  const auto tmpl = MarkerTemplate(DefaultBoardGeometry());
  for (int i = 0; i < 10; ++i) {
    const RigidPose truth = TiltedPose(0.1 * i, 0.6 * i, 1000.0 + 50 * i, Vec3(5 * i, -3 * i, 0));
    const auto pose = DetectMarker3d(Frame(truth, kReference).points, tmpl, 1.0);
    ASSERT_TRUE(pose.has_value()) << i;
    EXPECT_LT(PoseError(*pose, truth), 1e-9) << i;
  }
}

TEST(DetectMarker3d, ThreePointsIsAbsent) {
  const auto tmpl = MarkerTemplate(DefaultBoardGeometry());
  const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  std::string why;
  EXPECT_FALSE(DetectMarker3d(pts, tmpl, 1.0, &why).has_value());
  EXPECT_FALSE(why.empty());
}

TEST(DetectMarker3d, SubMillimetreNoise) {
  const auto tmpl = MarkerTemplate(DefaultBoardGeometry());
  for (int i = 0; i < 50; ++i) {
    const RigidPose truth = TiltedPose(0.5, 0.13 * i, 1200.0);
    const auto pose = DetectMarker3d(Frame(truth, kReference, 0.2, i).points, tmpl, 1.0);
    ASSERT_TRUE(pose.has_value()) << i;
    EXPECT_LT((pose->translation() - truth.translation()).norm(), 0.5) << i;
  }
}

TEST(DecodeFiducials, ReferenceWindow) {
  const BoardGeometry board = DefaultBoardGeometry();
  const FiducialFrame f = Frame(FrontalPose(), kReference);
  const LedReading r = DecodeFiducials(f, FrontalPose(), board, 3.0, 2.0);
  EXPECT_EQ(r.counter, 12);
  for (int k = 0; k < kRingSize; ++k) EXPECT_EQ(r.ring[k], k >= 40 && k <= 57) << k;
}

TEST(DecodeFiducials, OffPlanePointIsIgnored) {
  const BoardGeometry board = DefaultBoardGeometry();
  const RigidPose pose = TiltedPose(0.3, 0.5, 1000.0);
  FiducialFrame f = Frame(pose, kReference);
  const LedReading before = DecodeFiducials(f, pose, board, 3.0, 2.0);
  // Directly above ring LED 10, which is unlit.
  f.points.push_back(pose.Apply(Vec3(board.ring[10].x(), board.ring[10].y(), 50.0)));
  const LedReading after = DecodeFiducials(f, pose, board, 3.0, 2.0);
  EXPECT_EQ(before.ring, after.ring);
  EXPECT_EQ(before.counter, after.counter);
  EXPECT_FALSE(after.ring[10]);
}

TEST(DecodeFiducialFrame, NoLitRingLedsIsNoSector) {
  const BoardGeometry board = DefaultBoardGeometry();
  FiducialFrame f = Frame(FrontalPose(), kReference);
  // Keep only the template points.
  std::vector<Vec3> kept;
  for (const auto& p : MarkerTemplate(board)) kept.push_back(FrontalPose().Apply(p));
  f.points = kept;
  const FtkDecodedFrame d = DecodeFiducialFrame(f, board);
  ASSERT_FALSE(d.decoded.accepted());
  EXPECT_EQ(d.decoded.rejection().reason, Rejection::kNoSector);
  EXPECT_TRUE(d.fitted_pose.has_value());
}

TEST(DecodeFiducialFrame, MissingMarkerIsNoMarker) {
  FiducialFrame f;
  f.points = {Vec3(0, 0, 1000), Vec3(10, 0, 1000)};
  const FtkDecodedFrame d = DecodeFiducialFrame(f, DefaultBoardGeometry());
  ASSERT_FALSE(d.decoded.accepted());
  EXPECT_EQ(d.decoded.rejection().reason, Rejection::kNoMarker);
}

TEST(DecodeFiducialFrame, RecordsTrackerAndFittedPose) {
  const RigidPose truth = TiltedPose(0.2, 0.4, 1100.0);
  FiducialFrame f = Frame(truth, kReference);
  f.pose = truth;
  const FtkDecodedFrame d = DecodeFiducialFrame(f, DefaultBoardGeometry());
  ASSERT_TRUE(d.decoded.accepted());
  ASSERT_TRUE(d.tracker_pose.has_value());
  ASSERT_TRUE(d.fitted_pose.has_value());
  EXPECT_LT(PoseError(*d.fitted_pose, truth), 1e-9);
}

TEST(DecodeFiducialFrame, MatchesImageDecoder) {
  const BoardGeometry board = DefaultBoardGeometry();
  const CameraModel cam = testing::DefaultCamera();
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    const double start = std::floor(rng.Uniform(0, 5e5)) + rng.Uniform(0.05, 0.95);
    const TimeInterval w{start, start + 8.33};
    const RigidPose pose = TiltedPose(rng.Uniform(0, 0.6), rng.Uniform(0, 6.28), 950.0);
    const GrayImage img = RenderFrame(board, cam, BoardToImage(cam, pose), w, testing::NoiseFree());
    const DecodedFrame a = DecodeFrame(img, board);
    const FtkDecodedFrame b = DecodeFiducialFrame(Frame(pose, w), board);
    ASSERT_EQ(a.accepted(), b.decoded.accepted()) << i;
    if (!a.accepted()) {
      EXPECT_EQ(a.rejection().reason, b.decoded.rejection().reason);
      continue;
    }
    EXPECT_EQ(a.result().counter, b.decoded.result().counter);
    EXPECT_EQ(a.result().first_lit, b.decoded.result().first_lit);
    EXPECT_EQ(a.result().last_lit, b.decoded.result().last_lit);
    EXPECT_EQ(a.result().window, b.decoded.result().window);
  }
}

TEST(FiducialJson, RoundTrip) {
  FiducialFrame f = Frame(TiltedPose(0.2, 0.3, 900.0), kReference);
  f.local_ts = 33.5;
  f.pose = TiltedPose(0.2, 0.3, 900.0);
  const FiducialFrame g = FiducialFrameFromJson(FiducialFrameToJson(f), "line 1");
  EXPECT_EQ(g.local_ts, 33.5);
  ASSERT_EQ(g.points.size(), f.points.size());
  for (std::size_t k = 0; k < f.points.size(); ++k) EXPECT_EQ(g.points[k], f.points[k]);
  ASSERT_TRUE(g.pose.has_value());
  EXPECT_LT(PoseError(*g.pose, *f.pose), 1e-12);
  EXPECT_THROW(FiducialFrameFromJson(Json::parse(R"({"points": []})"), "x"), SchemaError);
  EXPECT_THROW(FiducialFrameFromJson(Json::parse(R"({"local_ts": 0, "points": [[1, 2]]})"), "x"),
               SchemaError);
}

}  // namespace
}  // namespace ledsync

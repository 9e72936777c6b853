#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ledsync/eval_io.hpp"
#include "ledsync/image.hpp"
#include "ledsync/json_util.hpp"
#include "ledsync/sync.hpp"

namespace ledsync {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ledsync_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  fs::path dir_;
};

using Io = TempDir;

TEST_F(Io, PgmRoundTrip) {
  GrayImage img(7, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 7; ++x) img.at(x, y) = static_cast<std::uint8_t>(x * 30 + y);
  WritePgm(img, dir_ / FrameFileName(12));
  EXPECT_EQ(FrameFileName(12), "frame_000012.pgm");
  EXPECT_EQ(ReadPgm(dir_ / "frame_000012.pgm"), img);
  EXPECT_EQ(ListFrames(dir_).size(), 1u);
}

TEST_F(Io, PgmRejectsOtherFormats) {
  EXPECT_THROW(ReadPgm(Write("a.pgm", "P2\n2 2\n255\n0 0 0 0\n")), std::runtime_error);
  EXPECT_THROW(ReadPgm(Write("b.pgm", "P5\n2 2\n65535\n")), std::runtime_error);
  EXPECT_THROW(ReadPgm(Write("c.pgm", "P5\n4 4\n255\nab")), std::runtime_error);
  EXPECT_THROW(ReadPgm(dir_ / "missing.pgm"), std::runtime_error);
}

TEST(ImageSample, Bilinear) {
  GrayImage img(2, 2);
  img.at(0, 0) = 0;
  img.at(1, 0) = 100;
  img.at(0, 1) = 100;
  img.at(1, 1) = 200;
  EXPECT_DOUBLE_EQ(img.Sample(0.5, 0.5), 100.0);
  EXPECT_DOUBLE_EQ(img.Sample(0.25, 0.0), 25.0);
  EXPECT_DOUBLE_EQ(img.Sample(-3.0, 0.0), 0.0);
}

TEST(JsonUtil, PathsInErrors) {
  const Json j = Json::parse(R"({"a": [1, "x", 3]})");
  try {
    json_util::Number(json_util::Array(json_util::Field(j, "a", ""), "/a").at(1), "/a/1");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "/a/1");
  }
  EXPECT_THROW(json_util::Field(j, "b", ""), SchemaError);
  EXPECT_THROW(json_util::Array(j.at("a"), "/a", 2), SchemaError);
}

TEST(CameraJson, RoundTripAndValidation) {
  CameraModel c{800, 810, 320, 240, 640, 480};
  const CameraModel d = CameraFromJson(CameraToJson(c), "/cam");
  EXPECT_EQ(d.fx, 800);
  EXPECT_EQ(d.cy, 240);
  EXPECT_EQ(d.width, 640);
  Json bad = CameraToJson(c);
  bad["cx"] = 700;
  EXPECT_THROW(CameraFromJson(bad, "/cam"), SchemaError);
}

TEST_F(Io, ObservationsCsv) {
  const std::string f = Write("obs.csv", "view,frame,point,x,y\n0,0,1,10.5,20\n1,2,0,3,4\n");
  const auto grids = ReadObservationsCsv(f, 2, 3, 2);
  ASSERT_EQ(grids.size(), 2u);
  EXPECT_EQ(*grids[0][0][1], Vec2(10.5, 20));
  EXPECT_FALSE(grids[0][0][0].has_value());
  EXPECT_EQ(*grids[1][2][0], Vec2(3, 4));
  std::ostringstream out;
  WriteObservationsCsv(grids, out);
  EXPECT_EQ(out.str(), "view,frame,point,x,y\n0,0,1,10.5,20\n1,2,0,3,4\n");

  EXPECT_THROW(ReadObservationsCsv(Write("b.csv", "view,frame,point,x,y\n0,5,0,1,1\n"), 2, 3, 2), SchemaError);
  EXPECT_THROW(ReadObservationsCsv(Write("c.csv", "v,f,p,x,y\n"), 2, 3, 2), SchemaError);
  EXPECT_THROW(ReadObservationsCsv(Write("d.csv", "view,frame,point,x,y\n0,0,0,1,1\n0,0,0,2,2\n"), 1, 1, 1),
               SchemaError);
}

TEST_F(Io, StereoSceneJson) {
  StereoScene s;
  s.left_to_right = RigidPose(AxisAngle(Vec3(0, 1, 0), 0.1), Vec3(-200, 0, 0));
  s.board_poses = {RigidPose(Mat3::Identity(), Vec3(0, 0, 1000))};
  s.board_points = {Vec3(0, 0, 0), Vec3(30, 0, 0)};
  std::vector<ObservationGrid> grids(2, ObservationGrid(1, std::vector<std::optional<Vec2>>(2)));
  for (int v = 0; v < 2; ++v)
    for (int p = 0; p < 2; ++p) grids[v][0][p] = Vec2(100 + p, 200 + v);
  std::ostringstream csv;
  WriteObservationsCsv(grids, csv);
  const std::string f = Write("obs.csv", csv.str());
  const StereoScene t = StereoSceneFromJson(StereoSceneToJson(s), f);
  EXPECT_LT((t.left_to_right.rotation() - s.left_to_right.rotation()).norm(), 1e-12);
  ASSERT_EQ(t.board_points.size(), 2u);
  EXPECT_EQ(*t.right_observations[0][1], Vec2(101, 201));
}

TEST_F(Io, RetimedCsv) {
  const std::vector<RetimedFrame> rows = {{0, 0.0, 5000.0}, {1, 33.333, 5033.336}};
  std::ostringstream out;
  WriteRetimedCsv(rows, out);
  const auto back = ReadRetimedCsv(Write("r.csv", out.str()));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].frame_index, 1);
  EXPECT_NEAR(back[1].global_ms, 5033.336, 1e-9);
  EXPECT_THROW(ReadRetimedCsv(Write("bad.csv", "frame_index,local_ms,global_ms\n1,2\n")), SchemaError);
}

TEST_F(Io, TracksCsv) {
  const Track2D t = ReadTracksCsv(Write("t.csv", "frame_index,point_id,x,y\n0,1,2.5,3\n4,1,5,6\n"), "cam");
  EXPECT_EQ(t.stream_id, "cam");
  ASSERT_EQ(t.observations.size(), 2u);
  EXPECT_EQ(t.observations[1].frame_index, 4);
  EXPECT_EQ(t.observations[0].pixel, Vec2(2.5, 3));
  EXPECT_THROW(ReadTracksCsv(Write("u.csv", "frame,x\n"), "cam"), SchemaError);
}

}  // namespace
}  // namespace ledsync

// Runs the ledsync binary and checks outputs and exit codes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ledsync/json_util.hpp"

namespace ledsync {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* bin = std::getenv("LEDSYNC_BIN");
    ASSERT_NE(bin, nullptr) << "LEDSYNC_BIN not set";
    bin_ = bin;
    dir_ = fs::temp_directory_path() /
           ("ledsync_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of `ledsync args`; stdout goes to out.txt, stderr to err.txt.
  int Run(const std::string& args) {
    const std::string cmd = "'" + bin_ + "' " + args + " > '" + Path("out.txt") + "' 2> '" + Path("err.txt") + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  std::string Read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  void Write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }
  std::vector<Json> Lines(const std::string& name) const { return json_util::ReadLines(Path(name)); }

  std::string bin_;
  fs::path dir_;
};

TEST_F(Cli, RenderWritesFramesAndManifest) {
  ASSERT_EQ(Run("render --fps 30 --exposure 8.33 --frames 10 --alpha 1 --beta 0 --out " + Path("r")), 0)
      << Read("err.txt");
  int pgm = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "r")) pgm += e.path().extension() == ".pgm";
  EXPECT_EQ(pgm, 10);
  EXPECT_TRUE(fs::exists(dir_ / "r" / "manifest.json"));
  const Json summary = Json::parse(Read("out.txt"));
  EXPECT_EQ(summary.at("frames"), 10);
}

TEST_F(Cli, RenderRejectsFpsOutOfRange) {
  EXPECT_EQ(Run("render --fps 2000 --exposure 0.4 --frames 1 --out " + Path("r")), 2);
  EXPECT_NE(Read("err.txt").find("fps"), std::string::npos);
}

TEST_F(Cli, RenderIsDeterministic) {
  ASSERT_EQ(Run("render --frames 3 --noise 5 --seed 9 --out " + Path("a")), 0);
  ASSERT_EQ(Run("render --frames 3 --noise 5 --seed 9 --out " + Path("b")), 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir_ / "a" / "manifest.json"), slurp(dir_ / "b" / "manifest.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "frame_000002.pgm"), slurp(dir_ / "b" / "frame_000002.pgm"));
}

TEST_F(Cli, DecodeRenderedSet) {
  ASSERT_EQ(Run("render --frames 10 --noise 4 --out " + Path("r")), 0);
  ASSERT_EQ(Run("decode --input " + Path("r") + " --out " + Path("d.jsonl")), 0) << Read("err.txt");
  const auto lines = Lines("d.jsonl");
  ASSERT_EQ(lines.size(), 10u);
  int accepted = 0;
  for (const auto& j : lines) accepted += j.contains("window");
  EXPECT_GE(accepted, 9);
}

TEST_F(Cli, DecodeEmptyDirectory) {
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(Run("decode --input " + Path("empty")), 2);
}

TEST_F(Cli, DecodeNothingUsable) {
  fs::create_directories(dir_ / "gray");
  std::ofstream out(dir_ / "gray" / "frame_000000.pgm", std::ios::binary);
  out << "P5\n64 48\n255\n" << std::string(64 * 48, '\x80');
  out.close();
  EXPECT_EQ(Run("decode --input " + Path("gray")), 3);
  EXPECT_NE(Read("out.txt").find("NoMarker"), std::string::npos);
}

TEST_F(Cli, FtkDecodeUsesSameSchema) {
  ASSERT_EQ(Run("render --modality ftk --frames 12 --fps 31 --out " + Path("f")), 0) << Read("err.txt");
  ASSERT_EQ(Run("ftk-decode --input " + Path("f/fiducials.jsonl") + " --out " + Path("a.jsonl")), 0)
      << Read("err.txt");
  ASSERT_EQ(Run("decode --mode ftk --input " + Path("f/fiducials.jsonl") + " --out " + Path("b.jsonl")), 0);
  EXPECT_EQ(Read("a.jsonl"), Read("b.jsonl"));
  const auto lines = Lines("a.jsonl");
  ASSERT_EQ(lines.size(), 12u);
  for (const auto& j : lines) {
    EXPECT_TRUE(j.contains("frame"));
    EXPECT_TRUE(j.contains("window") || (j.contains("reject") && j.contains("step")));
  }
}

TEST_F(Cli, FitTwoSampleStream) {
  Write("s.json", R"({"stream_id": "cam0", "fps_nominal": 30, "n_frames": 18001,
                      "samples": [[0, 5000], [600000, 605060]]})");
  ASSERT_EQ(Run("fit --stream " + Path("s.json")), 0) << Read("err.txt");
  const Json j = Json::parse(Read("out.txt"));
  EXPECT_NEAR(j.at("alpha").get<double>(), 1.0001, 1e-12);
  EXPECT_NEAR(j.at("beta").get<double>(), 5000.0, 1e-9);
  EXPECT_EQ(j.at("stream_id"), "cam0");
}

TEST_F(Cli, FitSchemaErrorReportsPath) {
  Write("s.json", R"({"stream_id": "cam0", "fps_nominal": 30, "n_frames": 10,
                      "samples": [[0, 5000], [1, "x"]]})");
  EXPECT_EQ(Run("fit --stream " + Path("s.json")), 2);
  EXPECT_NE(Read("err.txt").find("/samples/1/1"), std::string::npos);
}

TEST_F(Cli, FitWithoutSamplesIsUnusable) {
  Write("d.jsonl", R"({"frame": 0, "reject": "NoMarker", "step": 1})" "\n");
  EXPECT_EQ(Run("fit --decoded " + Path("d.jsonl") + " --fps 30"), 3);
}

TEST_F(Cli, RetimeIdentity) {
  Write("m.json", R"({"stream_id": "a", "alpha": 1, "beta": 0, "inliers": [], "rmse_residual_ms": 0})");
  ASSERT_EQ(Run("retime --model " + Path("m.json") + " --fps 40 --frames 3"), 0) << Read("err.txt");
  std::istringstream csv(Read("out.txt"));
  std::string header, line;
  std::getline(csv, header);
  EXPECT_EQ(header, "frame_index,local_ms,global_ms");
  for (int i = 0; std::getline(csv, line); ++i) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    EXPECT_EQ(std::stoi(line.substr(0, a)), i);
    EXPECT_EQ(line.substr(a + 1, b - a - 1), line.substr(b + 1));
  }
}

TEST_F(Cli, EvalRmseIdentical) {
  Write("r.csv", "frame_index,local_ms,global_ms\n0,0,10\n1,25,35\n");
  ASSERT_EQ(Run("eval rmse --a " + Path("r.csv") + " --b " + Path("r.csv")), 0) << Read("err.txt");
  EXPECT_EQ(Json::parse(Read("out.txt")).at("value_ms"), 0.0);
}

TEST_F(Cli, AlignNearestAndInterpolate) {
  Write("a.csv", "frame_index,local_ms,global_ms\n0,0,0\n1,10,10\n");
  Write("t.csv", "frame_index,point_id,x,y\n0,0,0,0\n1,0,4,2\n");
  Write("q.txt", "5\n");
  const std::string base = "align --stream a," + Path("a.csv") + "," + Path("t.csv") + " --queries " + Path("q.txt");
  ASSERT_EQ(Run(base + " --mode interpolate"), 0) << Read("err.txt");
  EXPECT_EQ(Read("out.txt"), "query_ms,stream_id,point_id,x,y,mode\n5,a,0,2,1,interpolate\n");
  ASSERT_EQ(Run(base + " --mode nearest"), 0);
  EXPECT_EQ(Read("out.txt"), "query_ms,stream_id,point_id,x,y,mode\n5,a,0,0,0,nearest\n");
}

TEST_F(Cli, UnknownSubcommandIsInputError) {
  EXPECT_EQ(Run("bogus"), 2);
}

}  // namespace
}  // namespace ledsync

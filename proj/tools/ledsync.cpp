// ledsync command-line tool.
//
// Exit codes: 0 success, 2 input or schema error, 3 no usable frames/samples.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ledsync/board.hpp"
#include "ledsync/decoder.hpp"
#include "ledsync/eval_io.hpp"
#include "ledsync/ftk.hpp"
#include "ledsync/geometry.hpp"
#include "ledsync/render.hpp"
#include "ledsync/sync.hpp"

namespace fs = std::filesystem;
using namespace ledsync;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitUnusable = 3;

// Raised when the input is valid but contains nothing usable.
struct Unusable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

BoardGeometry LoadBoard(const std::string& path) {
  BoardGeometry board = path.empty() ? DefaultBoardGeometry() : LoadBoardGeometry(path);
  board.Validate();
  return board;
}

// Writes to `path`, or standard output when empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// Gentle hand-held motion in front of the camera.
PoseSchedule DefaultTrajectory(double distance_mm) {
  return [distance_mm](int i) {
    const Mat3 facing = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
    const Mat3 r = AxisAngle(Vec3(1, 0, 0), 0.25 * std::sin(0.05 * i)) *
                   AxisAngle(Vec3(0, 1, 0), 0.2 * std::sin(0.031 * i)) * facing *
                   AxisAngle(Vec3(0, 0, 1), 0.15 * std::sin(0.017 * i));
    return RigidPose(NearestRotation(r),
                     Vec3(40.0 * std::sin(0.02 * i), 25.0 * std::cos(0.023 * i), distance_mm));
  };
}

struct RenderArgs {
  std::string out;
  std::string geometry;
  std::string modality = "image";
  CaptureConfig capture;
  int frames = 10;
  bool infrared = false;
  double marker_noise = 0.0;
  double distance = 900.0;
  int width = 1920;
  int height = 1080;
  double focal = 1000.0;
};

int Render(const RenderArgs& a) {
  a.capture.Validate();
  if (a.frames < 1) throw std::invalid_argument("--frames must be >= 1");
  const BoardGeometry board = LoadBoard(a.geometry);
  fs::create_directories(a.out);
  SaveBoardGeometry(board, fs::path(a.out) / "board.json");
  const auto trajectory = DefaultTrajectory(a.distance);
  Json summary;
  if (a.modality == "ftk") {
    const auto seq = GenerateFiducialSequence(a.capture, board, a.marker_noise, trajectory, a.frames);
    WriteFiducialFrames(seq.frames, (fs::path(a.out) / "fiducials.jsonl").string());
    std::ofstream(fs::path(a.out) / "manifest.json") << ManifestToJson(seq.manifest).dump(2) << '\n';
    summary = {{"modality", "ftk"}, {"frames", seq.frames.size()}};
  } else {
    CameraModel camera{a.focal, a.focal, a.width / 2.0, a.height / 2.0, a.width, a.height};
    camera.Validate();
    RenderOptions options;
    options.infrared = a.infrared;
    const auto manifest = RenderSequence(board, camera, a.capture, trajectory, a.frames, a.out, options);
    summary = {{"modality", a.infrared ? "ir" : "image"}, {"frames", manifest.frames.size()}};
  }
  summary["out"] = a.out;
  summary["alpha_true"] = a.capture.alpha_true;
  summary["beta_true"] = a.capture.beta_true;
  std::cout << summary.dump() << '\n';
  return 0;
}

struct DecodeArgs {
  std::string input;
  std::string output;
  std::string geometry;
  std::string mode = "image";
  std::string poses_out;
  DecoderConfig decoder;
  FtkConfig ftk;
};

int Decode(const DecodeArgs& a) {
  const BoardGeometry board = LoadBoard(a.geometry);
  std::vector<Json> lines;
  std::size_t accepted = 0;
  if (a.mode == "ftk") {
    if (!fs::is_regular_file(a.input)) throw std::runtime_error("cannot read " + a.input);
    const auto frames = ReadFiducialFrames(a.input);
    if (frames.empty()) throw std::runtime_error(a.input + " has no frames");
    const auto decoded = DecodeFiducialFrames(frames, board, a.ftk);
    Output poses(a.poses_out);
    for (const auto& d : decoded) {
      lines.push_back(DecodedFrameToJson(d.decoded));
      accepted += d.decoded.accepted();
      if (!a.poses_out.empty()) {
        Json p = {{"frame", d.decoded.frame_index}};
        p["fitted_pose"] = d.fitted_pose ? PoseToJson(*d.fitted_pose) : Json();
        p["tracker_pose"] = d.tracker_pose ? PoseToJson(*d.tracker_pose) : Json();
        poses.stream() << p.dump() << '\n';
      }
    }
  } else if (a.mode == "image" || a.mode == "ir") {
    if (!fs::is_directory(a.input)) throw std::runtime_error("not a directory: " + a.input);
    DecoderConfig config = a.decoder;
    config.infrared = a.mode == "ir";
    const auto decoded = DecodeDirectory(a.input, board, config);
    if (decoded.empty()) throw std::runtime_error("no frame_NNNNNN.pgm files in " + a.input);
    for (const auto& d : decoded) {
      lines.push_back(DecodedFrameToJson(d));
      accepted += d.accepted();
    }
  } else {
    throw std::invalid_argument("unknown mode " + a.mode);
  }
  Output out(a.output);
  for (const auto& l : lines) out.stream() << l.dump() << '\n';
  if (accepted == 0) throw Unusable("no frame was decoded");
  return 0;
}

struct FitArgs {
  std::string stream;
  std::string decoded;
  std::string fiducials;
  std::string stream_id = "stream";
  std::string output;
  double fps = 0.0;
  std::uint64_t seed = 0;
};

int Fit(const FitArgs& a) {
  std::string id = a.stream_id;
  std::vector<Sample> samples;
  if (!a.stream.empty()) {
    const StreamRecord s = StreamFromJson(json_util::ReadFile(a.stream));
    id = s.stream_id;
    samples = s.samples;
  } else if (!a.decoded.empty()) {
    const auto records = ReadDecodedFrames(a.decoded);
    if (!a.fiducials.empty()) {
      const auto frames = ReadFiducialFrames(a.fiducials);
      for (const auto& r : records) {
        if (!r.window) continue;
        if (r.frame_index < 0 || static_cast<std::size_t>(r.frame_index) >= frames.size()) {
          throw SchemaError("/" + std::to_string(r.frame_index), "frame not in the fiducial file");
        }
        samples.push_back({frames[r.frame_index].local_ts, static_cast<double>(r.window->start_ms)});
      }
    } else {
      if (!(a.fps > 0)) throw std::invalid_argument("--fps is required with --decoded");
      samples = SamplesFromDecoded(records, a.fps);
    }
  } else {
    throw std::invalid_argument("give --stream or --decoded");
  }
  if (samples.empty()) throw Unusable("no decoded samples");
  FitResult fit;
  try {
    fit = FitTimeModel(samples, a.seed);
  } catch (const IrreconcilableSamplesError& e) {
    throw Unusable(std::string("IrreconcilableSamples: ") + e.what());
  }
  Output out(a.output);
  out.stream() << FitToJson(id, fit).dump() << '\n';
  return 0;
}

struct RetimeArgs {
  std::string model;
  std::string stream;
  std::string output;
  double fps = 0.0;
  int frames = -1;
};

int Retime(const RetimeArgs& a) {
  const TimeModel model = ModelFromJson(json_util::ReadFile(a.model));
  StreamRecord stream;
  if (!a.stream.empty()) {
    stream = StreamFromJson(json_util::ReadFile(a.stream));
  } else {
    if (!(a.fps > 0) || a.frames < 0) throw std::invalid_argument("give --stream or --fps and --frames");
    stream = StreamRecord::FromNominalRate("stream", a.fps, static_cast<std::size_t>(a.frames));
  }
  const auto global = ledsync::Retime(model, stream);
  std::vector<RetimedFrame> rows;
  for (std::size_t i = 0; i < global.size(); ++i) {
    rows.push_back({static_cast<int>(i), stream.local_ts[i], global[i]});
  }
  Output out(a.output);
  WriteRetimedCsv(rows, out.stream());
  return 0;
}

struct AlignArgs {
  std::vector<std::string> streams;  // id,retimed.csv,tracks.csv
  std::string queries;
  std::string mode = "interpolate";
  std::string output;
};

int Align(const AlignArgs& a) {
  AlignMode mode;
  if (a.mode == "nearest") mode = AlignMode::kNearest;
  else if (a.mode == "interpolate") mode = AlignMode::kInterpolate;
  else throw std::invalid_argument("unknown mode " + a.mode);
  std::vector<AlignedStream> streams;
  for (const auto& arg : a.streams) {
    std::vector<std::string> parts;
    std::stringstream ss(arg);
    for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("--stream expects id,retimed.csv,tracks.csv");
    const auto retimed = ReadRetimedCsv(parts[1]);
    std::vector<double> global;
    for (std::size_t i = 0; i < retimed.size(); ++i) {
      if (retimed[i].frame_index != static_cast<int>(i)) {
        throw SchemaError(parts[1] + ":" + std::to_string(i + 2), "frame indices must be 0, 1, 2, ...");
      }
      global.push_back(retimed[i].global_ms);
    }
    streams.emplace_back(parts[0], std::move(global), ReadTracksCsv(parts[2], parts[0]));
  }
  std::vector<double> queries;
  std::ifstream in(a.queries);
  if (!in) throw std::runtime_error("cannot read " + a.queries);
  std::string line;
  for (int row = 1; std::getline(in, line); ++row) {
    if (line.empty() || line == "query_ms") continue;
    try {
      std::size_t used = 0;
      queries.push_back(std::stod(line, &used));
      if (used != line.size() && line.substr(used) != "\r") throw std::invalid_argument(line);
    } catch (const std::exception&) {
      throw SchemaError(a.queries + ":" + std::to_string(row), "expected a number");
    }
  }
  const auto rows = AlignTracks(streams, queries, mode);
  Output out(a.output);
  WriteAlignedCsv(rows, out.stream());
  return 0;
}

struct EvalArgs {
  std::string a, b, pairing;
  std::string scene, observations;
};

int EvalRmse(const EvalArgs& e) {
  const auto a = ReadRetimedCsv(e.a);
  const auto b = ReadRetimedCsv(e.b);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (!e.pairing.empty()) {
    std::ifstream in(e.pairing);
    if (!in) throw std::runtime_error("cannot read " + e.pairing);
    std::string line;
    for (int row = 1; std::getline(in, line); ++row) {
      if (line.empty() || line.rfind("a,b", 0) == 0) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      std::size_t i, j;
      if (!(ss >> i >> j) || i >= a.size() || j >= b.size()) {
        throw SchemaError(e.pairing + ":" + std::to_string(row), "expected row indices a,b");
      }
      pairs.emplace_back(i, j);
    }
  } else {
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      while (j < b.size() && b[j].frame_index < a[i].frame_index) ++j;
      if (j < b.size() && b[j].frame_index == a[i].frame_index) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) throw Unusable("no frame pairs");
  std::vector<double> ga, gb;
  for (const auto& r : a) ga.push_back(r.global_ms);
  for (const auto& r : b) gb.push_back(r.global_ms);
  const Json out = {{"metric", "rmse"}, {"value_ms", PairwiseRmse(ga, gb, pairs)}, {"n_pairs", pairs.size()}};
  std::cout << out.dump() << '\n';
  return 0;
}

int EvalMre(const EvalArgs& e, bool stereo) {
  const Json scene = json_util::ReadFile(e.scene);
  Json out;
  try {
    if (stereo) {
      const auto s = StereoSceneFromJson(scene, e.observations);
      out = {{"metric", "mre-stereo"}, {"value_px", StereoMreSymmetric(s)},
             {"n_views", s.board_poses.size()}, {"n_points", s.board_points.size()}};
    } else {
      const auto s = IrRgbSceneFromJson(scene, e.observations);
      out = {{"metric", "mre-ir"}, {"value_px", IrRgbMre(s)},
             {"n_views", s.marker_poses.size()}, {"n_points", s.marker_points.size()}};
    }
  } catch (const BehindCameraError& err) {
    throw std::invalid_argument(err.what());
  }
  std::cout << out.dump() << '\n';
  return 0;
}

void AddDecoderOptions(CLI::App* cmd, DecodeArgs& d) {
  cmd->add_option("--input", d.input, "Frame directory, or fiducial JSON lines for --mode ftk")->required();
  cmd->add_option("--out", d.output, "Output JSON lines (default: stdout)");
  cmd->add_option("--geometry", d.geometry, "Board geometry JSON");
  cmd->add_option("--corner-tol", d.decoder.corner_tol_mm, "Corner LED tolerance (mm)");
  cmd->add_option("--k-abs", d.decoder.k_abs, "Absolute lit margin (gray levels)");
  cmd->add_option("--k-rel", d.decoder.k_rel, "Relative lit margin");
  cmd->add_option("--band", d.decoder.ambiguity_band, "Ambiguity band (fraction of margin)");
  cmd->add_option("--min-area", d.decoder.min_marker_area_fraction, "Minimum marker area fraction");
  cmd->add_option("--rms-tol", d.ftk.rms_tol_mm, "ftk: marker fit RMS tolerance (mm)");
  cmd->add_option("--plane-tol", d.ftk.plane_tol_mm, "ftk: board plane tolerance (mm)");
  cmd->add_option("--match-tol", d.ftk.match_tol_mm, "ftk: LED match tolerance (mm)");
  cmd->add_option("--poses-out", d.poses_out, "ftk: write fitted and tracker poses (JSON lines)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LED clock synchronization toolkit"};
  app.require_subcommand(1);

  RenderArgs render;
  auto* r = app.add_subcommand("render", "Render a synthetic frame or fiducial sequence");
  r->add_option("--out", render.out, "Output directory")->required();
  r->add_option("--geometry", render.geometry, "Board geometry JSON");
  r->add_option("--fps", render.capture.fps, "Frames per second");
  r->add_option("--exposure", render.capture.exposure_ms, "Exposure (ms)");
  r->add_option("--frames", render.frames, "Number of frames");
  r->add_option("--alpha", render.capture.alpha_true, "True clock drift");
  r->add_option("--beta", render.capture.beta_true, "True clock offset (ms)");
  r->add_option("--skew", render.capture.rolling_shutter_skew_ms, "Rolling-shutter skew (ms)");
  r->add_option("--noise", render.capture.noise_sigma, "Intensity noise sigma");
  r->add_option("--ambient", render.capture.ambient, "Background gray level");
  r->add_option("--led-scale", render.capture.led_radius_scale, "LED radius multiplier");
  r->add_option("--led-gain", render.capture.led_gain, "Sensor gain for LED light (default: saturating)");
  r->add_option("--seed", render.capture.seed, "Noise seed");
  r->add_option("--modality", render.modality, "image or ftk")->check(CLI::IsMember({"image", "ftk"}));
  r->add_flag("--ir", render.infrared, "IR look: no marker, orientation LED on");
  r->add_option("--marker-noise", render.marker_noise, "ftk point noise (mm)");
  r->add_option("--distance", render.distance, "Board distance (mm)");
  r->add_option("--width", render.width, "Image width");
  r->add_option("--height", render.height, "Image height");
  r->add_option("--focal", render.focal, "Focal length (px)");

  DecodeArgs decode;
  auto* d = app.add_subcommand("decode", "Decode exposure windows");
  AddDecoderOptions(d, decode);
  d->add_option("--mode", decode.mode, "image, ir or ftk")->check(CLI::IsMember({"image", "ir", "ftk"}));
  DecodeArgs ftk_decode;
  ftk_decode.mode = "ftk";
  auto* fd = app.add_subcommand("ftk-decode", "Same as decode --mode ftk");
  AddDecoderOptions(fd, ftk_decode);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a clock model");
  f->add_option("--stream", fit.stream, "Stream manifest JSON");
  f->add_option("--decoded", fit.decoded, "Decoded JSON lines");
  f->add_option("--fiducials", fit.fiducials, "Fiducial JSON lines supplying local timestamps");
  f->add_option("--fps", fit.fps, "Nominal frame rate for --decoded");
  f->add_option("--stream-id", fit.stream_id, "Stream id for --decoded");
  f->add_option("--seed", fit.seed, "RANSAC seed");
  f->add_option("--out", fit.output, "Output JSON (default: stdout)");

  RetimeArgs retime;
  auto* rt = app.add_subcommand("retime", "Map local frame times to global time");
  rt->add_option("--model", retime.model, "Fitted model JSON")->required();
  rt->add_option("--stream", retime.stream, "Stream manifest JSON");
  rt->add_option("--fps", retime.fps, "Nominal frame rate");
  rt->add_option("--frames", retime.frames, "Frame count");
  rt->add_option("--out", retime.output, "Output CSV (default: stdout)");

  AlignArgs align;
  auto* al = app.add_subcommand("align", "Sample tracked points at global query times");
  al->add_option("--stream", align.streams, "id,retimed.csv,tracks.csv (repeatable)")->required();
  al->add_option("--queries", align.queries, "Query times, one per line (ms)")->required();
  al->add_option("--mode", align.mode, "nearest or interpolate")
      ->check(CLI::IsMember({"nearest", "interpolate"}));
  al->add_option("--out", align.output, "Output CSV (default: stdout)");

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Evaluation metrics");
  ev->require_subcommand(1);
  auto* ev_rmse = ev->add_subcommand("rmse", "RMSE between two retimed streams");
  ev_rmse->add_option("--a", eval.a, "Retimed CSV")->required();
  ev_rmse->add_option("--b", eval.b, "Retimed CSV")->required();
  ev_rmse->add_option("--pairing", eval.pairing, "CSV of row index pairs a,b (default: same frame)");
  auto* ev_stereo = ev->add_subcommand("mre-stereo", "Symmetric stereo reprojection error");
  auto* ev_ir = ev->add_subcommand("mre-ir", "IR to RGB reprojection error");
  for (auto* c : {ev_stereo, ev_ir}) {
    c->add_option("--scene", eval.scene, "Scene JSON")->required();
    c->add_option("--observations", eval.observations, "CSV view,frame,point,x,y")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (r->parsed()) return Render(render);
    if (d->parsed()) return Decode(decode);
    if (fd->parsed()) return Decode(ftk_decode);
    if (f->parsed()) return Fit(fit);
    if (rt->parsed()) return Retime(retime);
    if (al->parsed()) return Align(align);
    if (ev_rmse->parsed()) return EvalRmse(eval);
    if (ev_stereo->parsed()) return EvalMre(eval, true);
    if (ev_ir->parsed()) return EvalMre(eval, false);
  } catch (const Unusable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnusable;
  } catch (const SchemaError& e) {
    std::cerr << "schema error at " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

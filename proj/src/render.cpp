#include "ledsync/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ledsync/parallel.hpp"
#include "ledsync/random.hpp"

namespace ledsync {

void CaptureConfig::Validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!(fps >= 10.0 && fps <= 1000.0)) fail("fps must be within [10, 1000]");
  if (!(exposure_ms > 0.0 && exposure_ms < 100.0)) fail("exposure must be within (0, 100) ms");
  if (exposure_ms > FramePeriodMs() + 1e-9) fail("exposure exceeds the frame period");
  if (!(alpha_true > 0.0) || !std::isfinite(alpha_true) || !std::isfinite(beta_true)) {
    fail("alpha must be positive and beta finite");
  }
  if (!(rolling_shutter_skew_ms >= 0.0)) fail("rolling shutter skew must be >= 0");
  if (!(noise_sigma >= 0.0)) fail("noise sigma must be >= 0");
  if (!(ambient >= 0.0 && ambient <= 255.0)) fail("ambient must be within [0, 255]");
  if (!(led_radius_scale > 0.0)) fail("LED radius scale must be positive");
  if (!(led_gain > 0.0)) fail("LED gain must be positive");
}

TimeInterval CaptureConfig::TrueWindow(int frame_index) const {
  const double start = alpha_true * LocalTimestamp(frame_index) + beta_true;
  return {start, start + exposure_ms};
}

double CaptureConfig::Response(double brightness) const {
  if (!(brightness > 0.0)) return 0.0;
  if (std::isinf(led_gain)) return 1.0;
  return std::min(1.0, led_gain * brightness);
}

double LedBrightness(int led_index, const TimeInterval& window) {
  if (!(window.Length() > 0.0)) return 0.0;
  double total = 0.0;
  auto rev = static_cast<std::int64_t>(std::floor((window.start_ms - led_index) / kRevolutionMs));
  for (;; ++rev) {
    const double on = static_cast<double>(rev * kRevolutionMs + led_index);
    if (on >= window.end_ms) break;
    const double lo = std::max(window.start_ms, on);
    const double hi = std::min(window.end_ms, on + 1.0);
    if (hi > lo) total += hi - lo;
  }
  return std::clamp(total, 0.0, 1.0);
}

bool CounterBitLit(int bit, const TimeInterval& window) {
  const double length = window.Length();
  if (!(length > 0.0)) return false;
  double on = 0.0;
  auto rev = static_cast<std::int64_t>(std::floor(window.start_ms / kRevolutionMs));
  for (;; ++rev) {
    const double begin = static_cast<double>(rev * kRevolutionMs);
    if (begin >= window.end_ms) break;
    const std::int64_t value = ((rev % kCounterModulus) + kCounterModulus) % kCounterModulus;
    const double overlap =
        std::min(window.end_ms, begin + kRevolutionMs) - std::max(window.start_ms, begin);
    if (overlap > 0.0 && ((value >> bit) & 1)) on += overlap;
  }
  return on >= 0.5 * length;
}

namespace {

// Board-plane appearance without LED light.
class BoardShader {
 public:
  BoardShader(const BoardGeometry& board, bool draw_marker, double ambient)
      : board_(board), draw_marker_(draw_marker), ambient_(ambient),
        half_(board.board_size_mm / 2.0) {
    origin_ = board.marker_corners[0];
    const Vec2 ex = board.marker_corners[1] - origin_;
    const Vec2 ey = board.marker_corners[3] - origin_;
    u_axis_ = ex * (6.0 / ex.squaredNorm());
    v_axis_ = ey * (6.0 / ey.squaredNorm());
  }

  double Level(double bx, double by) const {
    if (std::abs(bx) > half_ || std::abs(by) > half_) return ambient_;
    if (!draw_marker_) return kBoardLevel;
    const Vec2 d(bx - origin_.x(), by - origin_.y());
    const double u = d.dot(u_axis_);
    const double v = d.dot(v_axis_);
    constexpr double q = 0.5;  // quiet zone in modules
    if (u < -q || u >= 6.0 + q || v < -q || v >= 6.0 + q) return kBoardLevel;
    if (u < 0.0 || u >= 6.0 || v < 0.0 || v >= 6.0) return kMarkerWhiteLevel;
    const int col = static_cast<int>(u);
    const int row = static_cast<int>(v);
    if (row == 0 || row == 5 || col == 0 || col == 5) return kBoardLevel;
    return board_.marker_bits[(row - 1) * 4 + (col - 1)] ? kMarkerWhiteLevel : kBoardLevel;
  }

 private:
  const BoardGeometry& board_;
  bool draw_marker_;
  double ambient_;
  double half_;
  Vec2 origin_;
  Vec2 u_axis_;
  Vec2 v_axis_;
};

enum class LedKind { kRing, kCounter, kCorner, kOrientation };

struct LedSpot {
  Vec2 center;
  LedKind kind;
  int index;
};

struct BBox {
  int x0, y0, x1, y1;  // inclusive
  bool empty() const { return x1 < x0 || y1 < y0; }
};

// Image bounding box of board points, or nullopt if any lies behind the
// camera.
std::optional<BBox> ProjectedBox(const Homography& h, std::span<const Vec2> pts, int width,
                                 int height, double margin) {
  double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
  for (const auto& p : pts) {
    if (!(h.Depth(p) > 0.0)) return std::nullopt;
    const Vec2 q = h.Apply(p);
    xmin = std::min(xmin, q.x());
    xmax = std::max(xmax, q.x());
    ymin = std::min(ymin, q.y());
    ymax = std::max(ymax, q.y());
  }
  BBox box;
  box.x0 = static_cast<int>(std::max(0.0, std::floor(xmin - margin)));
  box.y0 = static_cast<int>(std::max(0.0, std::floor(ymin - margin)));
  box.x1 = static_cast<int>(std::min(width - 1.0, std::ceil(xmax + margin)));
  box.y1 = static_cast<int>(std::min(height - 1.0, std::ceil(ymax + margin)));
  return box;
}

struct InverseMap {
  double m[9];
  explicit InverseMap(const Mat3& inv) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r * 3 + c] = inv(r, c);
    }
  }
  // Board point seen at pixel (x, y); false if the ray misses the board's
  // front half-space.
  bool operator()(double x, double y, double& bx, double& by) const {
    const double w = m[6] * x + m[7] * y + m[8];
    if (!(w > 0.0)) return false;
    bx = (m[0] * x + m[1] * y + m[2]) / w;
    by = (m[3] * x + m[4] * y + m[5]) / w;
    return true;
  }
};

}  // namespace

GrayImage RenderFrame(const BoardGeometry& board, const CameraModel& camera,
                      const Homography& board_to_image, const TimeInterval& window,
                      const CaptureConfig& config, int frame_index,
                      const RenderOptions& options) {
  const int width = camera.width;
  const int height = camera.height;
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera image size must be positive");
  // The Homography constructor already rejects singular matrices.
  const InverseMap to_board(board_to_image.matrix().inverse());
  const BoardShader shader(board, options.draw_marker && !options.infrared, config.ambient);

  std::vector<float> canvas(static_cast<std::size_t>(width) * height,
                            static_cast<float>(config.ambient));
  auto px = [&](int x, int y) -> float& { return canvas[static_cast<std::size_t>(y) * width + x]; };

  // Base scene with anti-aliased edges: pixels whose four corners share one
  // level are flat, the rest are supersampled.
  const double half = board.board_size_mm / 2.0;
  const std::array<Vec2, 4> outline = {Vec2(-half, -half), Vec2(half, -half), Vec2(half, half),
                                       Vec2(-half, half)};
  const BBox box = ProjectedBox(board_to_image, outline, width, height, 2.0)
                       .value_or(BBox{0, 0, width - 1, height - 1});
  auto level_at = [&](double x, double y) {
    double bx, by;
    if (!to_board(x, y, bx, by)) return config.ambient;
    return shader.Level(bx, by);
  };
  if (!box.empty()) {
    const int bw = box.x1 - box.x0 + 1;
    std::vector<double> upper(bw + 1), lower(bw + 1);
    for (int i = 0; i <= bw; ++i) upper[i] = level_at(box.x0 + i - 0.5, box.y0 - 0.5);
    constexpr int kSuper = 6;
    for (int y = box.y0; y <= box.y1; ++y) {
      for (int i = 0; i <= bw; ++i) lower[i] = level_at(box.x0 + i - 0.5, y + 0.5);
      for (int i = 0; i < bw; ++i) {
        const int x = box.x0 + i;
        const double a = upper[i];
        if (a == upper[i + 1] && a == lower[i] && a == lower[i + 1]) {
          px(x, y) = static_cast<float>(a);
          continue;
        }
        double sum = 0.0;
        for (int sy = 0; sy < kSuper; ++sy) {
          for (int sx = 0; sx < kSuper; ++sx) {
            sum += level_at(x - 0.5 + (sx + 0.5) / kSuper, y - 0.5 + (sy + 0.5) / kSuper);
          }
        }
        px(x, y) = static_cast<float>(sum / (kSuper * kSuper));
      }
      std::swap(upper, lower);
    }
  }

  // LED light, accumulated as sensor response in [0, 1] per pixel.
  std::vector<LedSpot> leds;
  for (int k = 0; k < static_cast<int>(board.ring.size()); ++k) {
    leds.push_back({board.ring[k], LedKind::kRing, k});
  }
  for (int k = 0; k < static_cast<int>(board.counter.size()); ++k) {
    leds.push_back({board.counter[k], LedKind::kCounter, k});
  }
  for (int k = 0; k < 4; ++k) {
    if (options.corners_enabled[k]) leds.push_back({board.corners[k], LedKind::kCorner, k});
  }
  if (options.infrared && board.orientation_led) {
    leds.push_back({*board.orientation_led, LedKind::kOrientation, 0});
  }

  const double skew = config.rolling_shutter_skew_ms;
  auto amplitude = [&](const LedSpot& led, int row) {
    const TimeInterval w = skew > 0.0 ? window.Shifted(skew * row / height) : window;
    switch (led.kind) {
      case LedKind::kRing:
        return config.Response(LedBrightness(led.index, w));
      case LedKind::kCounter:
        return CounterBitLit(led.index, w) ? 1.0 : 0.0;
      case LedKind::kCorner:
      case LedKind::kOrientation:
        return 1.0;
    }
    return 0.0;
  };

  const double sigma = board.LedRadius() * config.led_radius_scale;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const double extent = 3.5 * sigma;
  std::vector<float> light(canvas.size(), 0.0f);
  for (const auto& led : leds) {
    if (skew == 0.0 && amplitude(led, 0) == 0.0) continue;
    std::array<Vec2, 16> rim;
    for (int i = 0; i < 16; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 16.0;
      rim[i] = led.center + extent * Vec2(std::cos(t), std::sin(t));
    }
    const auto led_box = ProjectedBox(board_to_image, rim, width, height, 1.0);
    if (!led_box || led_box->empty()) continue;
    const double px_per_mm = std::sqrt(std::abs(board_to_image.Jacobian(led.center).determinant()));
    const int ss = std::clamp(static_cast<int>(std::ceil(2.5 / (sigma * px_per_mm))), 1, 8);
    for (int y = led_box->y0; y <= led_box->y1; ++y) {
      const double amp = skew == 0.0 ? amplitude(led, 0) : amplitude(led, y);
      if (amp == 0.0) continue;
      for (int x = led_box->x0; x <= led_box->x1; ++x) {
        double sum = 0.0;
        for (int sy = 0; sy < ss; ++sy) {
          for (int sx = 0; sx < ss; ++sx) {
            double bx, by;
            if (!to_board(x - 0.5 + (sx + 0.5) / ss, y - 0.5 + (sy + 0.5) / ss, bx, by)) continue;
            const double dx = bx - led.center.x();
            const double dy = by - led.center.y();
            sum += std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
          }
        }
        light[static_cast<std::size_t>(y) * width + x] += static_cast<float>(amp * sum / (ss * ss));
      }
    }
  }

  GrayImage image(width, height);
  Rng rng(FrameSeed(config.seed, frame_index));
  const bool noisy = config.noise_sigma > 0.0;
  for (int y = 0; y < height; ++y) {
    auto out = image.row(y);
    for (int x = 0; x < width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * width + x;
      double v = canvas[idx];
      if (light[idx] > 0.0f) v += (255.0 - v) * std::min(1.0f, light[idx]);
      if (noisy) v += config.noise_sigma * rng.Normal();
      out[x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return image;
}

std::uint64_t FrameSeed(std::uint64_t seed, int frame_index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(frame_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GroundTruthManifest MakeManifest(const std::optional<CameraModel>& camera,
                                 const CaptureConfig& config, const PoseSchedule& trajectory,
                                 int n_frames, int first_frame) {
  config.Validate();
  if (n_frames < 0) throw std::invalid_argument("frame count must be non-negative");
  GroundTruthManifest manifest;
  manifest.alpha_true = config.alpha_true;
  manifest.beta_true = config.beta_true;
  manifest.fps = config.fps;
  manifest.exposure_ms = config.exposure_ms;
  manifest.frames.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    GroundTruthFrame f;
    f.frame_index = first_frame + i;
    f.local_ts_ms = config.LocalTimestamp(f.frame_index);
    f.true_window = config.TrueWindow(f.frame_index);
    f.board_pose = trajectory(f.frame_index);
    if (camera) f.homography = BoardToImage(*camera, f.board_pose);
    manifest.frames.push_back(std::move(f));
  }
  return manifest;
}

GrayImage RenderManifestFrame(const BoardGeometry& board, const CameraModel& camera,
                              const GroundTruthFrame& frame, const CaptureConfig& config,
                              const RenderOptions& options) {
  const Homography h = frame.homography ? *frame.homography : BoardToImage(camera, frame.board_pose);
  return RenderFrame(board, camera, h, frame.true_window, config, frame.frame_index, options);
}

GroundTruthManifest RenderSequence(const BoardGeometry& board, const CameraModel& camera,
                                   const CaptureConfig& config, const PoseSchedule& trajectory,
                                   int n_frames, const std::filesystem::path& out_dir,
                                   const RenderOptions& options) {
  if (n_frames < 1) throw std::invalid_argument("need at least one frame");
  camera.Validate();
  GroundTruthManifest manifest = MakeManifest(camera, config, trajectory, n_frames);
  std::filesystem::create_directories(out_dir);
  ParallelFor(manifest.frames.size(), [&](std::size_t i) {
    const auto& f = manifest.frames[i];
    WritePgm(RenderManifestFrame(board, camera, f, config, options), out_dir / FrameFileName(f.frame_index));
  });
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + out_dir.string());
  out << ManifestToJson(manifest).dump(2) << '\n';
  return manifest;
}

Json ManifestToJson(const GroundTruthManifest& manifest) {
  Json frames = Json::array();
  for (const auto& f : manifest.frames) {
    Json jf = {{"frame_index", f.frame_index},
               {"local_ts_ms", f.local_ts_ms},
               {"true_window", {f.true_window.start_ms, f.true_window.end_ms}},
               {"pose", PoseToJson(f.board_pose)}};
    if (f.homography) {
      Json h = Json::array();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) h.push_back(f.homography->matrix()(r, c));
      }
      jf["homography"] = h;
    }
    frames.push_back(std::move(jf));
  }
  return {{"alpha_true", manifest.alpha_true}, {"beta_true", manifest.beta_true},
          {"fps", manifest.fps},               {"exposure_ms", manifest.exposure_ms},
          {"frames", frames}};
}

GroundTruthManifest ManifestFromJson(const Json& j) {
  using namespace json_util;
  GroundTruthManifest m;
  m.alpha_true = Number(Field(j, "alpha_true", ""), "/alpha_true");
  m.beta_true = Number(Field(j, "beta_true", ""), "/beta_true");
  m.fps = Number(Field(j, "fps", ""), "/fps");
  m.exposure_ms = Number(Field(j, "exposure_ms", ""), "/exposure_ms");
  const Json& frames = Array(Field(j, "frames", ""), "/frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string p = Join("/frames", i);
    GroundTruthFrame f;
    f.frame_index = static_cast<int>(Integer(Field(frames[i], "frame_index", p), Join(p, "frame_index")));
    f.local_ts_ms = Number(Field(frames[i], "local_ts_ms", p), Join(p, "local_ts_ms"));
    const auto w = Numbers(Field(frames[i], "true_window", p), Join(p, "true_window"), 2);
    f.true_window = {w[0], w[1]};
    f.board_pose = PoseFromJson(Field(frames[i], "pose", p), Join(p, "pose"), 1e-6);
    if (frames[i].contains("homography")) {
      const auto h = Numbers(frames[i]["homography"], Join(p, "homography"), 9);
      Mat3 mat;
      mat << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
      f.homography = Homography(mat);
    }
    m.frames.push_back(std::move(f));
  }
  return m;
}

FiducialFrame GenerateFiducialFrame(const BoardGeometry& board, const RigidPose& pose,
                                    const TimeInterval& window, const CaptureConfig& config,
                                    double marker_noise_mm, double local_ts, int frame_index) {
  std::vector<Vec2> lit(board.corners.begin(), board.corners.end());
  if (board.orientation_led) lit.push_back(*board.orientation_led);
  for (int bit = 0; bit < static_cast<int>(board.counter.size()); ++bit) {
    if (CounterBitLit(bit, window)) lit.push_back(board.counter[bit]);
  }
  for (int k = 0; k < static_cast<int>(board.ring.size()); ++k) {
    if (config.Response(LedBrightness(k, window)) >= 0.5) lit.push_back(board.ring[k]);
  }

  Rng rng(FrameSeed(config.seed ^ 0xF1D0C1A1ull, frame_index));
  FiducialFrame frame;
  frame.local_ts = local_ts;
  frame.points.reserve(lit.size());
  for (const auto& b : lit) {
    Vec3 p = pose.Apply(Vec3(b.x(), b.y(), 0.0));
    if (marker_noise_mm > 0.0) {
      p += marker_noise_mm * Vec3(rng.Normal(), rng.Normal(), rng.Normal());
    }
    frame.points.push_back(p);
  }
  // Trackers report fiducials in no particular order.
  for (std::size_t i = frame.points.size(); i > 1; --i) {
    std::swap(frame.points[i - 1], frame.points[rng.Index(i)]);
  }
  return frame;
}

FiducialSequence GenerateFiducialSequence(const CaptureConfig& config, const BoardGeometry& board,
                                          double marker_noise_mm, const PoseSchedule& trajectory,
                                          int n_frames) {
  if (!(marker_noise_mm >= 0.0)) throw std::invalid_argument("noise must be non-negative");
  FiducialSequence seq;
  seq.manifest = MakeManifest(std::nullopt, config, trajectory, std::max(0, n_frames));
  seq.frames.resize(seq.manifest.frames.size());
  ParallelFor(seq.frames.size(), [&](std::size_t i) {
    const auto& f = seq.manifest.frames[i];
    seq.frames[i] = GenerateFiducialFrame(board, f.board_pose, f.true_window, config, marker_noise_mm,
                                          f.local_ts_ms, f.frame_index);
  });
  return seq;
}

}  // namespace ledsync

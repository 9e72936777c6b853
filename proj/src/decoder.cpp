#include "ledsync/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "components.hpp"
#include "ledsync/parallel.hpp"
#include "polygon.hpp"

namespace ledsync {

namespace {

constexpr std::array<std::string_view, 7> kRejectionNames = {
    "NoMarker",        "MarkerTooSmall",  "CornerDeviation",   "NoSector",
    "MultipleSectors", "CounterBoundary", "ThresholdAmbiguous"};

int ImageMax(const GrayImage& image) {
  const auto px = image.pixels();
  return px.empty() ? 0 : *std::max_element(px.begin(), px.end());
}

double ImageMedian(const GrayImage& image) {
  std::array<std::int64_t, 256> hist{};
  for (auto v : image.pixels()) ++hist[v];
  const std::int64_t half = static_cast<std::int64_t>(image.pixels().size()) / 2;
  std::int64_t seen = 0;
  for (int v = 0; v < 256; ++v) {
    seen += hist[v];
    if (seen > half) return v;
  }
  return 255;
}

// Lit margin of the dynamic threshold for a given background level.
double Margin(const DecoderConfig& config, double image_max, double background) {
  return std::max(config.k_abs, config.k_rel * (image_max - background));
}

struct Blob {
  Vec2 centroid;
  double peak = 0.0;
};

// Intensity-weighted centroid of the 4-connected region above `threshold`
// grown from `seed`, restricted to pixels accepted by `inside`.
template <typename Inside>
Vec2 GrowCentroid(const GrayImage& image, int sx, int sy, double threshold, Inside&& inside) {
  std::vector<std::uint8_t> seen;
  const int x0 = std::max(0, sx - 64), y0 = std::max(0, sy - 64);
  const int x1 = std::min(image.width() - 1, sx + 64), y1 = std::min(image.height() - 1, sy + 64);
  const int bw = x1 - x0 + 1;
  seen.assign(static_cast<std::size_t>(bw) * (y1 - y0 + 1), 0);
  std::deque<std::pair<int, int>> queue{{sx, sy}};
  seen[static_cast<std::size_t>(sy - y0) * bw + (sx - x0)] = 1;
  double wsum = 0.0;
  Vec2 acc = Vec2::Zero();
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    const double wgt = image.at(x, y) - threshold;
    wsum += wgt;
    acc += wgt * Vec2(x, y);
    constexpr int dx[4] = {1, -1, 0, 0};
    constexpr int dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k], ny = y + dy[k];
      if (nx < x0 || nx > x1 || ny < y0 || ny > y1) continue;
      auto& s = seen[static_cast<std::size_t>(ny - y0) * bw + (nx - x0)];
      if (s || image.at(nx, ny) <= threshold || !inside(nx, ny)) continue;
      s = 1;
      queue.emplace_back(nx, ny);
    }
  }
  return acc / wsum;
}

// Board position of pixel p, or nullopt if the ray through p meets the board
// plane behind the camera. Only the forward map's homogeneous scale carries
// the depth sign; the inverse is normalized independently.
std::optional<Vec2> PixelToBoard(const Homography& to_image, const Homography& to_board, const Vec2& p) {
  const Vec2 b = to_board.Apply(p);
  if (!(to_image.Depth(b) > 0)) return std::nullopt;
  return b;
}

// Background-subtracted centroid with Gaussian weights (sigma = radius_mm / 3
// in the board plane) around the current estimate, re-centred until stable.
// Close to a matched filter for the LED's blurred disk.
Vec2 WindowedCentroid(const GrayImage& image, const Homography& to_board, const Homography& to_image,
                      Vec2 estimate, double radius_mm, double background) {
  const double sigma = radius_mm / 3.0;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  for (int iter = 0; iter < 10; ++iter) {
    const auto at = PixelToBoard(to_image, to_board, estimate);
    if (!at) return estimate;
    const Vec2 centre = *at;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Vec2& d : {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)}) {
      const Vec2 b = centre + radius_mm * d;
      if (!(to_image.Depth(b) > 0)) return estimate;
      const Vec2 p = to_image.Apply(b);
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(xmin)));
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int x1 = std::min(image.width() - 1, static_cast<int>(std::ceil(xmax)));
    const int y1 = std::min(image.height() - 1, static_cast<int>(std::ceil(ymax)));
    double wsum = 0.0;
    Vec2 acc = Vec2::Zero();
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const auto b = PixelToBoard(to_image, to_board, Vec2(x, y));
        if (!b) continue;
        const double d2 = (*b - centre).squaredNorm();
        if (d2 > radius_mm * radius_mm) continue;
        const double w = (image.at(x, y) - background) * std::exp(-d2 * inv_two_sigma2);
        wsum += w;
        acc += w * Vec2(x, y);
      }
    }
    if (!(wsum > 0)) return estimate;
    const Vec2 next = acc / wsum;
    const bool done = (next - estimate).norm() < 1e-3;
    estimate = next;
    if (done) break;
  }
  return estimate;
}

}  // namespace

std::string_view RejectionName(Rejection r) { return kRejectionNames[static_cast<int>(r)]; }

std::optional<Rejection> ParseRejection(std::string_view name) {
  for (std::size_t i = 0; i < kRejectionNames.size(); ++i) {
    if (kRejectionNames[i] == name) return static_cast<Rejection>(i);
  }
  return std::nullopt;
}

std::array<Vec2, 4> LocateCornerLeds(const GrayImage& image, const Homography& coarse,
                                     const BoardGeometry& board, const DecoderConfig& config) {
  const Homography inverse = coarse.Inverse();
  const double half = board.board_size_mm / 2.0 - 1.0;
  const double tol = config.corner_tol_mm;
  const double image_max = ImageMax(image);
  std::array<Vec2, 4> found;
  for (int k = 0; k < 4; ++k) {
    const Vec2 c = board.corners[k];
    const double bx0 = std::max(-half, c.x() - tol), bx1 = std::min(half, c.x() + tol);
    const double by0 = std::max(-half, c.y() - tol), by1 = std::min(half, c.y() + tol);
    auto fail = [&](const std::string& why) {
      return DecodeError(Rejection::kCornerDeviation, 3,
                         "corner LED " + std::to_string(k) + ": " + why);
    };
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Vec2& b : {Vec2(bx0, by0), Vec2(bx1, by0), Vec2(bx1, by1), Vec2(bx0, by1)}) {
      if (!(coarse.Depth(b) > 0)) throw fail("search window behind the camera");
      const Vec2 p = coarse.Apply(b);
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(xmin)));
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int x1 = std::min(image.width() - 1, static_cast<int>(std::ceil(xmax)));
    const int y1 = std::min(image.height() - 1, static_cast<int>(std::ceil(ymax)));
    auto inside = [&](int x, int y) {
      const auto b = PixelToBoard(coarse, inverse, Vec2(x, y));
      return b && b->x() >= bx0 && b->x() <= bx1 && b->y() >= by0 && b->y() <= by1;
    };
    std::vector<std::uint8_t> values;
    int peak = -1, px = 0, py = 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!inside(x, y)) continue;
        const int v = image.at(x, y);
        values.push_back(static_cast<std::uint8_t>(v));
        if (v > peak) {
          peak = v;
          px = x;
          py = y;
        }
      }
    }
    if (values.size() < 4) throw fail("search window outside the image");
    std::nth_element(values.begin(), values.begin() + values.size() / 2, values.end());
    const double background = values[values.size() / 2];
    if (peak - background < Margin(config, image_max, background)) throw fail("no LED found");
    const double threshold = background + 0.5 * (peak - background);
    Vec2 centroid = GrowCentroid(image, px, py, threshold, inside);
    centroid = WindowedCentroid(image, inverse, coarse, centroid, 3.0 * board.LedRadius(), background);
    const auto at = PixelToBoard(coarse, inverse, centroid);
    if (!at) throw fail("centroid behind the camera");
    const double deviation = (*at - c).norm();
    if (deviation > tol) {
      throw fail("deviates by " + std::to_string(deviation) + " mm");
    }
    found[k] = centroid;
  }
  return found;
}

namespace {

struct SamplePattern {
  std::vector<Vec2> disk;
  std::vector<std::vector<Vec2>> annulus;  // per LED, board mm, absolute
};

std::vector<Vec2> AllLeds(const BoardGeometry& board) {
  std::vector<Vec2> leds(board.ring.begin(), board.ring.end());
  leds.insert(leds.end(), board.counter.begin(), board.counter.end());
  leds.insert(leds.end(), board.corners.begin(), board.corners.end());
  if (board.orientation_led) leds.push_back(*board.orientation_led);
  return leds;
}

void Ring(std::vector<Vec2>& out, int count, double radius, double phase) {
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * (i + phase) / count;
    out.emplace_back(radius * std::cos(t), radius * std::sin(t));
  }
}

SamplePattern MakePattern(const BoardGeometry& board) {
  const double r = board.LedRadius();
  SamplePattern pattern;
  pattern.disk.emplace_back(0.0, 0.0);
  Ring(pattern.disk, 8, 0.5 * r, 0.0);
  Ring(pattern.disk, 12, 0.9 * r, 0.5);
  std::vector<Vec2> annulus;
  Ring(annulus, 16, 1.75 * r, 0.0);
  Ring(annulus, 20, 2.25 * r, 0.5);

  const auto others = AllLeds(board);
  const int n = kRingSize + kCounterBits;
  pattern.annulus.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 centre = i < kRingSize ? board.ring[i] : board.counter[i - kRingSize];
    std::vector<Vec2> kept;
    for (const auto& a : annulus) {
      const Vec2 p = centre + a;
      bool clear = true;
      for (const auto& o : others) {
        if ((o - centre).squaredNorm() > 1e-12 && (p - o).norm() < 1.5 * r) {
          clear = false;
          break;
        }
      }
      if (clear) kept.push_back(p);
    }
    pattern.annulus[i] = std::move(kept);
  }
  return pattern;
}

}  // namespace

LedReading DecodeLeds(const GrayImage& image, const Homography& refined, const BoardGeometry& board,
                      const DecoderConfig& config) {
  const SamplePattern pattern = MakePattern(board);
  const double image_max = ImageMax(image);
  LedReading reading;
  auto mean_at = [&](const std::vector<Vec2>& pts, const Vec2& offset, int led) {
    double sum = 0.0;
    for (const auto& b : pts) {
      const Vec2 q = b + offset;
      if (!(refined.Depth(q) > 0)) {
        throw DecodeError(Rejection::kThresholdAmbiguous, 5,
                          "LED " + std::to_string(led) + " behind the camera");
      }
      const Vec2 p = refined.Apply(q);
      if (!image.Contains(p.x(), p.y())) {
        throw DecodeError(Rejection::kThresholdAmbiguous, 5,
                          "LED " + std::to_string(led) + " outside the image");
      }
      sum += image.Sample(p.x(), p.y());
    }
    return sum / static_cast<double>(pts.size());
  };
  for (int i = 0; i < kRingSize + kCounterBits; ++i) {
    const Vec2 centre = i < kRingSize ? board.ring[i] : board.counter[i - kRingSize];
    const double disk = mean_at(pattern.disk, centre, i);
    if (pattern.annulus[i].empty()) {
      throw DecodeError(Rejection::kThresholdAmbiguous, 5,
                        "LED " + std::to_string(i) + " has no clear background");
    }
    const double annulus = mean_at(pattern.annulus[i], Vec2::Zero(), i);
    const double m = Margin(config, image_max, annulus);
    const double threshold = annulus + m;
    if (std::abs(disk - threshold) < config.ambiguity_band * m) {
      throw DecodeError(Rejection::kThresholdAmbiguous, 5,
                        "LED " + std::to_string(i) + " is too close to its threshold");
    }
    const bool lit = disk > threshold;
    if (i < kRingSize) {
      reading.ring[i] = lit;
    } else {
      reading.counter_bits[i - kRingSize] = lit;
      if (lit) reading.counter |= std::int64_t{1} << (i - kRingSize);
    }
  }
  return reading;
}

Sector FindSector(const std::array<bool, kRingSize>& ring) {
  const int lit = static_cast<int>(std::count(ring.begin(), ring.end(), true));
  if (lit == 0) throw DecodeError(Rejection::kNoSector, 5, "no ring LED lit");
  if (lit == kRingSize) {
    throw DecodeError(Rejection::kCounterBoundary, 5, "every ring LED lit");
  }
  // Count run starts in circular order.
  int runs = 0;
  int start = -1;
  for (int i = 0; i < kRingSize; ++i) {
    if (ring[i] && !ring[(i + kRingSize - 1) % kRingSize]) {
      ++runs;
      start = i;
    }
  }
  if (runs > 1) {
    throw DecodeError(Rejection::kMultipleSectors, 5, std::to_string(runs) + " lit arcs");
  }
  const int last = (start + lit - 1) % kRingSize;
  if (last < start) throw DecodeError(Rejection::kCounterBoundary, 5, "arc wraps past LED 99");
  return {start, last};
}

namespace {

struct Bootstrap {
  Homography coarse;
  double marker_area_fraction = 0.0;
  std::optional<Vec2> orientation_blob;
};

// IR images have no marker. The corner LEDs are the outermost bright blobs;
// the orientation LED tells which of them is corner 0.
Bootstrap InfraredBootstrap(const GrayImage& image, const BoardGeometry& board,
                            const DecoderConfig& config) {
  if (!board.orientation_led) {
    throw std::invalid_argument("IR decoding needs an orientation LED in the board geometry");
  }
  auto none = [](const std::string& why) { return DecodeError(Rejection::kNoMarker, 1, why); };
  const double image_max = ImageMax(image);
  const double background = ImageMedian(image);
  const double m = Margin(config, image_max, background);
  if (image_max - background < m) throw none("no bright LEDs");
  const double threshold = background + 0.5 * (image_max - background);
  const int w = image.width();
  const auto blobs = components::Label(w, image.height(), [&](int x, int y) {
    return image.at(x, y) > threshold;
  });
  std::vector<Vec2> centres;
  for (const auto& b : blobs) {
    double wsum = 0.0;
    Vec2 acc = Vec2::Zero();
    for (const auto& run : b.runs) {
      for (int x = run.x0; x <= run.x1; ++x) {
        const double wgt = image.at(x, run.y) - threshold;
        wsum += wgt;
        acc += wgt * Vec2(x, run.y);
      }
    }
    centres.push_back(acc / wsum);
  }
  if (centres.size() < 5) throw none("fewer than 5 bright blobs");
  const auto hull = polygon::ConvexHull(centres);
  if (hull.size() < 4) throw none("bright blobs are collinear");
  const auto quad = polygon::Clockwise(polygon::MaxAreaQuad(hull));

  const double r = board.LedRadius();
  double best = -1e300, second = -1e300;
  std::optional<Homography> chosen;
  for (int s = 0; s < 4; ++s) {
    const std::array<Vec2, 4> rotated = {quad[s], quad[(s + 1) % 4], quad[(s + 2) % 4],
                                         quad[(s + 3) % 4]};
    try {
      const Homography h = EstimateHomography(board.corners, rotated);
      double sum = 0.0;
      int n = 0;
      for (const Vec2& d : {Vec2(0, 0), Vec2(0.5 * r, 0), Vec2(-0.5 * r, 0), Vec2(0, 0.5 * r),
                            Vec2(0, -0.5 * r)}) {
        const Vec2 b = *board.orientation_led + d;
        if (!(h.Depth(b) > 0)) continue;
        const Vec2 p = h.Apply(b);
        if (!image.Contains(p.x(), p.y())) continue;
        sum += image.Sample(p.x(), p.y());
        ++n;
      }
      const double level = n ? sum / n : -1e300;
      if (level > best) {
        second = best;
        best = level;
        chosen = h;
      } else if (level > second) {
        second = level;
      }
    } catch (const DegenerateConfigurationError&) {
    }
  }
  if (!chosen || best - second < m) throw none("orientation LED not found");

  Bootstrap out{*chosen, 0.0, std::nullopt};
  std::array<Vec2, 4> marker;
  for (int k = 0; k < 4; ++k) marker[k] = chosen->Apply(board.marker_corners[k]);
  out.marker_area_fraction =
      std::abs(polygon::SignedArea(marker)) / (static_cast<double>(w) * image.height());
  const Vec2 expected = chosen->Apply(*board.orientation_led);
  double nearest = 1e300;
  for (const auto& c : centres) {
    const double d = (c - expected).norm();
    if (d < nearest) {
      nearest = d;
      out.orientation_blob = c;
    }
  }
  if (out.orientation_blob &&
      (chosen->Inverse().Apply(*out.orientation_blob) - *board.orientation_led).norm() >
          config.corner_tol_mm) {
    out.orientation_blob.reset();
  }
  return out;
}

}  // namespace

DecodedFrame DecodeFrame(const GrayImage& image, const BoardGeometry& board,
                         const DecoderConfig& config, int frame_index) {
  DecodedFrame out;
  out.frame_index = frame_index;
  try {
    Homography coarse;
    std::vector<Vec2> src, dst;
    if (config.infrared) {
      const Bootstrap boot = InfraredBootstrap(image, board, config);
      if (boot.marker_area_fraction < config.min_marker_area_fraction) {
        throw DecodeError(Rejection::kMarkerTooSmall, 1,
                          "area fraction " + std::to_string(boot.marker_area_fraction));
      }
      coarse = boot.coarse;
      if (boot.orientation_blob) {
        src.push_back(*board.orientation_led);
        dst.push_back(*boot.orientation_blob);
      }
    } else {
      std::string why;
      const auto marker = DetectMarker(image, board, config, &why);
      if (!marker) throw DecodeError(Rejection::kNoMarker, 1, why);
      if (marker->area_fraction < config.min_marker_area_fraction) {
        throw DecodeError(Rejection::kMarkerTooSmall, 1,
                          "area fraction " + std::to_string(marker->area_fraction));
      }
      try {
        coarse = EstimateHomography(board.marker_corners, marker->corners);
      } catch (const DegenerateConfigurationError& e) {
        throw DecodeError(Rejection::kNoMarker, 2, e.what());
      }
      src.assign(board.marker_corners.begin(), board.marker_corners.end());
      dst.assign(marker->corners.begin(), marker->corners.end());
    }

    const auto corners = LocateCornerLeds(image, coarse, board, config);
    src.insert(src.end(), board.corners.begin(), board.corners.end());
    dst.insert(dst.end(), corners.begin(), corners.end());
    Homography refined;
    try {
      refined = EstimateHomography(src, dst);
    } catch (const DegenerateConfigurationError& e) {
      throw DecodeError(Rejection::kCornerDeviation, 4, e.what());
    }

    const LedReading reading = DecodeLeds(image, refined, board, config);
    const Sector sector = FindSector(reading.ring);
    AcceptedFrame ok;
    ok.counter = reading.counter;
    ok.first_lit = sector.first;
    ok.last_lit = sector.last;
    ok.window = DecodeWindow(reading.counter, sector.first, sector.last);
    ok.coarse = coarse;
    ok.refined = refined;
    out.outcome = ok;
  } catch (const DecodeError& e) {
    out.outcome = RejectedFrame{e.reason(), e.step(), e.what()};
  }
  return out;
}

std::vector<DecodedFrame> DecodeDirectory(const std::filesystem::path& dir,
                                          const BoardGeometry& board, const DecoderConfig& config) {
  const auto files = ListFrames(dir);
  std::vector<DecodedFrame> frames(files.size());
  ParallelFor(files.size(), [&](std::size_t i) {
    const std::string stem = files[i].stem().string();
    const int index = std::stoi(stem.substr(stem.find('_') + 1));
    frames[i] = DecodeFrame(ReadPgm(files[i]), board, config, index);
  });
  return frames;
}

Json DecodedFrameToJson(const DecodedFrame& frame) {
  Json j = {{"frame", frame.frame_index}};
  if (frame.accepted()) {
    const auto& w = frame.result().window;
    j["window"] = {w.start_ms, w.end_ms};
  } else {
    j["reject"] = RejectionName(frame.rejection().reason);
    j["step"] = frame.rejection().step;
  }
  return j;
}

DecodedRecord DecodedRecordFromJson(const Json& j, const std::string& path) {
  using namespace json_util;
  DecodedRecord rec;
  rec.frame_index = static_cast<int>(Integer(Field(j, "frame", path), Join(path, "frame")));
  if (j.contains("window")) {
    const auto w = Numbers(j["window"], Join(path, "window"), 2);
    if (w[0] != std::floor(w[0]) || w[1] != std::floor(w[1]) || w[0] > w[1] || w[0] < 0) {
      throw SchemaError(Join(path, "window"), "expected integer [start, end] with start <= end");
    }
    rec.window = ExposureWindow{static_cast<std::int64_t>(w[0]), static_cast<std::int64_t>(w[1])};
  } else {
    const std::string name = String(Field(j, "reject", path), Join(path, "reject"));
    rec.reason = ParseRejection(name);
    if (!rec.reason) throw SchemaError(Join(path, "reject"), "unknown rejection " + name);
    if (j.contains("step")) rec.step = static_cast<int>(Integer(j["step"], Join(path, "step")));
  }
  return rec;
}

std::vector<DecodedRecord> ReadDecodedFrames(const std::string& file) {
  const auto lines = json_util::ReadLines(file);
  std::vector<DecodedRecord> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back(DecodedRecordFromJson(lines[i], "/" + std::to_string(i)));
  }
  return out;
}

}  // namespace ledsync

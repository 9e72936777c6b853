#include "ledsync/sync.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ledsync/random.hpp"

namespace ledsync {

std::vector<std::size_t> FitResult::InlierIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < inliers.size(); ++i) {
    if (inliers[i]) out.push_back(i);
  }
  return out;
}

TimeModel LeastSquaresFit(std::span<const Sample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("least squares needs >= 2 samples");
  long double ml = 0, mg = 0;
  for (const auto& s : samples) {
    ml += s.local_ts;
    mg += s.global_start;
  }
  ml /= samples.size();
  mg /= samples.size();
  long double sll = 0, slg = 0;
  for (const auto& s : samples) {
    const long double dl = s.local_ts - ml;
    sll += dl * dl;
    slg += dl * (s.global_start - mg);
  }
  if (!(sll > 0)) throw IrreconcilableSamplesError("all samples share one local timestamp");
  const long double alpha = slg / sll;
  if (!(alpha > 0)) throw IrreconcilableSamplesError("fitted drift is not positive");
  return TimeModel(static_cast<double>(alpha), static_cast<double>(mg - alpha * ml));
}

namespace {

std::vector<bool> Consensus(std::span<const Sample> samples, const TimeModel& m, double threshold,
                            std::size_t& count) {
  std::vector<bool> mask(samples.size());
  count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    mask[i] = std::abs(m.ToGlobal(samples[i].local_ts) - samples[i].global_start) <= threshold;
    count += mask[i];
  }
  return mask;
}

std::vector<Sample> Select(std::span<const Sample> samples, const std::vector<bool>& mask) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (mask[i]) out.push_back(samples[i]);
  }
  return out;
}

}  // namespace

FitResult FitTimeModel(std::span<const Sample> samples, std::uint64_t seed,
                       const RansacConfig& config) {
  if (samples.empty()) throw std::invalid_argument("no samples to fit");
  for (const auto& s : samples) {
    if (!std::isfinite(s.local_ts) || !std::isfinite(s.global_start)) {
      throw std::invalid_argument("samples must be finite");
    }
  }
  FitResult result;
  if (samples.size() == 1) {
    result.model = TimeModel(1.0, samples[0].global_start - samples[0].local_ts);
    result.inliers = {true};
    return result;
  }

  Rng rng(seed);
  auto pick = [&](Rng& r) { return static_cast<std::size_t>(r.Index(samples.size())); };
  std::vector<bool> best_mask;
  std::size_t best_count = 0;
  for (int it = 0; it < config.iterations; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    if (a == b) b = (b + 1) % samples.size();
    const double dl = samples[b].local_ts - samples[a].local_ts;
    if (dl == 0.0) continue;
    const double alpha = (samples[b].global_start - samples[a].global_start) / dl;
    if (!(alpha > 0.0)) continue;
    const TimeModel m(alpha, samples[a].global_start - alpha * samples[a].local_ts);
    std::size_t count = 0;
    auto mask = Consensus(samples, m, config.inlier_threshold_ms, count);
    if (count > best_count) {
      best_count = count;
      best_mask = std::move(mask);
    }
  }
  if (best_count < 2) {
    throw IrreconcilableSamplesError("no two samples agree on a clock model");
  }

  // Least-squares refit, repeated while the consensus set changes.
  TimeModel model = LeastSquaresFit(Select(samples, best_mask));
  for (int round = 0; round < 5; ++round) {
    std::size_t count = 0;
    auto mask = Consensus(samples, model, config.inlier_threshold_ms, count);
    if (mask == best_mask || count < 2) break;
    best_mask = std::move(mask);
    model = LeastSquaresFit(Select(samples, best_mask));
  }
  if (!model.WithinFittedBounds()) {
    throw IrreconcilableSamplesError("fitted drift " + std::to_string(model.alpha()) +
                                     " is outside [0.9, 1.1]");
  }
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!best_mask[i]) continue;
    const double r = model.ToGlobal(samples[i].local_ts) - samples[i].global_start;
    sq += r * r;
    ++n;
  }
  result.model = model;
  result.inliers = std::move(best_mask);
  result.rmse_residual_ms = std::sqrt(sq / static_cast<double>(n));
  return result;
}

StreamRecord StreamRecord::FromNominalRate(std::string id, double fps, std::size_t n_frames) {
  if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
  StreamRecord s;
  s.stream_id = std::move(id);
  s.fps_nominal = fps;
  s.local_ts.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) s.local_ts[i] = static_cast<double>(i) * 1000.0 / fps;
  return s;
}

std::vector<Sample> SamplesFromDecoded(std::span<const DecodedRecord> frames, double fps) {
  std::vector<Sample> out;
  for (const auto& f : frames) {
    if (!f.window) continue;
    out.push_back({f.frame_index * 1000.0 / fps, static_cast<double>(f.window->start_ms)});
  }
  return out;
}

std::vector<double> Retime(const TimeModel& model, const StreamRecord& stream) {
  std::vector<double> out(stream.local_ts.size());
  std::transform(stream.local_ts.begin(), stream.local_ts.end(), out.begin(),
                 [&](double t) { return model.ToGlobal(t); });
  return out;
}

double PairwiseRmse(std::span<const double> a, std::span<const double> b,
                    std::span<const std::pair<std::size_t, std::size_t>> pairing) {
  if (pairing.empty()) throw std::invalid_argument("pairing is empty");
  double sq = 0.0;
  for (const auto& [i, j] : pairing) {
    if (i >= a.size() || j >= b.size()) throw std::out_of_range("pairing index out of range");
    const double d = a[i] - b[j];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(pairing.size()));
}

std::string_view AlignModeName(AlignMode mode) {
  return mode == AlignMode::kNearest ? "nearest" : "interpolate";
}

AlignedStream::AlignedStream(std::string stream_id, std::vector<double> global_ts,
                             const Track2D& track)
    : stream_id_(std::move(stream_id)), global_ts_(std::move(global_ts)) {
  for (std::size_t i = 1; i < global_ts_.size(); ++i) {
    if (!(global_ts_[i] > global_ts_[i - 1])) {
      throw std::invalid_argument("stream " + stream_id_ + ": timestamps must increase");
    }
  }
  for (const auto& o : track.observations) {
    if (o.frame_index < 0 || static_cast<std::size_t>(o.frame_index) >= global_ts_.size()) {
      throw std::invalid_argument("stream " + stream_id_ + ": observation of unknown frame " +
                                  std::to_string(o.frame_index));
    }
    const auto key = std::make_pair(static_cast<std::size_t>(o.frame_index), o.point_id);
    if (!points_.emplace(key, o.pixel).second) {
      throw std::invalid_argument("stream " + stream_id_ + ": duplicate observation of point " +
                                  std::to_string(o.point_id) + " in frame " +
                                  std::to_string(o.frame_index));
    }
  }
}

std::vector<int> AlignedStream::PointIds() const {
  std::vector<int> ids;
  for (const auto& [key, _] : points_) ids.push_back(key.second);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::optional<Vec2> AlignedStream::Point(std::size_t frame, int point_id) const {
  const auto it = points_.find({frame, point_id});
  if (it == points_.end()) return std::nullopt;
  return it->second;
}

std::optional<Vec2> AlignedStream::At(double query_ms, int point_id, AlignMode mode) const {
  if (global_ts_.empty() || query_ms < global_ts_.front() || query_ms > global_ts_.back()) {
    return std::nullopt;
  }
  // First frame at or after the query.
  const std::size_t hi =
      std::lower_bound(global_ts_.begin(), global_ts_.end(), query_ms) - global_ts_.begin();
  if (global_ts_[hi] == query_ms) return Point(hi, point_id);
  const std::size_t lo = hi - 1;
  if (mode == AlignMode::kNearest) {
    const bool pick_lo = query_ms - global_ts_[lo] <= global_ts_[hi] - query_ms;
    return Point(pick_lo ? lo : hi, point_id);
  }
  const auto a = Point(lo, point_id);
  const auto b = Point(hi, point_id);
  if (!a || !b) return std::nullopt;
  const double w = (query_ms - global_ts_[lo]) / (global_ts_[hi] - global_ts_[lo]);
  return Vec2((1.0 - w) * *a + w * *b);
}

std::vector<AlignedPoint> AlignTracks(std::span<const AlignedStream> streams,
                                      std::span<const double> query_times, AlignMode mode) {
  std::vector<AlignedPoint> out;
  for (double q : query_times) {
    for (const auto& s : streams) {
      for (int id : s.PointIds()) {
        if (auto p = s.At(q, id, mode)) out.push_back({q, s.stream_id(), id, *p, mode});
      }
    }
  }
  return out;
}

StreamRecord StreamFromJson(const Json& j) {
  using namespace json_util;
  const std::string id = String(Field(j, "stream_id", ""), "/stream_id");
  const double fps = Number(Field(j, "fps_nominal", ""), "/fps_nominal");
  if (!(fps > 0.0)) throw SchemaError("/fps_nominal", "must be positive");
  const auto n = Integer(Field(j, "n_frames", ""), "/n_frames");
  if (n < 0) throw SchemaError("/n_frames", "must be non-negative");
  StreamRecord s = StreamRecord::FromNominalRate(id, fps, static_cast<std::size_t>(n));
  const Json& samples = Array(Field(j, "samples", ""), "/samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = Numbers(samples[i], Join("/samples", i), 2);
    if (v[1] < 0) throw SchemaError(Join(Join("/samples", i), 1), "global start must be >= 0");
    s.samples.push_back({v[0], v[1]});
  }
  return s;
}

Json StreamToJson(const StreamRecord& stream) {
  Json samples = Json::array();
  for (const auto& s : stream.samples) samples.push_back({s.local_ts, s.global_start});
  return {{"stream_id", stream.stream_id},
          {"fps_nominal", stream.fps_nominal},
          {"n_frames", stream.local_ts.size()},
          {"samples", samples}};
}

Json FitToJson(const std::string& stream_id, const FitResult& fit) {
  return {{"stream_id", stream_id},
          {"alpha", fit.model.alpha()},
          {"beta", fit.model.beta()},
          {"inliers", fit.InlierIndices()},
          {"rmse_residual_ms", fit.rmse_residual_ms}};
}

TimeModel ModelFromJson(const Json& j) {
  using namespace json_util;
  const double alpha = Number(Field(j, "alpha", ""), "/alpha");
  const double beta = Number(Field(j, "beta", ""), "/beta");
  if (!(alpha > 0.0)) throw SchemaError("/alpha", "must be positive");
  return TimeModel(alpha, beta);
}

Track2D ReadTracksCsv(const std::string& file, const std::string& stream_id) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file);
  Track2D track;
  track.stream_id = stream_id;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(file + ":1", "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame_index,point_id,x,y") {
    throw SchemaError(file + ":1", "expected header frame_index,point_id,x,y");
  }
  for (int row = 2; std::getline(in, line); ++row) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    Observation2D o;
    double x, y;
    std::string rest;
    if (!(fields >> o.frame_index >> o.point_id >> x >> y) || (fields >> rest)) {
      throw SchemaError(file + ":" + std::to_string(row), "expected frame_index,point_id,x,y");
    }
    o.pixel = Vec2(x, y);
    track.observations.push_back(o);
  }
  return track;
}

void WriteAlignedCsv(std::span<const AlignedPoint> rows, std::ostream& out) {
  out << "query_ms,stream_id,point_id,x,y,mode\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.query_ms << ',' << r.stream_id << ',' << r.point_id << ',' << r.pixel.x() << ','
        << r.pixel.y() << ',' << AlignModeName(r.mode) << '\n';
  }
}

}  // namespace ledsync

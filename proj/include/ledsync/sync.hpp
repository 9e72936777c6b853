// Robust clock-model fitting, retiming and multi-stream track alignment.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ledsync/board.hpp"
#include "ledsync/clock.hpp"
#include "ledsync/decoder.hpp"
#include "ledsync/json_util.hpp"

namespace ledsync {

class IrreconcilableSamplesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RansacConfig {
  int iterations = 1000;
  double inlier_threshold_ms = 2.0;
};

struct FitResult {
  TimeModel model;
  std::vector<bool> inliers;
  // RMS of the inlier residuals.
  double rmse_residual_ms = 0.0;

  std::vector<std::size_t> InlierIndices() const;
};

// One sample: alpha = 1, beta = global - local. Two or more: RANSAC over
// sample pairs, then least squares on the consensus set. Throws
// std::invalid_argument for no samples, IrreconcilableSamplesError when no
// consistent model exists.
FitResult FitTimeModel(std::span<const Sample> samples, std::uint64_t seed = 0,
                       const RansacConfig& config = {});

// Closed-form least-squares line through the samples.
TimeModel LeastSquaresFit(std::span<const Sample> samples);

struct StreamRecord {
  std::string stream_id;
  double fps_nominal = 30.0;
  std::vector<double> local_ts;  // per frame, strictly increasing
  std::vector<Sample> samples;
  std::optional<FitResult> fitted;

  // Local timestamps from frame_index * 1000 / fps.
  static StreamRecord FromNominalRate(std::string id, double fps, std::size_t n_frames);
};

// Samples (frame_index * 1000 / fps, decoded start) from accepted frames.
std::vector<Sample> SamplesFromDecoded(std::span<const DecodedRecord> frames, double fps);

// Global timestamp of every frame of the stream.
std::vector<double> Retime(const TimeModel& model, const StreamRecord& stream);

// sqrt(mean (a[i] - b[j])^2) over the (i, j) pairs.
double PairwiseRmse(std::span<const double> a, std::span<const double> b,
                    std::span<const std::pair<std::size_t, std::size_t>> pairing);

struct Observation2D {
  int frame_index = 0;
  int point_id = 0;
  Vec2 pixel;
};

struct Track2D {
  std::string stream_id;
  std::vector<Observation2D> observations;
};

enum class AlignMode { kNearest, kInterpolate };

std::string_view AlignModeName(AlignMode mode);

// A retimed stream with its tracked points.
class AlignedStream {
 public:
  // Throws std::invalid_argument for non-increasing timestamps, observations
  // of unknown frames, or duplicate (frame, point) pairs.
  AlignedStream(std::string stream_id, std::vector<double> global_ts, const Track2D& track);

  const std::string& stream_id() const { return stream_id_; }
  std::vector<int> PointIds() const;

  // Absent when the query is outside the stream's span or the point is
  // missing in a frame that is needed.
  std::optional<Vec2> At(double query_ms, int point_id, AlignMode mode) const;

 private:
  std::optional<Vec2> Point(std::size_t frame, int point_id) const;

  std::string stream_id_;
  std::vector<double> global_ts_;
  std::map<std::pair<std::size_t, int>, Vec2> points_;
};

struct AlignedPoint {
  double query_ms = 0.0;
  std::string stream_id;
  int point_id = 0;
  Vec2 pixel;
  AlignMode mode = AlignMode::kNearest;
};

// Every (query, stream, point) combination that has a value.
std::vector<AlignedPoint> AlignTracks(std::span<const AlignedStream> streams,
                                      std::span<const double> query_times, AlignMode mode);

// Stream manifest: {stream_id, fps_nominal, n_frames, samples: [[local, global], ...]}
StreamRecord StreamFromJson(const Json& j);
Json StreamToJson(const StreamRecord& stream);
// {stream_id, alpha, beta, inliers: [indices], rmse_residual_ms}
Json FitToJson(const std::string& stream_id, const FitResult& fit);
TimeModel ModelFromJson(const Json& j);

// CSV: frame_index,point_id,x,y (header required).
Track2D ReadTracksCsv(const std::string& file, const std::string& stream_id);
void WriteAlignedCsv(std::span<const AlignedPoint> rows, std::ostream& out);

}  // namespace ledsync

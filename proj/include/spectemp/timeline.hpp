#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spectemp/common.hpp"

namespace spectemp {

// Closed time interval in seconds; the unit of temporal evidence.
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;

  Segment() = default;
  Segment(double start, double end) : start_s(start), end_s(end) {
    if (!(start >= 0.0) || !(start <= end))
      throw Error("invalid segment (" + fmt_seconds(start) + ", " + fmt_seconds(end) + ")");
  }
  double length() const { return end_s - start_s; }
  bool contains(double t) const { return t >= start_s && t <= end_s; }
};

struct FrameRef {
  double timestamp_s = 0.0;
  std::vector<float> features;  // unit L2 norm, dimension d
};

// An abstract video: duration plus per-timestamp unit-norm feature vectors.
// Immutable after construction; safe for concurrent reads.
class Timeline {
 public:
  // frames: (timestamp, feature) pairs, strictly increasing timestamps in
  // [0, duration_s], all features dimension d with L2 norm within 1e-6 of 1.
  Timeline(double duration_s, double native_fps,
           std::vector<std::pair<double, std::vector<float>>> frames,
           std::map<std::string, std::string> metadata = {});

  double duration_s() const { return duration_s_; }
  double native_fps() const { return native_fps_; }
  std::size_t dim() const { return dim_; }
  std::size_t frame_count() const { return timestamps_.size(); }
  const std::vector<double>& timestamps() const { return timestamps_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // Feature row for the i-th stored frame (row-major storage).
  const float* features_at(std::size_t i) const { return features_.data() + i * dim_; }

  FrameRef frame(std::size_t i) const;

  // Nearest stored frame to t; ties broken toward the earlier frame.
  std::size_t nearest_index(double t) const;
  FrameRef nearest_frame(double t) const { return frame(nearest_index(t)); }

  // min(k, frame count) refs at centered-grid targets (i+0.5)*duration/k,
  // snapped to nearest stored timestamps; sorted, deduplicated.
  std::vector<FrameRef> uniform_sample(int k) const;

  // Refs on the grid {start, start+1/fps, ...} inside seg clamped to
  // [0, duration], end included when it lies on the grid (1e-9 tolerance);
  // snapped, sorted, deduplicated. Fully out-of-range seg throws.
  std::vector<FrameRef> dense_sample(const Segment& seg, double fps) const;

  void save(std::ostream& out) const;
  static Timeline load(std::istream& in);
  void save_file(const std::string& path) const;
  static Timeline load_file(const std::string& path);

 private:
  double duration_s_;
  double native_fps_;
  std::size_t dim_;
  std::vector<double> timestamps_;
  std::vector<float> features_;  // row-major, frame_count x dim
  std::map<std::string, std::string> metadata_;
};

// Worst-case distinct-frame exposure of the target model:
// init_k + per_iter * t_max.
long long frame_budget(long long init_k, long long per_iter, long long t_max);

}  // namespace spectemp

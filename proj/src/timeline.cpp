#include "spectemp/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace spectemp {

Timeline::Timeline(double duration_s, double native_fps,
                   std::vector<std::pair<double, std::vector<float>>> frames,
                   std::map<std::string, std::string> metadata)
    : duration_s_(duration_s), native_fps_(native_fps), metadata_(std::move(metadata)) {
  if (!(duration_s >= 0.0)) throw Error("duration_s must be nonnegative");
  if (!(native_fps > 0.0)) throw Error("native_fps must be positive");
  dim_ = frames.empty() ? 0 : frames.front().second.size();
  timestamps_.reserve(frames.size());
  features_.reserve(frames.size() * dim_);
  double prev = -1.0;
  for (auto& [t, v] : frames) {
    if (t < 0.0 || t > duration_s_)
      throw Error("timestamp " + fmt_seconds(t) + " outside [0, duration]");
    if (t <= prev) throw Error("timestamps must be strictly increasing");
    prev = t;
    if (v.size() != dim_) throw DimensionMismatch("inconsistent feature dimension");
    double norm2 = 0.0;
    for (float x : v) norm2 += static_cast<double>(x) * x;
    if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-6)
      throw Error("feature vector at t=" + fmt_seconds(t) + " is not unit-norm");
    timestamps_.push_back(t);
    features_.insert(features_.end(), v.begin(), v.end());
  }
}

FrameRef Timeline::frame(std::size_t i) const {
  FrameRef f;
  f.timestamp_s = timestamps_[i];
  f.features.assign(features_at(i), features_at(i) + dim_);
  return f;
}

std::size_t Timeline::nearest_index(double t) const {
  if (timestamps_.empty()) throw EmptyTimeline();
  auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), t);
  if (it == timestamps_.begin()) return 0;
  if (it == timestamps_.end()) return timestamps_.size() - 1;
  std::size_t hi = static_cast<std::size_t>(it - timestamps_.begin());
  std::size_t lo = hi - 1;
  // ties go to the earlier frame
  return (t - timestamps_[lo] <= timestamps_[hi] - t) ? lo : hi;
}

std::vector<FrameRef> Timeline::uniform_sample(int k) const {
  if (timestamps_.empty()) throw EmptyTimeline();
  if (k < 1) throw Error("uniform_sample: k must be >= 1");
  std::vector<std::size_t> picked;
  picked.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double target = (i + 0.5) * duration_s_ / k;
    picked.push_back(nearest_index(target));
  }
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  std::vector<FrameRef> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(frame(i));
  return out;
}

std::vector<FrameRef> Timeline::dense_sample(const Segment& seg, double fps) const {
  if (timestamps_.empty()) throw EmptyTimeline();
  if (!(fps > 0.0)) throw Error("dense_sample: fps must be positive");
  if (seg.end_s < 0.0 || seg.start_s > duration_s_)
    throw SegmentOutOfRange("segment (" + fmt_seconds(seg.start_s) + ", " +
                            fmt_seconds(seg.end_s) + ") outside [0, " +
                            fmt_seconds(duration_s_) + "]");
  double start = std::max(seg.start_s, 0.0);
  double end = std::min(seg.end_s, duration_s_);
  std::vector<std::size_t> picked;
  long long steps = static_cast<long long>(std::floor((end - start) * fps + 1e-9));
  for (long long i = 0; i <= steps; ++i) {
    double t = start + static_cast<double>(i) / fps;
    picked.push_back(nearest_index(t));
  }
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  std::vector<FrameRef> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(frame(i));
  return out;
}

void Timeline::save(std::ostream& out) const {
  out.precision(9);  // float round-trip
  out << fmt_seconds(duration_s_) << '\t' << fmt_seconds(native_fps_) << '\t' << dim_ << '\n';
  for (std::size_t i = 0; i < timestamps_.size(); ++i) {
    out << fmt_seconds(timestamps_[i]) << '\t';
    const float* row = features_at(i);
    for (std::size_t j = 0; j < dim_; ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
}

Timeline Timeline::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedRecord("timeline file: missing header");
  std::istringstream hdr(line);
  double duration = 0.0, fps = 0.0;
  std::size_t dim = 0;
  if (!(hdr >> duration >> fps >> dim)) throw MalformedRecord("timeline file: bad header");
  std::vector<std::pair<double, std::vector<float>>> frames;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw MalformedRecord("timeline file: missing tab");
    double t = std::stod(line.substr(0, tab));
    std::vector<float> v;
    v.reserve(dim);
    std::istringstream vals(line.substr(tab + 1));
    std::string tok;
    while (std::getline(vals, tok, ',')) v.push_back(std::stof(tok));
    if (v.size() != dim) throw MalformedRecord("timeline file: wrong vector length");
    frames.emplace_back(t, std::move(v));
  }
  return Timeline(duration, fps, std::move(frames));
}

void Timeline::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for write: " + path);
  save(out);
}

Timeline Timeline::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  return load(in);
}

long long frame_budget(long long init_k, long long per_iter, long long t_max) {
  if (init_k < 0 || per_iter < 0 || t_max < 0)
    throw Error("frame_budget: arguments must be nonnegative");
  return init_k + per_iter * t_max;
}

}  // namespace spectemp

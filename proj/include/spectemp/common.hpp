#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spectemp {

// Base for all engine errors; specific types carry the contract name.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyTimeline : Error {
  EmptyTimeline() : Error("timeline has no frames") {}
};
struct SegmentOutOfRange : Error {
  explicit SegmentOutOfRange(const std::string& what) : Error(what) {}
};
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};
struct TemplateFieldMissing : Error {
  explicit TemplateFieldMissing(const std::string& field)
      : Error("prompt template field missing: " + field) {}
};
struct EmptyInput : Error {
  explicit EmptyInput(const std::string& what) : Error(what) {}
};
struct UndefinedIoU : Error {
  UndefinedIoU() : Error("IoU undefined: both interval sets empty") {}
};
struct GroupTooSmall : Error {
  explicit GroupTooSmall(const std::string& what) : Error(what) {}
};
struct GroupError : Error {
  explicit GroupError(const std::string& what) : Error(what) {}
};
struct MalformedRecord : Error {
  explicit MalformedRecord(const std::string& what) : Error(what) {}
};
struct AlignmentError : Error {
  explicit AlignmentError(const std::string& what) : Error(what) {}
};
struct RemoteUnavailable : Error {
  explicit RemoteUnavailable(const std::string& what) : Error(what) {}
};
struct RemoteRejected : Error {
  RemoteRejected(int status, const std::string& body)
      : Error("remote rejected request: HTTP " + std::to_string(status)),
        status(status),
        body(body) {}
  int status;
  std::string body;
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// splitmix64: tiny, platform-stable PRNG step used for seed splitting and
// hash expansion. Output for a given state is identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over bytes; stable across platforms.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derive a component seed from the root seed so every report is
// reproducible end-to-end from a single --seed.
inline std::uint64_t derive_seed(std::uint64_t root, const std::string& component) {
  std::uint64_t s = fnv1a(component, root ^ 0xcbf29ce484222325ULL);
  return splitmix64(s);
}

// Formats a timestamp the way <segment> intervals print: integral values
// without a decimal point ("4"), fractional values shortest ("4.25").
std::string fmt_seconds(double v);

// Formats a timestamp the way <frame> lists print: always at least one
// decimal digit ("4.0", "4.25").
std::string fmt_frame_ts(double v);

}  // namespace spectemp

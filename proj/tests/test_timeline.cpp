#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spectemp/embedding.hpp"
#include "spectemp/timeline.hpp"

using namespace spectemp;

namespace {

// dense 1/step grid over [0, duration] with hash-embedded features
Timeline make_grid(double duration, double step = 1.0, std::size_t d = 8) {
  std::vector<std::pair<double, std::vector<float>>> frames;
  for (double t = 0.0; t <= duration + 1e-9; t += step)
    frames.emplace_back(t, hash_embed("t" + std::to_string(t), d, 1));
  return Timeline(duration, 1.0 / step, std::move(frames));
}

std::vector<double> ts_of(const std::vector<FrameRef>& refs) {
  std::vector<double> out;
  for (const auto& r : refs) out.push_back(r.timestamp_s);
  return out;
}

}  // namespace

TEST_CASE("uniform_sample centered grid") {
  SUBCASE("k=1 picks the midpoint") {
    auto t = make_grid(10);
    CHECK(ts_of(t.uniform_sample(1)) == std::vector<double>{5.0});
  }
  SUBCASE("k=4 on an 8s grid") {
    auto t = make_grid(8);
    CHECK(ts_of(t.uniform_sample(4)) == std::vector<double>{1.0, 3.0, 5.0, 7.0});
  }
  SUBCASE("k=10 on a 10s grid covers [0,10] with distinct stamps") {
    auto t = make_grid(10);
    auto ts = ts_of(t.uniform_sample(10));
    CHECK(ts.size() == 10);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] > ts[i - 1]);
    CHECK(ts.front() >= 0.0);
    CHECK(ts.back() <= 10.0);
  }
  SUBCASE("k larger than frame count dedupes") {
    auto t = make_grid(3);  // 4 frames
    auto ts = ts_of(t.uniform_sample(100));
    CHECK(ts.size() == 4);
  }
  SUBCASE("empty timeline") {
    Timeline empty(5.0, 1.0, {});
    CHECK_THROWS_AS((void)empty.uniform_sample(3), EmptyTimeline);
  }
}

TEST_CASE("dense_sample grid enumeration") {
  auto t = make_grid(10);
  SUBCASE("unit segment at 1 fps") {
    CHECK(ts_of(t.dense_sample(Segment(4, 5), 1.0)) == std::vector<double>{4.0, 5.0});
  }
  SUBCASE("degenerate segment") {
    CHECK(ts_of(t.dense_sample(Segment(3, 3), 1.0)) == std::vector<double>{3.0});
  }
  SUBCASE("2 fps on a half-second grid") {
    auto half = make_grid(10, 0.5);
    CHECK(ts_of(half.dense_sample(Segment(2, 4), 2.0)) ==
          std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0});
  }
  SUBCASE("clamping keeps partially out-of-range segments") {
    auto ts = ts_of(t.dense_sample(Segment(8, 15), 1.0));
    CHECK(ts == std::vector<double>{8.0, 9.0, 10.0});
  }
  SUBCASE("fully out-of-range throws") {
    CHECK_THROWS_AS((void)t.dense_sample(Segment(11, 15), 1.0), SegmentOutOfRange);
  }
  SUBCASE("output is a subset of stored timestamps within the clamped segment") {
    auto refs = t.dense_sample(Segment(1.3, 6.7), 1.0);
    for (const auto& r : refs) {
      CHECK(r.timestamp_s >= 1.3 - 0.5);
      CHECK(r.timestamp_s <= 6.7 + 0.5);
      CHECK(r.timestamp_s == std::floor(r.timestamp_s));
    }
  }
}

TEST_CASE("frame_budget arithmetic") {
  CHECK(frame_budget(10, 2, 3) == 16);
  CHECK(frame_budget(32, 8, 4) == 64);
  CHECK(frame_budget(0, 0, 0) == 0);
  CHECK_THROWS(frame_budget(-1, 0, 0));

  // monotone nondecreasing in each argument
  std::uint64_t state = 3;
  for (int i = 0; i < 200; ++i) {
    long long a = static_cast<long long>(splitmix64(state) % 50);
    long long b = static_cast<long long>(splitmix64(state) % 50);
    long long c = static_cast<long long>(splitmix64(state) % 10);
    CHECK(frame_budget(a + 1, b, c) >= frame_budget(a, b, c));
    CHECK(frame_budget(a, b + 1, c) >= frame_budget(a, b, c));
    CHECK(frame_budget(a, b, c + 1) >= frame_budget(a, b, c));
  }
}

TEST_CASE("construction invariants") {
  std::vector<float> unit = {1.0f, 0.0f};
  std::vector<float> bad = {1.0f, 1.0f};
  CHECK_THROWS(Timeline(5.0, 1.0, {{0.0, unit}, {6.0, unit}}));   // beyond duration
  CHECK_THROWS(Timeline(5.0, 1.0, {{1.0, unit}, {1.0, unit}}));   // not increasing
  CHECK_THROWS(Timeline(5.0, 1.0, {{0.0, bad}}));                 // not unit norm
  CHECK_THROWS(Timeline(5.0, 1.0, {{0.0, unit}, {1.0, {1.0f}}})); // dim mismatch
}

TEST_CASE("save/load round trip") {
  auto t = make_grid(6, 1.0, 5);
  std::stringstream buf;
  t.save(buf);
  Timeline back = Timeline::load(buf);
  REQUIRE(back.frame_count() == t.frame_count());
  CHECK(back.duration_s() == t.duration_s());
  CHECK(back.dim() == t.dim());
  for (std::size_t i = 0; i < t.frame_count(); ++i) {
    CHECK(back.timestamps()[i] == t.timestamps()[i]);
    for (std::size_t j = 0; j < t.dim(); ++j)
      CHECK(back.features_at(i)[j] == doctest::Approx(t.features_at(i)[j]).epsilon(1e-6));
  }
}

TEST_CASE("nearest snapping ties break toward the earlier frame") {
  auto t = make_grid(4);
  CHECK(t.nearest_frame(2.5).timestamp_s == 2.0);
  CHECK(t.nearest_frame(2.51).timestamp_s == 3.0);
}

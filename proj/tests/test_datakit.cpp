#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "spectemp/datakit.hpp"
#include "spectemp/rewards.hpp"
#include "spectemp/simd.hpp"

using namespace spectemp;

namespace {

bool has_code(const ValidationReport& rep, FailureCode code) {
  return std::any_of(rep.failures.begin(), rep.failures.end(),
                     [&](const ValidationFailure& f) { return f.code == code; });
}

TrajectoryRecord clean_record() {
  TrajectoryRecord rec;
  rec.id = "rec-1";
  rec.question = "what happens at the end?";
  rec.gold_answer = "metal tray";
  rec.gold_spans = {Segment(4, 6)};
  rec.gold_frames = {5.0};
  rec.source = "synthetic";
  rec.duration_s = 30.0;
  rec.duration_class = classify_duration(rec.duration_s);

  TrajectoryRound r0;
  r0.think = "inspect the highlighted window";
  r0.segment = Segment(4, 6);
  r0.draft_frames = {4.0, 5.0};
  TrajectoryRound r1;
  r1.think = "evidence is sufficient";
  r1.answer = "metal tray";
  rec.rounds = {r0, r1};
  return rec;
}

}  // namespace

TEST_CASE("duration classes split at one and ten minutes") {
  CHECK(classify_duration(0.0) == DurationClass::Short);
  CHECK(classify_duration(59.9) == DurationClass::Short);
  CHECK(classify_duration(60.0) == DurationClass::Medium);
  CHECK(classify_duration(600.0) == DurationClass::Medium);
  CHECK(classify_duration(600.1) == DurationClass::Long);
}

TEST_CASE("trajectory JSONL round trip") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "spectemp_test_traj.jsonl";
  TrajectoryRecord rec = clean_record();
  rec.options = {"wooden bowl", "metal tray"};
  save_trajectories(path.string(), {rec, clean_record()});
  auto back = load_trajectories(path.string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == rec.id);
  CHECK(back[0].options == rec.options);
  CHECK(back[0].gold_spans.size() == 1);
  CHECK(back[0].gold_spans[0].start_s == 4.0);
  CHECK(back[0].gold_spans[0].end_s == 6.0);
  CHECK(back[0].rounds.size() == 2);
  CHECK(back[0].rounds[0].draft_frames == rec.rounds[0].draft_frames);
  CHECK(back[0].rounds[1].answer == rec.rounds[1].answer);
  CHECK(back[0].duration_class == DurationClass::Short);
  // serialize -> parse -> serialize is a fixed point
  CHECK(trajectory_to_json(back[0]) == trajectory_to_json(rec));
  fs::remove(path);
}

TEST_CASE("trajectory loader skips comments and rejects malformed lines") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "spectemp_test_traj_bad.jsonl";
  {
    std::ofstream out(path);
    out << "# comment\n" << trajectory_to_json(clean_record()) << "\n";
  }
  CHECK(load_trajectories(path.string()).size() == 1);
  {
    std::ofstream out(path);
    out << "{\"id\": \"only-id\"}\n";
  }
  CHECK_THROWS_AS((void)load_trajectories(path.string()), MalformedRecord);
  fs::remove(path);
}

TEST_CASE("trajectory validation") {
  const double threshold = 0.5;
  SUBCASE("clean record passes") {
    auto rep = validate_trajectory(clean_record(), threshold);
    CHECK(rep.pass);
    CHECK(rep.failures.empty());
  }
  SUBCASE("shifted segment fails with low IoU") {
    auto rec = clean_record();
    rec.rounds[0].segment = Segment(14, 16);
    rec.rounds[0].draft_frames = {14.0, 15.0};
    auto rep = validate_trajectory(rec, threshold);
    CHECK_FALSE(rep.pass);
    CHECK(has_code(rep, FailureCode::LowIou));
    CHECK_FALSE(has_code(rep, FailureCode::FrameOutsideSegment));
  }
  SUBCASE("draft frame outside its segment") {
    auto rec = clean_record();
    rec.rounds[0].draft_frames = {4.0, 9.0};
    auto rep = validate_trajectory(rec, threshold);
    CHECK_FALSE(rep.pass);
    CHECK(has_code(rep, FailureCode::FrameOutsideSegment));
  }
  SUBCASE("wrong final answer") {
    auto rec = clean_record();
    rec.rounds[1].answer = "plastic cup";
    auto rep = validate_trajectory(rec, threshold);
    CHECK_FALSE(rep.pass);
    CHECK(has_code(rep, FailureCode::AnswerMismatch));
  }
  SUBCASE("structural faults are grammar failures") {
    auto rec = clean_record();
    rec.rounds[1].answer.reset();
    rec.rounds[1].segment = Segment(4, 6);
    CHECK(has_code(validate_trajectory(rec, threshold), FailureCode::BadGrammar));

    rec = clean_record();
    rec.rounds[0].segment.reset();
    CHECK(has_code(validate_trajectory(rec, threshold), FailureCode::BadGrammar));

    rec = clean_record();
    rec.rounds[0].answer = "early";  // both terminals on one round
    CHECK(has_code(validate_trajectory(rec, threshold), FailureCode::BadGrammar));
  }
  SUBCASE("adding faults never turns a failing record into a passing one") {
    auto rec = clean_record();
    rec.rounds[0].segment = Segment(14, 16);
    rec.rounds[0].draft_frames = {14.0, 20.0};
    rec.rounds[1].answer = "plastic cup";
    auto rep = validate_trajectory(rec, 0.5);
    CHECK_FALSE(rep.pass);
    CHECK(rep.failures.size() >= 3);
  }
  SUBCASE("threshold is monotone") {
    auto rec = clean_record();
    rec.rounds[0].segment = Segment(4, 8);  // IoU 0.5 against (4, 6)
    CHECK(validate_trajectory(rec, 0.4).pass);
    CHECK_FALSE(validate_trajectory(rec, 0.6).pass);
  }
}

TEST_CASE("records built from oracle sessions validate cleanly") {
  PopulationConfig pc;
  pc.n = 12;
  pc.seed = 9;
  auto tasks = synth_population(pc);
  SessionConfig cfg;
  cfg.cost = CostModel::defaults();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    OracleTargetModel target(tasks[i].gold);
    OracleDraftModel draft(tasks[i].gold, cfg.per_iter_frames);
    SessionResult res = run_session(cfg, target, draft, tasks[i].timeline, tasks[i].question);
    if (res.answer != tasks[i].gold.answer) continue;  // forced-final misses stay out
    auto rec = record_from_session("t" + std::to_string(i), tasks[i].question, tasks[i].gold,
                                   res, tasks[i].timeline.duration_s(), "synthetic");
    auto rep = validate_trajectory(rec, 0.3);
    CAPTURE(i);
    CHECK(rep.pass);
  }
}

TEST_CASE("needle-in-haystack synthesis") {
  NiahSpec spec;
  spec.haystack_frames = 400;
  spec.depth_fraction = 0.25;
  spec.needle_frames = 1;
  spec.distractor_seed = 3;
  Task task = synth_niah(spec, 32, 11);

  CHECK(task.timeline.frame_count() == 400);
  CHECK(task.timeline.duration_s() == 399.0);
  REQUIRE(task.gold.evidence_frames.size() == 1);
  double needle_ts = task.gold.evidence_frames[0];
  CHECK(needle_ts == std::llround(0.25 * 399));

  HashEmbeddingProvider provider(32, 11);
  std::vector<float> q = provider.embed_text(task.question);
  for (std::size_t i = 0; i < task.timeline.frame_count(); ++i) {
    double ts = task.timeline.timestamps()[i];
    float sim = simd::dot_f32(std::span<const float>(q),
                              std::span<const float>(task.timeline.features_at(i), 32));
    if (ts == needle_ts)
      CHECK(sim >= 0.99f);
    else
      CHECK(std::fabs(sim) < 0.9f);  // random 32-dim unit vectors stay well below the needle
  }

  SUBCASE("deterministic for a fixed seed") {
    Task again = synth_niah(spec, 32, 11);
    CHECK(again.question == task.question);
    CHECK(again.timeline.timestamps() == task.timeline.timestamps());
    for (std::size_t i = 0; i < 400; ++i)
      for (std::size_t j = 0; j < 32; ++j)
        CHECK(again.timeline.features_at(i)[j] == task.timeline.features_at(i)[j]);
  }
  SUBCASE("depth endpoints") {
    spec.depth_fraction = 0.0;
    CHECK(synth_niah(spec, 16, 1).gold.evidence_frames[0] == 0.0);
    spec.depth_fraction = 1.0;
    CHECK(synth_niah(spec, 16, 1).gold.evidence_frames[0] == 399.0);
  }
  SUBCASE("invalid specs are rejected") {
    NiahSpec bad = spec;
    bad.haystack_frames = 0;
    CHECK_THROWS(synth_niah(bad, 16, 1));
    bad = spec;
    bad.depth_fraction = 1.5;
    CHECK_THROWS(synth_niah(bad, 16, 1));
    bad = spec;
    bad.needle_frames = 0;
    CHECK_THROWS(synth_niah(bad, 16, 1));
  }
}

TEST_CASE("population synthesis") {
  PopulationConfig cfg;
  cfg.n = 200;
  cfg.seed = 4;
  auto tasks = synth_population(cfg);
  REQUIRE(tasks.size() == 200);

  int n_short = 0, n_medium = 0, n_long = 0;
  for (const Task& t : tasks) {
    switch (classify_duration(t.timeline.duration_s())) {
      case DurationClass::Short: ++n_short; break;
      case DurationClass::Medium: ++n_medium; break;
      case DurationClass::Long: ++n_long; break;
    }
    REQUIRE(t.gold.evidence_spans.size() == 1);
    CHECK(t.gold.evidence_spans[0].end_s <= t.timeline.duration_s());
    CHECK(t.gold.reveal_round <= cfg.max_reveal_round);
    CHECK_NOTHROW(t.gold.validate());
  }
  CHECK(std::abs(n_short - std::lround(cfg.short_frac * cfg.n)) <= 1);
  CHECK(std::abs(n_medium - std::lround(cfg.medium_frac * cfg.n)) <= 1);
  CHECK(std::abs(n_long - std::lround(cfg.long_frac * cfg.n)) <= 1);

  SUBCASE("the planted evidence frame carries the question embedding") {
    HashEmbeddingProvider provider(cfg.dim, cfg.seed);
    for (int i : {0, 57, 199}) {
      const Task& t = tasks[static_cast<std::size_t>(i)];
      std::vector<float> q = provider.embed_text(t.question);
      std::size_t idx = t.timeline.nearest_index(t.gold.evidence_frames[0]);
      float sim = simd::dot_f32(std::span<const float>(q),
                                std::span<const float>(t.timeline.features_at(idx), cfg.dim));
      CHECK(sim >= 0.99f);
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    auto again = synth_population(cfg);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      CHECK(again[i].question == tasks[i].question);
      CHECK(again[i].timeline.duration_s() == tasks[i].timeline.duration_s());
      CHECK(again[i].gold.reveal_round == tasks[i].gold.reveal_round);
    }
  }
}

TEST_CASE("efficiency arithmetic") {
  CHECK(efficiency_score(57.5, 2.3) == doctest::Approx(25.0));
  CHECK(efficiency_score(54.1, 3.1) == doctest::Approx(17.5));
  CHECK(efficiency_score(40.3, 1.7) == doctest::Approx(23.7));
  CHECK_THROWS(efficiency_score(50.0, 0.0));
}

TEST_CASE("metric aggregation") {
  GoldSpec g1, g2;
  g1.answer = "a";
  g2.answer = "b";
  SessionResult r1, r2;
  r1.answer = "a";
  r1.latency.total = 2.0;
  r1.total_target_frames = 12;
  r1.rounds_used = 1;
  r2.answer = "wrong";
  r2.latency.total = 4.0;
  r2.total_target_frames = 16;
  r2.rounds_used = 3;

  MetricsReport m = aggregate_metrics({r1, r2}, {g1, g2});
  CHECK(m.accuracy_pct == doctest::Approx(50.0));
  CHECK(m.mean_latency_s == doctest::Approx(3.0));
  CHECK(m.mean_frames == doctest::Approx(14.0));
  CHECK(m.mean_iterations == doctest::Approx(2.0));
  CHECK(m.efficiency == doctest::Approx(efficiency_score(50.0, 3.0)));

  CHECK_THROWS_AS((void)aggregate_metrics({r1}, {g1, g2}), AlignmentError);
  CHECK_THROWS_AS((void)aggregate_metrics({}, {}), EmptyInput);
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectemp/adapters.hpp"
#include "spectemp/embedding.hpp"
#include "spectemp/orchestrator.hpp"
#include "spectemp/timeline.hpp"

namespace spectemp {

enum class DurationClass { Short, Medium, Long };  // <60s, 60-600s, >600s

std::string duration_class_name(DurationClass c);
DurationClass classify_duration(double duration_s);

// One training round stored in canonical grammar text.
struct TrajectoryRound {
  std::string think;
  std::optional<Segment> segment;     // earlier rounds
  std::optional<std::string> answer;  // last round only
  std::vector<double> draft_frames;   // selected by the draft this round
};

// SpecTemp-80K-style training sample with dual-level gold annotations.
struct TrajectoryRecord {
  std::string id;
  std::string question;
  std::vector<std::string> options;
  std::string gold_answer;
  std::vector<Segment> gold_spans;
  std::vector<double> gold_frames;
  std::vector<TrajectoryRound> rounds;
  std::string source;
  double duration_s = 0.0;
  DurationClass duration_class = DurationClass::Short;
};

enum class FailureCode { LowIou, FrameOutsideSegment, BadGrammar, AnswerMismatch };

std::string failure_code_name(FailureCode c);

struct ValidationFailure {
  int round = 0;
  FailureCode code = FailureCode::BadGrammar;
};

struct ValidationReport {
  std::string record_id;
  bool pass = false;
  std::vector<ValidationFailure> failures;
};

// Checks every round's segment against the gold spans (IoU >= threshold),
// every draft frame against its round's segment, grammar validity of the
// serialized rounds, and final answer equality.
ValidationReport validate_trajectory(const TrajectoryRecord& rec, double iou_threshold);

// JSONL serialization; write-then-read is the identity.
std::string trajectory_to_json(const TrajectoryRecord& rec);
TrajectoryRecord trajectory_from_json(const std::string& line);
std::vector<TrajectoryRecord> load_trajectories(const std::string& path);
void save_trajectories(const std::string& path, const std::vector<TrajectoryRecord>& recs);

// Builds a replayable record from a finished session.
TrajectoryRecord record_from_session(const std::string& id, const std::string& question,
                                     const GoldSpec& gold, const SessionResult& result,
                                     double duration_s, const std::string& source);

// V-NIAH generator spec: a visually unique needle planted in a distractor
// haystack at a given depth fraction.
struct NiahSpec {
  int haystack_frames = 0;
  double depth_fraction = 0.0;  // [0,1]
  int needle_frames = 1;
  std::uint64_t distractor_seed = 0;
};

struct Task {
  Timeline timeline;
  std::string question;
  GoldSpec gold;
};

// Haystack of hash-embedded distractors with a needle span whose vectors
// equal the question embedding; gold points at the needle, reveal_round 1.
Task synth_niah(const NiahSpec& spec, std::size_t d, std::uint64_t seed);

struct PopulationConfig {
  int n = 200;
  double short_frac = 0.324;   // <1 min
  double medium_frac = 0.518;  // 1-10 min
  double long_frac = 0.158;    // >10 min
  std::size_t dim = 32;
  int max_reveal_round = 3;    // reveal rounds cycle over [0, max]
  std::uint64_t seed = 0;
};

// Reproducible desk-scale task population with planted evidence spans.
std::vector<Task> synth_population(const PopulationConfig& cfg);

struct MetricsReport {
  double accuracy_pct = 0.0;
  double mean_latency_s = 0.0;
  double mean_frames = 0.0;
  double mean_iterations = 0.0;
  double efficiency = 0.0;  // accuracy / latency, rounded to 1 decimal
};

// Efficiency = accuracy / latency; inputs aligned by index.
MetricsReport aggregate_metrics(const std::vector<SessionResult>& results,
                                const std::vector<GoldSpec>& golds);

// Table-4-style arithmetic on already-aggregated numbers.
double efficiency_score(double accuracy_pct, double latency_s);

}  // namespace spectemp

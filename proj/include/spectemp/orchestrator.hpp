#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectemp/adapters.hpp"
#include "spectemp/protocol.hpp"
#include "spectemp/timeline.hpp"

namespace spectemp {

// Linear per-stage coefficients (seconds). Draft coefficients must not
// exceed target coefficients elementwise.
struct StageCoefficients {
  double vision_encode_per_frame = 0.0;
  double projector_per_frame = 0.0;
  double prefill_per_token = 0.0;
  double decode_per_token = 0.0;
};

struct CostModel {
  StageCoefficients target;
  StageCoefficients draft;
  int tokens_per_frame = 128;

  void validate() const;
  // Defaults calibrated so a 16-frame single-pass target session lands near
  // 2.1 s and the dual-model pipeline near 1.8 s; overridable everywhere.
  static CostModel defaults();
};

struct StageSeconds {
  double vision = 0.0;
  double projector = 0.0;
  double prefill = 0.0;
  double decode = 0.0;
  double total() const { return vision + projector + prefill + decode; }
};

struct LatencyBreakdown {
  StageSeconds target;
  StageSeconds draft;
  double total = 0.0;  // sum of all stages
};

// One target invocation plus (for iterations) the draft step before it.
struct RoundRecord {
  int round = 0;  // 0 = initialization; iterations count from 1
  std::string think;
  std::optional<Segment> segment;
  std::optional<std::string> answer;
  bool recovered = false;  // malformed target output replaced by whole-timeline request
  int dense_frame_count = 0;
  std::vector<double> proposed_frames;   // sparse frames shown to the target
  int new_target_frames = 0;             // frames not previously in target context
  int target_prompt_tokens = 0;
  int target_decode_tokens = 0;
  int draft_prompt_tokens = 0;
  int draft_decode_tokens = 0;
  StageSeconds target_time;
  StageSeconds draft_time;
};

enum class TerminationKind { InitAnswer, RoundAnswer, ForcedFinal };

std::string termination_name(TerminationKind k);

struct SessionResult {
  std::string answer;
  int rounds_used = 0;
  int total_target_frames = 0;
  int total_draft_frames = 0;
  LatencyBreakdown latency;
  std::vector<RoundRecord> rounds;
  TerminationKind terminated_by = TerminationKind::ForcedFinal;
  // raw model texts per target invocation / draft invocation, for scoring
  std::vector<std::string> target_texts;
  std::vector<std::string> draft_texts;
};

struct SessionConfig {
  int init_frames = 10;
  int per_iter_frames = 2;
  int t_max = 3;
  double dense_fps = 1.0;
  CostModel cost;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SessionAborted : Error {
  SessionAborted(const std::string& what, SessionResult partial)
      : Error(what), partial(std::move(partial)) {}
  SessionResult partial;
};

// Executes the speculation/verification loop: uniform init, bounded rounds
// of dense sampling + draft proposal + target verification, early
// termination on answer, forced final answer otherwise. Malformed target
// output is recovered as a whole-timeline segment request.
SessionResult run_session(const SessionConfig& cfg, ModelInterface& target,
                          ModelInterface& draft, const Timeline& timeline,
                          const std::string& question);

// Additive per-stage accounting over recorded rounds: draft stages charged
// at draft coefficients over dense frame counts, target stages at target
// coefficients over sparse frame counts plus text tokens.
LatencyBreakdown simulate_latency(const std::vector<RoundRecord>& rounds,
                                  const CostModel& cm);

// The "large only" variant: the dense-ingesting role priced at target
// coefficients. Strictly slower than the pipeline whenever any round
// densely sampled at least one frame and draft coefficients are strictly
// below target coefficients.
LatencyBreakdown simulate_large_only_latency(const std::vector<RoundRecord>& rounds,
                                             const CostModel& cm);

double mean_iterations(const std::vector<SessionResult>& results);

}  // namespace spectemp

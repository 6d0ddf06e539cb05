#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spectemp/timeline.hpp"

namespace spectemp {

// Violation codes shared by both parsers. Parsing never throws on untrusted
// model output; every failure becomes a code here so R_format can grade it.
enum class Violation {
  MissingThink,
  BothTerminals,
  NoTerminal,
  MalformedInterval,
  SegmentOrder,
  TrailingGarbage,
  MissingFrameTag,
  EmptyList,
  NonNumeric,
  NotIncreasing,
  OverLimit,
};

std::string violation_name(Violation v);

// Parsed target output: think text plus exactly one terminal.
struct TargetDecision {
  std::string think;
  std::optional<Segment> segment;   // SegmentRequest
  std::optional<std::string> answer;  // FinalAnswer

  bool is_answer() const { return answer.has_value(); }
};

struct DraftProposal {
  std::vector<double> frames;  // timestamps, strictly increasing
};

template <typename T>
struct ParseOutcome {
  std::optional<T> value;  // best-effort even when violations exist
  std::vector<Violation> violations;

  bool format_ok() const { return violations.empty(); }
};

// Extracts the first <think> block and exactly one of
// <segment>(a, b)</segment> / <answer>...</answer>. Total on arbitrary bytes.
ParseOutcome<TargetDecision> parse_target_output(const std::string& text);

// Extracts <frame>t1, t2, ...</frame>; limit is the configured
// per-iteration frame count.
ParseOutcome<DraftProposal> parse_draft_output(const std::string& text, int limit);

// Canonical serializations; render/parse round-trip on these forms.
std::string serialize_target(const TargetDecision& d);
std::string serialize_draft(const DraftProposal& p);
std::string serialize_segment(const Segment& s);

enum class PromptRole { TargetInit, TargetVerify, TargetFinal, Draft };

// Session view handed to the prompt templates.
struct PromptState {
  std::string question;
  std::vector<std::string> history;  // think blocks T_0..T_{t-1}, oldest first
  std::vector<double> frame_timestamps;
  int frame_limit = 0;  // draft only
};

// Marker line every forced-final prompt starts with; scripted backends key
// off it since the model interface is a single invoke(prompt, frames).
extern const char kFinalAnswerMarker[];

// Deterministic prompt text for the given role. Target prompts embed the
// whole history; the draft prompt embeds only the latest trace.
std::string render_prompt(PromptRole role, const PromptState& state);

// Answer normalization: lowercase, whitespace collapse, edge punctuation
// strip. Option-letter extraction happens in answer_reward.
std::string normalize_answer(const std::string& s);

}  // namespace spectemp

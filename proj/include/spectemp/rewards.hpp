#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectemp/embedding.hpp"
#include "spectemp/protocol.hpp"
#include "spectemp/timeline.hpp"

namespace spectemp {

struct RewardBreakdown {
  double format = 0.0;  // {0,1}
  double answer = 0.0;  // {0,1}, target only
  double iou = 0.0;     // [0,1], target only
  double visual = 0.0;  // draft only
  double total = 0.0;   // target: format+answer+iou; draft: format+visual
};

// Length-based IoU between the unions of two interval sets.
double temporal_iou(const std::vector<Segment>& pred, const std::vector<Segment>& gold);

// 1 iff normalized pred matches gold; with options present, the extracted
// option letter must match.
int answer_reward(const std::string& pred, const std::string& gold,
                  const std::optional<std::vector<std::string>>& options = std::nullopt);

enum class RewardRole { Target, Draft };

// 1 iff the role's parser reports zero violations. `draft_limit` is the
// configured per-iteration frame count (draft role only).
int format_reward(const std::string& text, RewardRole role, int draft_limit = 0);

// Relevance minus redundancy: dot(q, f) - max over prev of dot(f, p);
// the max over an empty prev is 0.
double visual_gain(std::span<const float> q_emb, std::span<const float> f_emb,
                   const std::vector<std::vector<float>>& prev);

// Target reward over a whole session's raw output texts (one per target
// invocation). Format is the AND over rounds; IoU scores all emitted
// segments against the gold spans.
RewardBreakdown score_target(const std::vector<std::string>& round_texts,
                             const std::string& gold_answer,
                             const std::vector<Segment>& gold_spans,
                             const std::optional<std::vector<std::string>>& options = std::nullopt);

// Draft reward over per-round proposal texts. Visual term is the mean gain
// across selected frames, with prev accumulating in selection order across
// rounds; malformed rounds zero the format bit but parsed frames still score.
RewardBreakdown score_draft(const std::vector<std::string>& round_texts,
                            const std::string& question, const Timeline& timeline,
                            const EmbeddingProvider& provider, int draft_limit);

}  // namespace spectemp

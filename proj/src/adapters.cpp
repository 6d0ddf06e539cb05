#include "spectemp/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "spectemp/common.hpp"

namespace spectemp {

namespace {

constexpr double kTsTol = 1e-6;

int estimate_tokens(const std::string& text) {
  return static_cast<int>((text.size() + 3) / 4);
}

ModelReply make_reply(std::string text) {
  ModelReply r;
  r.decode_tokens = estimate_tokens(text);
  r.text = std::move(text);
  return r;
}

bool is_final_prompt(const std::string& prompt) {
  return prompt.rfind(kFinalAnswerMarker, 0) == 0;
}

// uniform double in [0,1) from a splitmix64 stream
double next_uniform(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

void GoldSpec::validate() const {
  for (double f : evidence_frames) {
    bool inside = false;
    for (const Segment& s : evidence_spans)
      if (s.contains(f)) { inside = true; break; }
    if (!inside)
      throw Error("gold evidence frame " + fmt_seconds(f) + " outside all evidence spans");
  }
  if (reveal_round < 0) throw Error("reveal_round must be nonnegative");
}

bool OracleTargetModel::evidence_seen() const {
  for (double t : seen_) {
    for (double e : gold_.evidence_frames)
      if (std::fabs(t - e) <= kTsTol) return true;
    if (gold_.evidence_frames.empty())
      for (const Segment& s : gold_.evidence_spans)
        if (s.contains(t)) return true;
  }
  return false;
}

Segment OracleTargetModel::next_segment() const {
  for (const Segment& s : gold_.evidence_spans) {
    bool covered = false;
    for (double t : seen_)
      if (s.contains(t)) { covered = true; break; }
    if (!covered) return s;
  }
  return gold_.evidence_spans.empty() ? Segment(0.0, 0.0) : gold_.evidence_spans.front();
}

ModelReply OracleTargetModel::invoke(const std::string& prompt,
                                     const std::vector<FrameRef>& frames) {
  for (const FrameRef& f : frames) seen_.push_back(f.timestamp_s);

  if (is_final_prompt(prompt)) {
    std::string ans = evidence_seen() ? gold_.answer : "unknown";
    return make_reply("<think>forced final answer</think><answer>" + ans + "</answer>");
  }

  bool can_answer = rounds_elapsed_ >= gold_.reveal_round &&
                    (gold_.reveal_round == 0 || evidence_seen());
  int round = rounds_elapsed_++;
  if (can_answer) {
    return make_reply("<think>evidence gathered at round " + std::to_string(round) +
                      "</think><answer>" + gold_.answer + "</answer>");
  }
  Segment s = next_segment();
  return make_reply("<think>round " + std::to_string(round) + ": need region " +
                    serialize_segment(s) + "</think><segment>" + serialize_segment(s) +
                    "</segment>");
}

ModelReply OracleDraftModel::invoke(const std::string& /*prompt*/,
                                    const std::vector<FrameRef>& frames) {
  if (frames.empty()) return make_reply("<frame></frame>");

  // distance to the nearest gold evidence frame; 0 means exact evidence
  auto dist = [&](double t) {
    double best = std::numeric_limits<double>::infinity();
    for (double e : gold_.evidence_frames) best = std::min(best, std::fabs(t - e));
    return best;
  };
  std::vector<std::size_t> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist(frames[a].timestamp_s) < dist(frames[b].timestamp_s);
  });
  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(limit_, 1)),
                                           frames.size());
  std::vector<double> picked;
  for (std::size_t i = 0; i < take; ++i) picked.push_back(frames[order[i]].timestamp_s);
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  DraftProposal p;
  p.frames = std::move(picked);
  return make_reply(serialize_draft(p));
}

ModelReply NoisyTargetModel::invoke(const std::string& prompt,
                                    const std::vector<FrameRef>& frames) {
  ModelReply reply = inner_.invoke(prompt, frames);
  std::uint64_t call = calls_++;
  if (noise_.wrong_answer_prob == 0.0 && noise_.format_corrupt_prob == 0.0 &&
      noise_.segment_jitter_s == 0.0)
    return reply;

  std::uint64_t state = noise_.seed ^ (0xa076'1d64'78bd'642fULL + call);
  splitmix64(state);

  if (next_uniform(state) < noise_.format_corrupt_prob) {
    // tag deletion: drop the closing think tag
    std::size_t pos = reply.text.find("</think>");
    if (pos != std::string::npos) reply.text.erase(pos, std::strlen("</think>"));
    return reply;
  }

  auto parsed = parse_target_output(reply.text);
  if (!parsed.value) return reply;
  TargetDecision d = *parsed.value;
  if (d.answer) {
    if (next_uniform(state) < noise_.wrong_answer_prob)
      d.answer = "not " + *d.answer;
  } else if (d.segment && noise_.segment_jitter_s > 0.0) {
    double a = d.segment->start_s + (2.0 * next_uniform(state) - 1.0) * noise_.segment_jitter_s;
    double b = d.segment->end_s + (2.0 * next_uniform(state) - 1.0) * noise_.segment_jitter_s;
    if (a > b) std::swap(a, b);
    d.segment = Segment(std::max(a, 0.0), std::max(b, 0.0));
  }
  reply.text = serialize_target(d);
  reply.decode_tokens = estimate_tokens(reply.text);
  return reply;
}

ModelReply NoisyDraftModel::invoke(const std::string& prompt,
                                   const std::vector<FrameRef>& frames) {
  ModelReply reply = inner_.invoke(prompt, frames);
  std::uint64_t call = calls_++;
  if (noise_.format_corrupt_prob == 0.0) return reply;
  std::uint64_t state = noise_.seed ^ (0x589965cc'75374cc3ULL + call);
  splitmix64(state);
  if (next_uniform(state) < noise_.format_corrupt_prob) {
    std::size_t pos = reply.text.find("</frame>");
    if (pos != std::string::npos) reply.text.erase(pos, std::strlen("</frame>"));
  }
  return reply;
}

}  // namespace spectemp

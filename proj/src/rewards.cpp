#include "spectemp/rewards.hpp"

#include <algorithm>
#include <cctype>

#include "spectemp/common.hpp"
#include "spectemp/simd.hpp"

namespace spectemp {

namespace {

// merge into disjoint sorted intervals
std::vector<Segment> merge_union(std::vector<Segment> v) {
  std::sort(v.begin(), v.end(),
            [](const Segment& a, const Segment& b) { return a.start_s < b.start_s; });
  std::vector<Segment> out;
  for (const Segment& s : v) {
    if (!out.empty() && s.start_s <= out.back().end_s)
      out.back().end_s = std::max(out.back().end_s, s.end_s);
    else
      out.push_back(s);
  }
  return out;
}

double total_length(const std::vector<Segment>& merged) {
  double len = 0.0;
  for (const Segment& s : merged) len += s.length();
  return len;
}

double intersection_length(const std::vector<Segment>& a, const std::vector<Segment>& b) {
  double len = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double lo = std::max(a[i].start_s, b[j].start_s);
    double hi = std::min(a[i].end_s, b[j].end_s);
    if (hi > lo) len += hi - lo;
    if (a[i].end_s < b[j].end_s)
      ++i;
    else
      ++j;
  }
  return len;
}

}  // namespace

double temporal_iou(const std::vector<Segment>& pred, const std::vector<Segment>& gold) {
  if (pred.empty() && gold.empty()) throw UndefinedIoU();
  auto p = merge_union(pred);
  auto g = merge_union(gold);
  double inter = intersection_length(p, g);
  double uni = total_length(p) + total_length(g) - inter;
  if (uni <= 0.0) {
    // all intervals degenerate; exact point match counts as identity
    return (p.size() == g.size() &&
            std::equal(p.begin(), p.end(), g.begin(), [](const Segment& a, const Segment& b) {
              return a.start_s == b.start_s && a.end_s == b.end_s;
            }))
               ? 1.0
               : 0.0;
  }
  return inter / uni;
}

namespace {

// Extracts an option letter (a-j) from normalized text, if any.
std::optional<char> extract_letter(const std::string& norm,
                                   const std::vector<std::string>& options) {
  auto is_opt_letter = [&](char c) {
    return c >= 'a' && c < static_cast<char>('a' + std::max<std::size_t>(options.size(), 1));
  };
  // lone letter
  if (norm.size() == 1 && is_opt_letter(norm[0])) return norm[0];
  // parenthesized or delimited letter anywhere: "(b)", " b)", " b.", " b:"
  for (std::size_t i = 0; i < norm.size(); ++i) {
    if (!is_opt_letter(norm[i])) continue;
    bool left_ok = i == 0 || norm[i - 1] == '(' || norm[i - 1] == ' ';
    bool right_ok = i + 1 == norm.size() || norm[i + 1] == ')' || norm[i + 1] == '.' ||
                    norm[i + 1] == ':' || norm[i + 1] == ',';
    // require a delimiter on at least the right side to avoid matching
    // letters inside words; "b)" and "(b" both qualify
    bool delimited = (i > 0 && norm[i - 1] == '(') ||
                     (i + 1 < norm.size() && (norm[i + 1] == ')' || norm[i + 1] == '.' ||
                                              norm[i + 1] == ':'));
    bool lone_word = left_ok && (i + 1 == norm.size() || norm[i + 1] == ' ' ||
                                 norm[i + 1] == ',');
    if (delimited || (lone_word && left_ok && right_ok)) return norm[i];
  }
  // full option text match
  for (std::size_t k = 0; k < options.size(); ++k) {
    if (norm == normalize_answer(options[k])) return static_cast<char>('a' + k);
  }
  return std::nullopt;
}

}  // namespace

int answer_reward(const std::string& pred, const std::string& gold,
                  const std::optional<std::vector<std::string>>& options) {
  if (gold.empty()) throw EmptyInput("answer_reward: gold answer empty");
  std::string np = normalize_answer(pred);
  std::string ng = normalize_answer(gold);
  if (options && !options->empty()) {
    auto lp = extract_letter(np, *options);
    auto lg = extract_letter(ng, *options);
    if (lg.has_value()) return (lp.has_value() && *lp == *lg) ? 1 : 0;
  }
  return np == ng ? 1 : 0;
}

int format_reward(const std::string& text, RewardRole role, int draft_limit) {
  if (role == RewardRole::Target) return parse_target_output(text).format_ok() ? 1 : 0;
  return parse_draft_output(text, draft_limit).format_ok() ? 1 : 0;
}

double visual_gain(std::span<const float> q_emb, std::span<const float> f_emb,
                   const std::vector<std::vector<float>>& prev) {
  if (q_emb.size() != f_emb.size())
    throw DimensionMismatch("visual_gain: query/frame dimension mismatch");
  double relevance = simd::dot_f32(q_emb, f_emb);
  double redundancy = 0.0;  // max over empty prev is 0
  for (const auto& p : prev) {
    if (p.size() != f_emb.size())
      throw DimensionMismatch("visual_gain: prev vector dimension mismatch");
    redundancy = std::max(redundancy,
                          static_cast<double>(simd::dot_f32(f_emb, std::span<const float>(p))));
  }
  if (prev.empty()) redundancy = 0.0;
  return relevance - redundancy;
}

RewardBreakdown score_target(const std::vector<std::string>& round_texts,
                             const std::string& gold_answer,
                             const std::vector<Segment>& gold_spans,
                             const std::optional<std::vector<std::string>>& options) {
  RewardBreakdown rb;
  bool all_ok = true;
  std::vector<Segment> segments;
  std::string final_answer;
  for (const std::string& text : round_texts) {
    auto parsed = parse_target_output(text);
    if (!parsed.format_ok()) all_ok = false;
    if (parsed.value) {
      if (parsed.value->segment) segments.push_back(*parsed.value->segment);
      if (parsed.value->answer) final_answer = *parsed.value->answer;
    }
  }
  rb.format = all_ok ? 1.0 : 0.0;
  rb.answer = answer_reward(final_answer, gold_answer, options);
  if (segments.empty() && gold_spans.empty())
    rb.iou = 1.0;  // no localization demanded
  else if (segments.empty() || gold_spans.empty())
    rb.iou = 0.0;  // models that never localize are penalized, not crashed
  else
    rb.iou = temporal_iou(segments, gold_spans);
  rb.total = rb.format + rb.answer + rb.iou;
  return rb;
}

RewardBreakdown score_draft(const std::vector<std::string>& round_texts,
                            const std::string& question, const Timeline& timeline,
                            const EmbeddingProvider& provider, int draft_limit) {
  RewardBreakdown rb;
  std::vector<float> q = provider.embed_text(question);
  std::vector<std::vector<float>> prev;
  bool all_ok = true;
  double gain_sum = 0.0;
  std::size_t n = 0;
  for (const std::string& text : round_texts) {
    auto parsed = parse_draft_output(text, draft_limit);
    if (!parsed.format_ok()) all_ok = false;
    if (!parsed.value) continue;
    for (double ts : parsed.value->frames) {
      std::vector<float> f = provider.embed_frame(timeline.nearest_frame(ts));
      gain_sum += visual_gain(q, f, prev);
      prev.push_back(std::move(f));
      ++n;
    }
  }
  rb.format = all_ok ? 1.0 : 0.0;
  rb.visual = n > 0 ? gain_sum / static_cast<double>(n) : 0.0;
  rb.total = rb.format + rb.visual;
  return rb;
}

}  // namespace spectemp

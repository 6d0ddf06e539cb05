#include "spectemp/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace spectemp {

const char kFinalAnswerMarker[] =
    "The session has ended; answer now from the evidence already shown.";

std::string violation_name(Violation v) {
  switch (v) {
    case Violation::MissingThink: return "missing-think";
    case Violation::BothTerminals: return "both-terminals";
    case Violation::NoTerminal: return "no-terminal";
    case Violation::MalformedInterval: return "malformed-interval";
    case Violation::SegmentOrder: return "segment-order";
    case Violation::TrailingGarbage: return "trailing-garbage";
    case Violation::MissingFrameTag: return "missing-frame-tag";
    case Violation::EmptyList: return "empty-list";
    case Violation::NonNumeric: return "non-numeric";
    case Violation::NotIncreasing: return "not-increasing";
    case Violation::OverLimit: return "over-limit";
  }
  return "unknown";
}

namespace {

struct TagSpan {
  std::size_t open = std::string::npos;   // position of '<'
  std::size_t close = std::string::npos;  // one past '</tag>'
  std::string body;
  bool found() const { return open != std::string::npos; }
};

TagSpan find_tag(const std::string& text, const std::string& tag, std::size_t from = 0) {
  TagSpan out;
  std::string open = "<" + tag + ">";
  std::string close = "</" + tag + ">";
  std::size_t o = text.find(open, from);
  if (o == std::string::npos) return out;
  std::size_t c = text.find(close, o + open.size());
  if (c == std::string::npos) return out;
  out.open = o;
  out.close = c + close.size();
  out.body = text.substr(o + open.size(), c - o - open.size());
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_number(const std::string& tok, double& out) {
  std::string t = trim(tok);
  if (t.empty()) return false;
  const char* begin = t.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + t.size();
}

// true iff s is all whitespace outside the given half-open [open, close)
// spans (assumed disjoint).
bool only_whitespace_outside(const std::string& s,
                             std::vector<std::pair<std::size_t, std::size_t>> spans) {
  std::sort(spans.begin(), spans.end());
  std::size_t pos = 0;
  auto ws = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i)
      if (!std::isspace(static_cast<unsigned char>(s[i]))) return false;
    return true;
  };
  for (auto [o, c] : spans) {
    if (!ws(pos, o)) return false;
    pos = std::max(pos, c);
  }
  return ws(pos, s.size());
}

}  // namespace

ParseOutcome<TargetDecision> parse_target_output(const std::string& text) {
  ParseOutcome<TargetDecision> out;
  TargetDecision d;
  std::vector<std::pair<std::size_t, std::size_t>> spans;

  TagSpan think = find_tag(text, "think");
  if (think.found()) {
    d.think = think.body;
    spans.emplace_back(think.open, think.close);
  } else {
    out.violations.push_back(Violation::MissingThink);
  }

  std::size_t after_think = think.found() ? think.close : 0;
  TagSpan seg = find_tag(text, "segment", after_think);
  TagSpan ans = find_tag(text, "answer", after_think);
  if (seg.found() && ans.found()) {
    out.violations.push_back(Violation::BothTerminals);
    // keep the earlier terminal as the best-effort value; the discarded
    // block still doesn't count as trailing garbage
    if (ans.open < seg.open) {
      spans.emplace_back(seg.open, seg.close);
      seg = TagSpan{};
    }
  } else if (!seg.found() && !ans.found()) {
    out.violations.push_back(Violation::NoTerminal);
  }

  if (seg.found() && (!ans.found() || seg.open < ans.open)) {
    spans.emplace_back(seg.open, seg.close);
    if (ans.found()) spans.emplace_back(ans.open, ans.close);
    std::string body = trim(seg.body);
    bool ok = false;
    if (body.size() >= 2 && body.front() == '(' && body.back() == ')') {
      std::string inner = body.substr(1, body.size() - 2);
      std::size_t comma = inner.find(',');
      double a = 0.0, b = 0.0;
      if (comma != std::string::npos && inner.find(',', comma + 1) == std::string::npos &&
          parse_number(inner.substr(0, comma), a) &&
          parse_number(inner.substr(comma + 1), b)) {
        if (a > b) {
          out.violations.push_back(Violation::SegmentOrder);
        } else {
          // negative starts from untrusted output are clamped, not rejected
          d.segment = Segment(std::max(a, 0.0), std::max(b, 0.0));
          ok = true;
        }
      } else {
        out.violations.push_back(Violation::MalformedInterval);
      }
    } else {
      out.violations.push_back(Violation::MalformedInterval);
    }
    (void)ok;
  } else if (ans.found()) {
    spans.emplace_back(ans.open, ans.close);
    if (seg.found()) spans.emplace_back(seg.open, seg.close);
    d.answer = trim(ans.body);
  }

  if (!only_whitespace_outside(text, spans))
    out.violations.push_back(Violation::TrailingGarbage);

  if (d.segment || d.answer) out.value = std::move(d);
  return out;
}

ParseOutcome<DraftProposal> parse_draft_output(const std::string& text, int limit) {
  ParseOutcome<DraftProposal> out;
  TagSpan tag = find_tag(text, "frame");
  if (!tag.found()) {
    out.violations.push_back(Violation::MissingFrameTag);
    return out;
  }
  std::string body = trim(tag.body);
  if (body.empty()) {
    out.violations.push_back(Violation::EmptyList);
    return out;
  }
  DraftProposal p;
  bool non_numeric = false;
  std::istringstream toks(body);
  std::string tok;
  while (std::getline(toks, tok, ',')) {
    double v = 0.0;
    if (parse_number(tok, v))
      p.frames.push_back(v);
    else
      non_numeric = true;
  }
  if (non_numeric) out.violations.push_back(Violation::NonNumeric);
  if (p.frames.empty()) {
    out.violations.push_back(Violation::EmptyList);
    return out;
  }
  for (std::size_t i = 1; i < p.frames.size(); ++i) {
    if (!(p.frames[i] > p.frames[i - 1])) {
      out.violations.push_back(Violation::NotIncreasing);
      break;
    }
  }
  if (limit > 0 && p.frames.size() > static_cast<std::size_t>(limit))
    out.violations.push_back(Violation::OverLimit);
  out.value = std::move(p);
  return out;
}

std::string serialize_segment(const Segment& s) {
  return "(" + fmt_seconds(s.start_s) + ", " + fmt_seconds(s.end_s) + ")";
}

std::string serialize_target(const TargetDecision& d) {
  std::string out = "<think>" + d.think + "</think>";
  if (d.segment)
    out += "<segment>" + serialize_segment(*d.segment) + "</segment>";
  else if (d.answer)
    out += "<answer>" + *d.answer + "</answer>";
  else
    throw Error("TargetDecision carries neither terminal");
  return out;
}

std::string serialize_draft(const DraftProposal& p) {
  std::string out = "<frame>";
  for (std::size_t i = 0; i < p.frames.size(); ++i) {
    if (i) out += ", ";
    out += fmt_frame_ts(p.frames[i]);
  }
  out += "</frame>";
  return out;
}

namespace {

std::string frame_list(const std::vector<double>& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) out += ' ';
    out += "[frame t=" + fmt_frame_ts(ts[i]) + "s]";
  }
  return out;
}

std::string history_block(const std::vector<std::string>& history) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += "Round " + std::to_string(i) + " reasoning: <think>" + history[i] + "</think>\n";
  }
  return out;
}

}  // namespace

std::string render_prompt(PromptRole role, const PromptState& state) {
  if (state.question.empty() && role != PromptRole::Draft)
    throw TemplateFieldMissing("question");
  std::string out;
  switch (role) {
    case PromptRole::TargetInit:
      out += "You are the target model in a speculative temporal reasoning session.\n";
      out += "Question: " + state.question + "\n";
      out += "Frames shown: " + frame_list(state.frame_timestamps) + "\n";
      out += "Reason inside <think>...</think>, then emit exactly one of "
             "<segment>(start_s, end_s)</segment> to request dense inspection "
             "of a time region, or <answer>...</answer> if the evidence already "
             "suffices.\n";
      break;
    case PromptRole::TargetVerify:
      if (state.history.empty()) throw TemplateFieldMissing("history");
      out += "You are the target model verifying a draft proposal.\n";
      out += "Question: " + state.question + "\n";
      out += history_block(state.history);
      out += "New frames proposed by the draft model: " + frame_list(state.frame_timestamps) + "\n";
      out += "Reason inside <think>...</think>, then emit exactly one of "
             "<segment>(start_s, end_s)</segment> or <answer>...</answer>.\n";
      break;
    case PromptRole::TargetFinal:
      out += std::string(kFinalAnswerMarker) + "\n";
      out += "Question: " + state.question + "\n";
      if (!state.history.empty()) out += history_block(state.history);
      out += "Frames shown so far: " + frame_list(state.frame_timestamps) + "\n";
      out += "Emit <think>...</think> followed by <answer>...</answer>.\n";
      break;
    case PromptRole::Draft: {
      if (state.history.empty()) throw TemplateFieldMissing("history");
      if (state.frame_limit < 1) throw TemplateFieldMissing("frame_limit");
      out += "You are the draft model selecting salient frames.\n";
      out += "Current reasoning: <think>" + state.history.back() + "</think>\n";
      out += "Densely sampled frames: " + frame_list(state.frame_timestamps) + "\n";
      out += "Select the " + std::to_string(state.frame_limit) +
             " most informative, non-redundant frame timestamps and emit them as "
             "<frame>t1, t2, ...</frame> in increasing order.\n";
      break;
    }
  }
  return out;
}

std::string normalize_answer(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!in_ws) out += ' ';
      in_ws = true;
    } else {
      out += static_cast<char>(std::tolower(c));
      in_ws = false;
    }
  }
  auto is_edge_punct = [](char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
           c == '"' || c == '\'' || c == '(' || c == ')' || c == ' ';
  };
  std::size_t b = 0, e = out.size();
  while (b < e && is_edge_punct(out[b])) ++b;
  while (e > b && is_edge_punct(out[e - 1])) --e;
  return out.substr(b, e - b);
}

}  // namespace spectemp

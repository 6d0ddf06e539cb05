#include "spectemp/orchestrator.hpp"

#include <algorithm>
#include <cmath>

namespace spectemp {

void CostModel::validate() const {
  auto nonneg = [](const StageCoefficients& c) {
    return c.vision_encode_per_frame >= 0.0 && c.projector_per_frame >= 0.0 &&
           c.prefill_per_token >= 0.0 && c.decode_per_token >= 0.0;
  };
  if (!nonneg(target) || !nonneg(draft))
    throw Error("cost model coefficients must be nonnegative");
  if (draft.vision_encode_per_frame > target.vision_encode_per_frame ||
      draft.projector_per_frame > target.projector_per_frame ||
      draft.prefill_per_token > target.prefill_per_token ||
      draft.decode_per_token > target.decode_per_token)
    throw Error("draft coefficients must not exceed target coefficients");
  if (tokens_per_frame < 0) throw Error("tokens_per_frame must be nonnegative");
}

CostModel CostModel::defaults() {
  CostModel cm;
  cm.target = {0.020, 0.005, 0.0008, 0.0020};
  cm.draft = {0.006, 0.0015, 0.00025, 0.0006};
  cm.tokens_per_frame = 128;
  return cm;
}

void SessionConfig::validate() const {
  if (init_frames < 1) throw Error("init_frames must be >= 1");
  if (per_iter_frames < 1) throw Error("per_iter_frames must be >= 1");
  if (t_max < 0) throw Error("t_max must be >= 0");
  if (!(dense_fps > 0.0)) throw Error("dense_fps must be positive");
  cost.validate();
}

std::string termination_name(TerminationKind k) {
  switch (k) {
    case TerminationKind::InitAnswer: return "init-answer";
    case TerminationKind::RoundAnswer: return "round-answer";
    case TerminationKind::ForcedFinal: return "forced-final";
  }
  return "unknown";
}

namespace {

int estimate_tokens(const std::string& text) {
  return static_cast<int>((text.size() + 3) / 4);
}

StageSeconds charge(const StageCoefficients& c, int frames, int prompt_tokens,
                    int decode_tokens, int tokens_per_frame) {
  StageSeconds s;
  s.vision = frames * c.vision_encode_per_frame;
  s.projector = frames * c.projector_per_frame;
  s.prefill = (static_cast<double>(frames) * tokens_per_frame + prompt_tokens) *
              c.prefill_per_token;
  s.decode = static_cast<double>(decode_tokens) * c.decode_per_token;
  return s;
}

void accumulate(StageSeconds& into, const StageSeconds& s) {
  into.vision += s.vision;
  into.projector += s.projector;
  into.prefill += s.prefill;
  into.decode += s.decode;
}

}  // namespace

LatencyBreakdown simulate_latency(const std::vector<RoundRecord>& rounds,
                                  const CostModel& cm) {
  cm.validate();
  LatencyBreakdown lb;
  for (const RoundRecord& r : rounds) {
    accumulate(lb.target, charge(cm.target, r.new_target_frames, r.target_prompt_tokens,
                                 r.target_decode_tokens, cm.tokens_per_frame));
    if (r.dense_frame_count > 0 || r.draft_prompt_tokens > 0 || r.draft_decode_tokens > 0)
      accumulate(lb.draft, charge(cm.draft, r.dense_frame_count, r.draft_prompt_tokens,
                                  r.draft_decode_tokens, cm.tokens_per_frame));
  }
  lb.total = lb.target.total() + lb.draft.total();
  return lb;
}

LatencyBreakdown simulate_large_only_latency(const std::vector<RoundRecord>& rounds,
                                             const CostModel& cm) {
  CostModel large = cm;
  large.draft = cm.target;
  return simulate_latency(rounds, large);
}

double mean_iterations(const std::vector<SessionResult>& results) {
  if (results.empty()) throw EmptyInput("mean_iterations: empty result list");
  double sum = 0.0;
  for (const SessionResult& r : results) sum += r.rounds_used;
  return sum / static_cast<double>(results.size());
}

namespace {

struct SessionState {
  SessionResult result;
  std::vector<double> shown;            // distinct timestamps in target context
  std::vector<std::string> history;     // think blocks, oldest first

  bool already_shown(double t) const {
    for (double s : shown)
      if (std::fabs(s - t) <= 1e-9) return true;
    return false;
  }
};

ModelReply invoke_checked(ModelInterface& model, const std::string& prompt,
                          const std::vector<FrameRef>& frames, SessionState& st,
                          const char* who) {
  try {
    return model.invoke(prompt, frames);
  } catch (const std::exception& e) {
    throw SessionAborted(std::string(who) + " adapter failed: " + e.what(),
                         std::move(st.result));
  }
}

}  // namespace

SessionResult run_session(const SessionConfig& cfg, ModelInterface& target,
                          ModelInterface& draft, const Timeline& timeline,
                          const std::string& question) {
  cfg.validate();
  if (timeline.frame_count() == 0) throw EmptyTimeline();

  SessionState st;
  const Segment whole(0.0, timeline.duration_s());
  Segment current = whole;

  auto timestamps_of = [](const std::vector<FrameRef>& refs) {
    std::vector<double> ts;
    ts.reserve(refs.size());
    for (const FrameRef& f : refs) ts.push_back(f.timestamp_s);
    return ts;
  };

  // ---- initialization: uniform sample into the target
  std::vector<FrameRef> init_refs = timeline.uniform_sample(cfg.init_frames);
  PromptState init_state{question, {}, timestamps_of(init_refs), 0};
  std::string init_prompt = render_prompt(PromptRole::TargetInit, init_state);
  ModelReply init_reply = invoke_checked(target, init_prompt, init_refs, st, "target");
  st.result.target_texts.push_back(init_reply.text);
  for (const FrameRef& f : init_refs) st.shown.push_back(f.timestamp_s);

  RoundRecord init_rec;
  init_rec.round = 0;
  init_rec.new_target_frames = static_cast<int>(init_refs.size());
  init_rec.target_prompt_tokens = estimate_tokens(init_prompt);
  init_rec.target_decode_tokens = init_reply.decode_tokens;

  bool answered = false;
  auto apply_target_reply = [&](const ModelReply& reply, RoundRecord& rec) {
    auto parsed = parse_target_output(reply.text);
    if (parsed.format_ok() && parsed.value) {
      rec.think = parsed.value->think;
      if (parsed.value->answer) {
        rec.answer = parsed.value->answer;
        st.result.answer = *parsed.value->answer;
        answered = true;
      } else {
        rec.segment = parsed.value->segment;
        current = *parsed.value->segment;
      }
    } else {
      // recovery: malformed output becomes a whole-timeline segment request
      if (parsed.value) rec.think = parsed.value->think;
      rec.segment = whole;
      rec.recovered = true;
      current = whole;
    }
    st.history.push_back(rec.think);
  };

  apply_target_reply(init_reply, init_rec);
  st.result.rounds.push_back(init_rec);
  if (answered) {
    st.result.terminated_by = TerminationKind::InitAnswer;
    st.result.rounds_used = 0;
  }

  // ---- speculation/verification rounds
  for (int t = 1; !answered && t <= cfg.t_max; ++t) {
    RoundRecord rec;
    rec.round = t;

    std::vector<FrameRef> dense;
    try {
      dense = timeline.dense_sample(current, cfg.dense_fps);
    } catch (const SegmentOutOfRange&) {
      dense = timeline.dense_sample(whole, cfg.dense_fps);  // untrusted segment
    }
    rec.dense_frame_count = static_cast<int>(dense.size());
    st.result.total_draft_frames += rec.dense_frame_count;

    // draft sees only the current round's trace
    PromptState draft_state{question, {st.history.back()}, timestamps_of(dense),
                            cfg.per_iter_frames};
    std::string draft_prompt = render_prompt(PromptRole::Draft, draft_state);
    ModelReply draft_reply = invoke_checked(draft, draft_prompt, dense, st, "draft");
    st.result.draft_texts.push_back(draft_reply.text);
    rec.draft_prompt_tokens = estimate_tokens(draft_prompt);
    rec.draft_decode_tokens = draft_reply.decode_tokens;

    // snap proposals to the dense grid; fall back to leading dense frames
    auto proposal = parse_draft_output(draft_reply.text, cfg.per_iter_frames);
    std::vector<double> picked;
    if (proposal.value && !proposal.value->frames.empty()) {
      for (double p : proposal.value->frames) {
        double best = dense.front().timestamp_s;
        double best_d = std::fabs(p - best);
        for (const FrameRef& f : dense) {
          double d = std::fabs(p - f.timestamp_s);
          if (d < best_d) { best_d = d; best = f.timestamp_s; }
        }
        picked.push_back(best);
      }
      std::sort(picked.begin(), picked.end());
      picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
      if (picked.size() > static_cast<std::size_t>(cfg.per_iter_frames))
        picked.resize(static_cast<std::size_t>(cfg.per_iter_frames));
    } else {
      for (const FrameRef& f : dense) {
        picked.push_back(f.timestamp_s);
        if (picked.size() == static_cast<std::size_t>(cfg.per_iter_frames)) break;
      }
    }
    rec.proposed_frames = picked;

    std::vector<FrameRef> sparse_refs;
    for (double ts : picked) sparse_refs.push_back(timeline.nearest_frame(ts));
    for (double ts : picked) {
      if (!st.already_shown(ts)) {
        st.shown.push_back(ts);
        ++rec.new_target_frames;
      }
    }

    // target sees the full accumulated history
    PromptState verify_state{question, st.history, picked, 0};
    std::string verify_prompt = render_prompt(PromptRole::TargetVerify, verify_state);
    ModelReply reply = invoke_checked(target, verify_prompt, sparse_refs, st, "target");
    st.result.target_texts.push_back(reply.text);
    rec.target_prompt_tokens = estimate_tokens(verify_prompt);
    rec.target_decode_tokens = reply.decode_tokens;

    apply_target_reply(reply, rec);
    st.result.rounds.push_back(rec);
    st.result.rounds_used = t;
    if (answered) st.result.terminated_by = TerminationKind::RoundAnswer;
  }

  // ---- forced final answer if the loop did not converge
  if (!answered) {
    RoundRecord rec;
    rec.round = static_cast<int>(st.result.rounds.size());
    std::vector<double> shown_sorted = st.shown;
    std::sort(shown_sorted.begin(), shown_sorted.end());
    PromptState final_state{question, st.history, shown_sorted, 0};
    std::string final_prompt = render_prompt(PromptRole::TargetFinal, final_state);
    ModelReply reply = invoke_checked(target, final_prompt, {}, st, "target");
    st.result.target_texts.push_back(reply.text);
    rec.target_prompt_tokens = estimate_tokens(final_prompt);
    rec.target_decode_tokens = reply.decode_tokens;
    auto parsed = parse_target_output(reply.text);
    std::string answer;
    if (parsed.value && parsed.value->answer) {
      answer = *parsed.value->answer;
      rec.think = parsed.value->think;
    }
    rec.answer = answer;
    st.result.answer = answer;
    st.result.terminated_by = TerminationKind::ForcedFinal;
    st.result.rounds.push_back(rec);
  }

  st.result.total_target_frames = static_cast<int>(st.shown.size());

  for (RoundRecord& r : st.result.rounds) {
    r.target_time = charge(cfg.cost.target, r.new_target_frames, r.target_prompt_tokens,
                           r.target_decode_tokens, cfg.cost.tokens_per_frame);
    if (r.dense_frame_count > 0 || r.draft_decode_tokens > 0)
      r.draft_time = charge(cfg.cost.draft, r.dense_frame_count, r.draft_prompt_tokens,
                            r.draft_decode_tokens, cfg.cost.tokens_per_frame);
  }
  st.result.latency = simulate_latency(st.result.rounds, cfg.cost);
  return st.result;
}

}  // namespace spectemp

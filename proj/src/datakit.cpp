#include "spectemp/datakit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "spectemp/rewards.hpp"

namespace spectemp {

using nlohmann::json;

std::string duration_class_name(DurationClass c) {
  switch (c) {
    case DurationClass::Short: return "short";
    case DurationClass::Medium: return "medium";
    case DurationClass::Long: return "long";
  }
  return "unknown";
}

DurationClass classify_duration(double duration_s) {
  if (duration_s < 60.0) return DurationClass::Short;
  if (duration_s <= 600.0) return DurationClass::Medium;
  return DurationClass::Long;
}

std::string failure_code_name(FailureCode c) {
  switch (c) {
    case FailureCode::LowIou: return "low-iou";
    case FailureCode::FrameOutsideSegment: return "frame-outside-segment";
    case FailureCode::BadGrammar: return "bad-grammar";
    case FailureCode::AnswerMismatch: return "answer-mismatch";
  }
  return "unknown";
}

ValidationReport validate_trajectory(const TrajectoryRecord& rec, double iou_threshold) {
  ValidationReport report;
  report.record_id = rec.id;
  auto fail = [&](int round, FailureCode code) {
    report.failures.push_back({round, code});
  };

  for (std::size_t i = 0; i < rec.rounds.size(); ++i) {
    const TrajectoryRound& r = rec.rounds[i];
    bool is_last = i + 1 == rec.rounds.size();
    int idx = static_cast<int>(i);

    // structure: earlier rounds carry segments, the last carries the answer
    bool has_seg = r.segment.has_value();
    bool has_ans = r.answer.has_value();
    if (has_seg == has_ans || (is_last && !has_ans) || (!is_last && !has_seg)) {
      fail(idx, FailureCode::BadGrammar);
      continue;
    }

    // grammar of the canonical serialized round
    TargetDecision d;
    d.think = r.think;
    d.segment = r.segment;
    d.answer = r.answer;
    if (!parse_target_output(serialize_target(d)).format_ok())
      fail(idx, FailureCode::BadGrammar);
    if (has_seg) {
      DraftProposal p;
      p.frames = r.draft_frames;
      if (!parse_draft_output(serialize_draft(p), 0).format_ok())
        fail(idx, FailureCode::BadGrammar);
    }

    if (has_seg) {
      double iou = rec.gold_spans.empty() ? 0.0 : temporal_iou({*r.segment}, rec.gold_spans);
      if (iou < iou_threshold) fail(idx, FailureCode::LowIou);
      for (double f : r.draft_frames)
        if (!r.segment->contains(f)) {
          fail(idx, FailureCode::FrameOutsideSegment);
          break;
        }
    }
    if (has_ans) {
      std::optional<std::vector<std::string>> opts;
      if (!rec.options.empty()) opts = rec.options;
      if (answer_reward(*r.answer, rec.gold_answer, opts) != 1)
        fail(idx, FailureCode::AnswerMismatch);
    }
  }
  report.pass = report.failures.empty();
  return report;
}

namespace {

json segment_to_json(const Segment& s) { return json::array({s.start_s, s.end_s}); }

Segment segment_from_json(const json& j) {
  return Segment(j.at(0).get<double>(), j.at(1).get<double>());
}

}  // namespace

std::string trajectory_to_json(const TrajectoryRecord& rec) {
  json j;
  j["id"] = rec.id;
  j["question"] = rec.question;
  if (!rec.options.empty()) j["options"] = rec.options;
  j["answer"] = rec.gold_answer;
  j["gold_spans"] = json::array();
  for (const Segment& s : rec.gold_spans) j["gold_spans"].push_back(segment_to_json(s));
  j["gold_frames"] = rec.gold_frames;
  j["rounds"] = json::array();
  for (const TrajectoryRound& r : rec.rounds) {
    json jr;
    jr["think"] = r.think;
    if (r.segment) jr["segment"] = segment_to_json(*r.segment);
    if (r.answer) jr["answer"] = *r.answer;
    jr["frames"] = r.draft_frames;
    j["rounds"].push_back(std::move(jr));
  }
  j["source"] = rec.source;
  j["duration_s"] = rec.duration_s;
  j["duration_class"] = duration_class_name(rec.duration_class);
  return j.dump();
}

TrajectoryRecord trajectory_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("trajectory record: ") + e.what());
  }
  TrajectoryRecord rec;
  try {
    rec.id = j.at("id").get<std::string>();
    rec.question = j.at("question").get<std::string>();
    if (j.contains("options")) rec.options = j["options"].get<std::vector<std::string>>();
    rec.gold_answer = j.at("answer").get<std::string>();
    for (const json& s : j.at("gold_spans")) rec.gold_spans.push_back(segment_from_json(s));
    rec.gold_frames = j.at("gold_frames").get<std::vector<double>>();
    for (const json& jr : j.at("rounds")) {
      TrajectoryRound r;
      r.think = jr.at("think").get<std::string>();
      if (jr.contains("segment")) r.segment = segment_from_json(jr["segment"]);
      if (jr.contains("answer")) r.answer = jr["answer"].get<std::string>();
      r.draft_frames = jr.at("frames").get<std::vector<double>>();
      rec.rounds.push_back(std::move(r));
    }
    rec.source = j.at("source").get<std::string>();
    rec.duration_s = j.at("duration_s").get<double>();
    rec.duration_class = classify_duration(rec.duration_s);
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("trajectory record: ") + e.what());
  }
  return rec;
}

std::vector<TrajectoryRecord> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::vector<TrajectoryRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(trajectory_from_json(line));
  }
  return out;
}

void save_trajectories(const std::string& path, const std::vector<TrajectoryRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for write: " + path);
  for (const TrajectoryRecord& r : recs) out << trajectory_to_json(r) << '\n';
}

TrajectoryRecord record_from_session(const std::string& id, const std::string& question,
                                     const GoldSpec& gold, const SessionResult& result,
                                     double duration_s, const std::string& source) {
  TrajectoryRecord rec;
  rec.id = id;
  rec.question = question;
  rec.gold_answer = gold.answer;
  rec.gold_spans = gold.evidence_spans;
  rec.gold_frames = gold.evidence_frames;
  rec.source = source;
  rec.duration_s = duration_s;
  rec.duration_class = classify_duration(duration_s);
  for (std::size_t j = 0; j < result.rounds.size(); ++j) {
    const RoundRecord& rr = result.rounds[j];
    TrajectoryRound tr;
    tr.think = rr.think;
    tr.segment = rr.segment;
    tr.answer = rr.answer;
    // the frames the draft selected in response to this round's segment
    if (j + 1 < result.rounds.size()) tr.draft_frames = result.rounds[j + 1].proposed_frames;
    rec.rounds.push_back(std::move(tr));
  }
  return rec;
}

Task synth_niah(const NiahSpec& spec, std::size_t d, std::uint64_t seed) {
  if (spec.haystack_frames < 1) throw Error("niah: haystack must be nonempty");
  if (spec.needle_frames < 1 || spec.needle_frames > spec.haystack_frames)
    throw Error("niah: needle must fit inside the haystack");
  if (spec.depth_fraction < 0.0 || spec.depth_fraction > 1.0)
    throw Error("niah: depth fraction must be in [0,1]");

  const int L = spec.haystack_frames;
  const int w = spec.needle_frames;
  const long long ns = std::llround(spec.depth_fraction * (L - w));

  std::string key = "niah:len=" + std::to_string(L) + ":depth=" + fmt_seconds(spec.depth_fraction) +
                    ":width=" + std::to_string(w);
  Task task{Timeline(0, 1, {}), "", GoldSpec{}};
  task.question = "What is shown in the unique needle frame of " + key + "?";
  task.gold.answer = "needle " + key;
  task.gold.evidence_spans = {Segment(static_cast<double>(ns), static_cast<double>(ns + w - 1))};
  for (int i = 0; i < w; ++i) task.gold.evidence_frames.push_back(static_cast<double>(ns + i));
  task.gold.reveal_round = 1;

  std::vector<float> needle = hash_embed("q:" + task.question, d, seed);
  std::vector<std::pair<double, std::vector<float>>> frames;
  frames.reserve(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    if (i >= ns && i < ns + w) {
      frames.emplace_back(static_cast<double>(i), needle);
    } else {
      frames.emplace_back(static_cast<double>(i),
                          hash_embed("hay:" + std::to_string(spec.distractor_seed) + ":" +
                                         std::to_string(i),
                                     d, seed));
    }
  }
  task.timeline = Timeline(static_cast<double>(L - 1), 1.0, std::move(frames),
                           {{"kind", "niah"}});
  return task;
}

std::vector<Task> synth_population(const PopulationConfig& cfg) {
  if (cfg.n < 1) throw Error("population: n must be >= 1");
  std::uint64_t state = derive_seed(cfg.seed, "population");

  auto next_u64 = [&] { return splitmix64(state); };
  auto uniform_int = [&](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  // class counts within +-1 of requested proportions
  int n_short = static_cast<int>(std::lround(cfg.short_frac * cfg.n));
  int n_medium = static_cast<int>(std::lround(cfg.medium_frac * cfg.n));
  int n_long = cfg.n - n_short - n_medium;
  if (n_long < 0) { n_medium += n_long; n_long = 0; }

  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    DurationClass cls = i < n_short ? DurationClass::Short
                        : i < n_short + n_medium ? DurationClass::Medium
                                                 : DurationClass::Long;
    int duration = cls == DurationClass::Short   ? uniform_int(15, 59)
                   : cls == DurationClass::Medium ? uniform_int(60, 600)
                                                  : uniform_int(601, 900);
    int span_w = uniform_int(2, 8);
    int span_start = uniform_int(0, duration - span_w);
    int mid = span_start + span_w / 2;

    Task task{Timeline(0, 1, {}), "", GoldSpec{}};
    task.question = "task-" + std::to_string(i) + ": what happens in the highlighted moment?";
    task.gold.answer = "event-" + std::to_string(i);
    task.gold.evidence_spans = {Segment(span_start, span_start + span_w)};
    task.gold.evidence_frames = {static_cast<double>(mid)};
    task.gold.reveal_round = i % (cfg.max_reveal_round + 1);

    std::vector<float> evidence = hash_embed("q:" + task.question, cfg.dim, cfg.seed);
    std::vector<std::pair<double, std::vector<float>>> frames;
    frames.reserve(static_cast<std::size_t>(duration) + 1);
    for (int t = 0; t <= duration; ++t) {
      if (t == mid)
        frames.emplace_back(static_cast<double>(t), evidence);
      else
        frames.emplace_back(static_cast<double>(t),
                            hash_embed("tl:" + std::to_string(i) + ":" + std::to_string(t),
                                       cfg.dim, cfg.seed));
    }
    task.timeline = Timeline(static_cast<double>(duration), 1.0, std::move(frames),
                             {{"task", std::to_string(i)}});
    tasks.push_back(std::move(task));
  }
  return tasks;
}

double efficiency_score(double accuracy_pct, double latency_s) {
  if (!(latency_s > 0.0)) throw Error("efficiency: latency must be positive");
  return std::round(accuracy_pct / latency_s * 10.0) / 10.0;
}

MetricsReport aggregate_metrics(const std::vector<SessionResult>& results,
                                const std::vector<GoldSpec>& golds) {
  if (results.size() != golds.size())
    throw AlignmentError("aggregate_metrics: " + std::to_string(results.size()) +
                         " results vs " + std::to_string(golds.size()) + " golds");
  if (results.empty()) throw EmptyInput("aggregate_metrics: no sessions");
  MetricsReport m;
  double correct = 0.0, lat = 0.0, frames = 0.0, iters = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    correct += answer_reward(results[i].answer, golds[i].answer);
    lat += results[i].latency.total;
    frames += results[i].total_target_frames;
    iters += results[i].rounds_used;
  }
  double n = static_cast<double>(results.size());
  m.accuracy_pct = 100.0 * correct / n;
  m.mean_latency_s = lat / n;
  m.mean_frames = frames / n;
  m.mean_iterations = iters / n;
  m.efficiency = efficiency_score(m.accuracy_pct, m.mean_latency_s);
  return m;
}

}  // namespace spectemp

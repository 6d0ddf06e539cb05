// Command-line front end: run single sessions, sweep benchmark strategies,
// evaluate needle-in-a-haystack retrieval, validate trajectory corpora, and
// score rollout files.
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "spectemp/adapters.hpp"
#include "spectemp/datakit.hpp"
#include "spectemp/embedding.hpp"
#include "spectemp/grpo.hpp"
#include "spectemp/orchestrator.hpp"
#include "spectemp/remote.hpp"
#include "spectemp/rewards.hpp"

namespace fs = std::filesystem;
using namespace spectemp;

namespace {

// ---------------------------------------------------------------------------
// key = value configuration with strict unknown-key rejection

const std::set<std::string> kKnownKeys = {
    "session.init_frames", "session.per_iter_frames", "session.t_max", "session.dense_fps",
    "cost.target_vision", "cost.target_projector", "cost.target_prefill", "cost.target_decode",
    "cost.draft_vision", "cost.draft_projector", "cost.draft_prefill", "cost.draft_decode",
    "cost.tokens_per_frame",
    "noise.wrong_answer_prob", "noise.format_corrupt_prob", "noise.segment_jitter_s",
    "population.n", "population.short_frac", "population.medium_frac", "population.long_frac",
    "population.dim", "population.max_reveal_round",
    "bench.strategies",
    "niah.lengths", "niah.depths", "niah.width",
    "run.task_index",
    "grpo.beta", "grpo.clip_eps",
    "remote.base_url", "remote.model", "remote.api_key", "remote.path",
    "remote.temperature", "remote.max_tokens", "remote.timeout_s",
    "remote.attach_images", "remote.image_url_pattern",
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

using ConfigMap = std::map<std::string, std::string>;

void put_checked(ConfigMap& cfg, const std::string& key, const std::string& value,
                 const std::string& where) {
  if (!kKnownKeys.count(key))
    throw ConfigError("unknown config key '" + key + "' (" + where + ")");
  cfg[key] = value;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    put_checked(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)),
                path + ":" + std::to_string(lineno));
  }
  return cfg;
}

double get_double(const ConfigMap& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + it->second);
  }
}

long long get_int(const ConfigMap& cfg, const std::string& key, long long fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    std::size_t used = 0;
    long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + it->second);
  }
}

bool get_bool(const ConfigMap& cfg, const std::string& key, bool fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false: " + it->second);
}

std::string get_str(const ConfigMap& cfg, const std::string& key, const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

// ---------------------------------------------------------------------------
// common option plumbing

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string adapter = "oracle";
  int workers = 1;
  std::vector<std::string> overrides;  // key=value, wins over the file
  ConfigMap cfg;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key = value configuration file");
  cmd->add_option("--seed", opts.seed, "root seed; all randomness derives from it");
  cmd->add_option("--out", opts.out_dir, "output directory (created if missing)");
  cmd->add_option("--adapter", opts.adapter, "model adapters: oracle, noisy, or remote")
      ->check(CLI::IsMember({"oracle", "noisy", "remote"}));
  cmd->add_option("--workers", opts.workers, "parallel session workers")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", opts.overrides,
                  "config override as key=value; repeatable, wins over --config");
}

void finalize_opts(CommonOpts& opts) {
  if (!opts.config_path.empty()) opts.cfg = load_config_file(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
    put_checked(opts.cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), "--set");
  }
  fs::create_directories(opts.out_dir);
}

SessionConfig make_session_config(const CommonOpts& opts) {
  SessionConfig sc;
  sc.init_frames = static_cast<int>(get_int(opts.cfg, "session.init_frames", sc.init_frames));
  sc.per_iter_frames =
      static_cast<int>(get_int(opts.cfg, "session.per_iter_frames", sc.per_iter_frames));
  sc.t_max = static_cast<int>(get_int(opts.cfg, "session.t_max", sc.t_max));
  sc.dense_fps = get_double(opts.cfg, "session.dense_fps", sc.dense_fps);
  CostModel cm = CostModel::defaults();
  cm.target.vision_encode_per_frame =
      get_double(opts.cfg, "cost.target_vision", cm.target.vision_encode_per_frame);
  cm.target.projector_per_frame =
      get_double(opts.cfg, "cost.target_projector", cm.target.projector_per_frame);
  cm.target.prefill_per_token =
      get_double(opts.cfg, "cost.target_prefill", cm.target.prefill_per_token);
  cm.target.decode_per_token =
      get_double(opts.cfg, "cost.target_decode", cm.target.decode_per_token);
  cm.draft.vision_encode_per_frame =
      get_double(opts.cfg, "cost.draft_vision", cm.draft.vision_encode_per_frame);
  cm.draft.projector_per_frame =
      get_double(opts.cfg, "cost.draft_projector", cm.draft.projector_per_frame);
  cm.draft.prefill_per_token =
      get_double(opts.cfg, "cost.draft_prefill", cm.draft.prefill_per_token);
  cm.draft.decode_per_token =
      get_double(opts.cfg, "cost.draft_decode", cm.draft.decode_per_token);
  cm.tokens_per_frame =
      static_cast<int>(get_int(opts.cfg, "cost.tokens_per_frame", cm.tokens_per_frame));
  sc.cost = cm;
  sc.seed = opts.seed;
  try {
    sc.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

NoiseConfig make_noise_config(const CommonOpts& opts, std::uint64_t task_seed) {
  NoiseConfig n;
  n.wrong_answer_prob = get_double(opts.cfg, "noise.wrong_answer_prob", 0.05);
  n.format_corrupt_prob = get_double(opts.cfg, "noise.format_corrupt_prob", 0.05);
  n.segment_jitter_s = get_double(opts.cfg, "noise.segment_jitter_s", 0.5);
  n.seed = task_seed;
  return n;
}

PopulationConfig make_population_config(const CommonOpts& opts) {
  PopulationConfig pc;
  pc.n = static_cast<int>(get_int(opts.cfg, "population.n", pc.n));
  pc.short_frac = get_double(opts.cfg, "population.short_frac", pc.short_frac);
  pc.medium_frac = get_double(opts.cfg, "population.medium_frac", pc.medium_frac);
  pc.long_frac = get_double(opts.cfg, "population.long_frac", pc.long_frac);
  pc.dim = static_cast<std::size_t>(get_int(opts.cfg, "population.dim",
                                            static_cast<long long>(pc.dim)));
  pc.max_reveal_round =
      static_cast<int>(get_int(opts.cfg, "population.max_reveal_round", pc.max_reveal_round));
  pc.seed = opts.seed;
  return pc;
}

RemoteConfig make_remote_config(const CommonOpts& opts) {
  RemoteConfig rc;
  rc.base_url = get_str(opts.cfg, "remote.base_url", "");
  rc.model = get_str(opts.cfg, "remote.model", "");
  rc.api_key = get_str(opts.cfg, "remote.api_key", "");
  rc.path = get_str(opts.cfg, "remote.path", rc.path);
  rc.temperature = get_double(opts.cfg, "remote.temperature", rc.temperature);
  rc.max_tokens = static_cast<int>(get_int(opts.cfg, "remote.max_tokens", rc.max_tokens));
  rc.timeout_s = get_double(opts.cfg, "remote.timeout_s", rc.timeout_s);
  rc.attach_images = get_bool(opts.cfg, "remote.attach_images", rc.attach_images);
  rc.image_url_pattern = get_str(opts.cfg, "remote.image_url_pattern", rc.image_url_pattern);
  return rc;
}

struct ModelPair {
  std::unique_ptr<ModelInterface> target;
  std::unique_ptr<ModelInterface> draft;
};

ModelPair make_models(const CommonOpts& opts, const SessionConfig& sc, const GoldSpec& gold,
                      std::uint64_t task_seed) {
  ModelPair mp;
  if (opts.adapter == "oracle") {
    mp.target = std::make_unique<OracleTargetModel>(gold);
    mp.draft = std::make_unique<OracleDraftModel>(gold, sc.per_iter_frames);
  } else if (opts.adapter == "noisy") {
    NoiseConfig n = make_noise_config(opts, task_seed);
    mp.target = std::make_unique<NoisyTargetModel>(gold, n);
    mp.draft = std::make_unique<NoisyDraftModel>(gold, sc.per_iter_frames, n);
  } else {
    RemoteConfig rc = make_remote_config(opts);
    mp.target = std::make_unique<RemoteModel>(rc);
    mp.draft = std::make_unique<RemoteModel>(rc);
  }
  return mp;
}

std::string fmt(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Runs fn(i) for i in [0, n) on opts.workers threads. Exceptions are
// captured and rethrown on the calling thread.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// run: one session, transcript + rewards + trajectory record

int cmd_run(CommonOpts& opts) {
  finalize_opts(opts);
  SessionConfig sc = make_session_config(opts);
  PopulationConfig pc = make_population_config(opts);
  auto tasks = synth_population(pc);
  long long index = get_int(opts.cfg, "run.task_index", 0);
  if (index < 0 || index >= static_cast<long long>(tasks.size()))
    throw ConfigError("run.task_index out of range: " + std::to_string(index));
  const Task& task = tasks[static_cast<std::size_t>(index)];

  ModelPair mp = make_models(opts, sc, task.gold,
                             derive_seed(opts.seed, "task:" + std::to_string(index)));
  SessionResult res = run_session(sc, *mp.target, *mp.draft, task.timeline, task.question);

  std::cout << "question: " << task.question << "\n";
  std::cout << "duration_s: " << fmt(task.timeline.duration_s(), 1) << "\n";
  for (const RoundRecord& r : res.rounds) {
    std::cout << "round " << r.round << (r.recovered ? " [recovered]" : "") << "\n";
    if (r.dense_frame_count > 0)
      std::cout << "  dense frames: " << r.dense_frame_count << "\n";
    if (!r.proposed_frames.empty()) {
      std::cout << "  proposed:";
      for (double t : r.proposed_frames) std::cout << " " << fmt_frame_ts(t);
      std::cout << "\n";
    }
    std::cout << "  think: " << r.think << "\n";
    if (r.segment)
      std::cout << "  segment: " << serialize_segment(*r.segment) << "\n";
    if (r.answer) std::cout << "  answer: " << *r.answer << "\n";
  }
  std::cout << "terminated_by: " << termination_name(res.terminated_by) << "\n";
  std::cout << "rounds_used: " << res.rounds_used << "\n";
  std::cout << "target_frames: " << res.total_target_frames << "\n";
  std::cout << "latency_s: " << fmt(res.latency.total) << "\n";

  RewardBreakdown rt = score_target(res.target_texts, task.gold.answer,
                                    task.gold.evidence_spans);
  std::cout << "target_reward: total=" << fmt(rt.total) << " format=" << fmt(rt.format, 0)
            << " answer=" << fmt(rt.answer, 0) << " iou=" << fmt(rt.iou) << "\n";
  HashEmbeddingProvider provider(task.timeline.dim(), pc.seed);
  RewardBreakdown rd = score_draft(res.draft_texts, task.question, task.timeline, provider,
                                   sc.per_iter_frames);
  std::cout << "draft_reward: total=" << fmt(rd.total) << " format=" << fmt(rd.format, 0)
            << " visual=" << fmt(rd.visual) << "\n";

  TrajectoryRecord rec =
      record_from_session("run-" + std::to_string(index), task.question, task.gold, res,
                          task.timeline.duration_s(), "cli-run");
  std::string out_path = (fs::path(opts.out_dir) / "trajectory.jsonl").string();
  save_trajectories(out_path, {rec});
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench: strategy sweep over a synthetic population

struct Strategy {
  std::string label;
  int init_frames = 0, per_iter = 0, t_max = 0;
};

Strategy parse_strategy(const std::string& s) {
  // "10+2x3" -> init 10, per-iteration 2, max 3 rounds
  Strategy st;
  st.label = s;
  std::size_t plus = s.find('+');
  std::size_t x = s.find('x', plus == std::string::npos ? 0 : plus);
  if (plus == std::string::npos || x == std::string::npos)
    throw ConfigError("bench strategy must look like 10+2x3, got: " + s);
  try {
    st.init_frames = std::stoi(s.substr(0, plus));
    st.per_iter = std::stoi(s.substr(plus + 1, x - plus - 1));
    st.t_max = std::stoi(s.substr(x + 1));
  } catch (const std::exception&) {
    throw ConfigError("bench strategy must look like 10+2x3, got: " + s);
  }
  return st;
}

int cmd_bench(CommonOpts& opts) {
  finalize_opts(opts);
  SessionConfig base = make_session_config(opts);
  PopulationConfig pc = make_population_config(opts);
  auto tasks = synth_population(pc);

  std::vector<Strategy> strategies;
  for (const std::string& s :
       split_csv(get_str(opts.cfg, "bench.strategies", "10+2x3,4+4x3,13+1x3")))
    strategies.push_back(parse_strategy(s));
  if (strategies.empty()) throw ConfigError("bench.strategies is empty");

  std::string out_path = (fs::path(opts.out_dir) / "bench_metrics.csv").string();
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write: " + out_path);
  out << "strategy,budget,accuracy_pct,mean_latency_s,mean_frames,mean_iterations,efficiency\n";

  for (const Strategy& st : strategies) {
    SessionConfig sc = base;
    sc.init_frames = st.init_frames;
    sc.per_iter_frames = st.per_iter;
    sc.t_max = st.t_max;
    try {
      sc.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("strategy ") + st.label + ": " + e.what());
    }

    std::vector<SessionResult> results(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), opts.workers, [&](int i) {
      ModelPair mp = make_models(opts, sc, tasks[static_cast<std::size_t>(i)].gold,
                                 derive_seed(opts.seed, "task:" + std::to_string(i)));
      results[static_cast<std::size_t>(i)] =
          run_session(sc, *mp.target, *mp.draft, tasks[static_cast<std::size_t>(i)].timeline,
                      tasks[static_cast<std::size_t>(i)].question);
    });

    std::vector<GoldSpec> golds;
    golds.reserve(tasks.size());
    for (const Task& t : tasks) golds.push_back(t.gold);
    MetricsReport m = aggregate_metrics(results, golds);
    long long budget = frame_budget(st.init_frames, st.per_iter, st.t_max);
    out << st.label << "," << budget << "," << fmt(m.accuracy_pct, 1) << ","
        << fmt(m.mean_latency_s) << "," << fmt(m.mean_frames, 2) << ","
        << fmt(m.mean_iterations, 2) << "," << fmt(m.efficiency, 1) << "\n";
    std::cout << st.label << ": accuracy " << fmt(m.accuracy_pct, 1) << "%, latency "
              << fmt(m.mean_latency_s) << " s, efficiency " << fmt(m.efficiency, 1) << "\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// niah: depth x length retrieval accuracy matrix

int cmd_niah(CommonOpts& opts) {
  finalize_opts(opts);
  SessionConfig sc = make_session_config(opts);

  std::vector<int> lengths;
  for (const std::string& s :
       split_csv(get_str(opts.cfg, "niah.lengths", "200,500,1000,2000"))) {
    int v = 0;
    try {
      v = std::stoi(s);
    } catch (const std::exception&) {
      throw ConfigError("niah.lengths: not an integer: " + s);
    }
    if (v < 1) throw ConfigError("niah.lengths: must be positive: " + s);
    lengths.push_back(v);
  }
  std::vector<double> depths;
  for (const std::string& s : split_csv(
           get_str(opts.cfg, "niah.depths", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"))) {
    double v = 0.0;
    try {
      v = std::stod(s);
    } catch (const std::exception&) {
      throw ConfigError("niah.depths: not a number: " + s);
    }
    if (v < 0.0 || v > 1.0) throw ConfigError("niah.depths: must be in [0,1]: " + s);
    depths.push_back(v);
  }
  int width = static_cast<int>(get_int(opts.cfg, "niah.width", 1));
  if (lengths.empty() || depths.empty()) throw ConfigError("niah grid is empty");

  const int cells = static_cast<int>(lengths.size() * depths.size());
  std::vector<int> hits(static_cast<std::size_t>(cells), 0);
  parallel_for(cells, opts.workers, [&](int c) {
    std::size_t li = static_cast<std::size_t>(c) % lengths.size();
    std::size_t di = static_cast<std::size_t>(c) / lengths.size();
    NiahSpec spec;
    spec.haystack_frames = lengths[li];
    spec.depth_fraction = depths[di];
    spec.needle_frames = width;
    spec.distractor_seed = derive_seed(opts.seed, "niah-cell:" + std::to_string(c));
    Task task = synth_niah(spec, 32, opts.seed);
    ModelPair mp = make_models(opts, sc, task.gold,
                               derive_seed(opts.seed, "task:" + std::to_string(c)));
    SessionResult res = run_session(sc, *mp.target, *mp.draft, task.timeline, task.question);
    hits[static_cast<std::size_t>(c)] = answer_reward(res.answer, task.gold.answer);
  });

  std::string out_path = (fs::path(opts.out_dir) / "niah_accuracy.csv").string();
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write: " + out_path);
  out << "depth";
  for (int L : lengths) out << ",len" << L;
  out << "\n";
  int total = 0;
  for (std::size_t di = 0; di < depths.size(); ++di) {
    out << fmt(depths[di], 2);
    for (std::size_t li = 0; li < lengths.size(); ++li) {
      int h = hits[di * lengths.size() + li];
      total += h;
      out << "," << fmt(h, 1);
    }
    out << "\n";
  }
  double overall = 100.0 * total / cells;
  std::cout << "overall accuracy: " << fmt(overall, 1) << "% over " << cells << " cells\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// validate: trajectory corpus checking

int cmd_validate(CommonOpts& opts, const std::string& path, double threshold, bool lenient) {
  finalize_opts(opts);
  auto records = load_trajectories(path);
  int passed = 0;
  std::map<std::string, int> histogram;
  for (const TrajectoryRecord& rec : records) {
    ValidationReport rep = validate_trajectory(rec, threshold);
    if (rep.pass) {
      ++passed;
    } else {
      for (const ValidationFailure& f : rep.failures) ++histogram[failure_code_name(f.code)];
    }
  }
  int failed = static_cast<int>(records.size()) - passed;
  std::cout << "records: " << records.size() << "\n";
  std::cout << "passed: " << passed << "\n";
  std::cout << "failed: " << failed << "\n";
  for (const auto& [code, count] : histogram)
    std::cout << "  " << code << ": " << count << "\n";
  return (failed == 0 || lenient) ? 0 : 1;
}

// ---------------------------------------------------------------------------
// grpo: score a rollout file

int cmd_grpo(CommonOpts& opts, const std::string& path) {
  finalize_opts(opts);
  GrpoConfig gc;
  gc.beta = get_double(opts.cfg, "grpo.beta", gc.beta);
  gc.clip_eps = get_double(opts.cfg, "grpo.clip_eps", gc.clip_eps);

  auto rollouts = load_rollouts(path);
  double objective = 0.0;
  try {
    objective = grpo_objective(rollouts, gc);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  // per-group advantages in first-appearance order
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    if (!members.count(rollouts[i].group)) group_order.push_back(rollouts[i].group);
    members[rollouts[i].group].push_back(i);
  }
  std::vector<double> advantage(rollouts.size(), 0.0);
  double kl_sum = 0.0;
  for (const std::string& g : group_order) {
    std::vector<double> rewards;
    for (std::size_t i : members[g]) rewards.push_back(rollouts[i].reward);
    std::vector<double> adv = group_advantages(rewards, gc.std_floor);
    std::cout << "group " << g << " advantages:";
    for (std::size_t k = 0; k < adv.size(); ++k) {
      advantage[members[g][k]] = adv[k];
      std::cout << " " << fmt(adv[k], 6);
    }
    std::cout << "\n";
  }
  for (const Rollout& r : rollouts) kl_sum += kl_estimate(r);
  std::cout << "objective: " << fmt(objective, 8) << "\n";
  std::cout << "mean_kl: " << fmt(kl_sum / static_cast<double>(rollouts.size()), 8) << "\n";

  std::string out_path = (fs::path(opts.out_dir) / "rollouts_scored.jsonl").string();
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write: " + out_path);
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    std::string line = rollout_to_json(rollouts[i]);
    // augment the closing brace with the computed terms
    line.pop_back();
    line += ",\"advantage\":" + fmt(advantage[i], 9) +
            ",\"kl\":" + fmt(kl_estimate(rollouts[i]), 9) + "}";
    out << line << "\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speculative temporal reasoning engine"};
  app.require_subcommand(1);

  CommonOpts run_opts, bench_opts, niah_opts, validate_opts, grpo_opts;
  std::string validate_path, grpo_path;
  double validate_threshold = 0.5;
  bool validate_lenient = false;

  CLI::App* run = app.add_subcommand("run", "execute one session and print the transcript");
  add_common_flags(run, run_opts);

  CLI::App* bench =
      app.add_subcommand("bench", "sweep sampling strategies over a synthetic population");
  add_common_flags(bench, bench_opts);

  CLI::App* niah =
      app.add_subcommand("niah", "needle-in-a-haystack retrieval accuracy matrix");
  add_common_flags(niah, niah_opts);

  CLI::App* validate = app.add_subcommand("validate", "check a trajectory corpus");
  add_common_flags(validate, validate_opts);
  validate->add_option("path", validate_path, "trajectory JSONL file")->required();
  validate->add_option("--threshold", validate_threshold, "minimum per-round IoU");
  validate->add_flag("--lenient", validate_lenient, "exit 0 even when records fail");

  CLI::App* grpo = app.add_subcommand("grpo", "score a rollout file");
  add_common_flags(grpo, grpo_opts);
  grpo->add_option("path", grpo_path, "rollout JSONL file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (bench->parsed()) return cmd_bench(bench_opts);
    if (niah->parsed()) return cmd_niah(niah_opts);
    if (validate->parsed())
      return cmd_validate(validate_opts, validate_path, validate_threshold, validate_lenient);
    if (grpo->parsed()) return cmd_grpo(grpo_opts, grpo_path);
  } catch (const SessionAborted& e) {
    std::cerr << "session aborted: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

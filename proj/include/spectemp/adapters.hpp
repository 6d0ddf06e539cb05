#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectemp/protocol.hpp"
#include "spectemp/timeline.hpp"

namespace spectemp {

struct ModelReply {
  std::string text;
  std::optional<std::vector<double>> token_logprobs;  // absent for scripted backends
  int decode_tokens = 0;
};

// Invocation surface shared by scripted oracles and remote backends.
class ModelInterface {
 public:
  virtual ~ModelInterface() = default;
  virtual ModelReply invoke(const std::string& prompt,
                            const std::vector<FrameRef>& frames) = 0;
};

// Ground truth a scripted backend plays against: the answer, dual-level
// evidence annotations, and the round at which the target may answer.
struct GoldSpec {
  std::string answer;
  std::vector<Segment> evidence_spans;
  std::vector<double> evidence_frames;
  int reveal_round = 0;

  void validate() const;  // evidence frames must lie inside some span
};

// Deterministic scripted target. Emits <answer> once the verify rounds
// elapsed reach reveal_round and (for reveal_round >= 1) a gold evidence
// frame has been shown; otherwise requests the first uncovered gold span.
// Holds per-session state; create one per session.
class OracleTargetModel : public ModelInterface {
 public:
  explicit OracleTargetModel(GoldSpec gold) : gold_(std::move(gold)) {
    gold_.validate();
  }
  ModelReply invoke(const std::string& prompt,
                    const std::vector<FrameRef>& frames) override;

  bool evidence_seen() const;
  int rounds_elapsed() const { return rounds_elapsed_; }

 private:
  Segment next_segment() const;
  GoldSpec gold_;
  std::vector<double> seen_;
  int rounds_elapsed_ = 0;
};

// Deterministic scripted draft: proposes up to `limit` timestamps from the
// dense frames it is shown, preferring exact gold evidence frames, then
// frames nearest to evidence. Stateless per invocation.
class OracleDraftModel : public ModelInterface {
 public:
  OracleDraftModel(GoldSpec gold, int limit) : gold_(std::move(gold)), limit_(limit) {}
  ModelReply invoke(const std::string& prompt,
                    const std::vector<FrameRef>& frames) override;

 private:
  GoldSpec gold_;
  int limit_;
};

// Corruption knobs for the noisy oracle. All zero reproduces the
// deterministic oracle byte for byte.
struct NoiseConfig {
  double wrong_answer_prob = 0.0;      // epsilon
  double format_corrupt_prob = 0.0;    // phi
  double segment_jitter_s = 0.0;       // j: endpoints shifted by +-U(0, j)
  std::uint64_t seed = 0;
};

class NoisyTargetModel : public ModelInterface {
 public:
  NoisyTargetModel(GoldSpec gold, NoiseConfig noise)
      : inner_(std::move(gold)), noise_(noise) {}
  ModelReply invoke(const std::string& prompt,
                    const std::vector<FrameRef>& frames) override;

 private:
  OracleTargetModel inner_;
  NoiseConfig noise_;
  std::uint64_t calls_ = 0;
};

class NoisyDraftModel : public ModelInterface {
 public:
  NoisyDraftModel(GoldSpec gold, int limit, NoiseConfig noise)
      : inner_(std::move(gold), limit), noise_(noise) {}
  ModelReply invoke(const std::string& prompt,
                    const std::vector<FrameRef>& frames) override;

 private:
  OracleDraftModel inner_;
  NoiseConfig noise_;
  std::uint64_t calls_ = 0;
};

}  // namespace spectemp

#pragma once

#include <string>
#include <vector>

#include "spectemp/adapters.hpp"

namespace spectemp {

// OpenAI-compatible chat-completion endpoint. Frames default to textual
// placeholders ("[frame t=4.0s]"); attach_images switches to image_url
// entries built from image_url_pattern (with "{t}" substituted).
struct RemoteConfig {
  std::string base_url;  // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  double temperature = 0.0;
  int max_tokens = 512;
  int max_attempts = 3;
  double timeout_s = 30.0;
  double backoff_base_s = 0.5;  // doubles per retry
  bool attach_images = false;
  std::string image_url_pattern;  // e.g. file:///frames/{t}.jpg
};

// Thread safe: per-request state only.
class RemoteModel : public ModelInterface {
 public:
  explicit RemoteModel(RemoteConfig cfg);
  ModelReply invoke(const std::string& prompt,
                    const std::vector<FrameRef>& frames) override;

 private:
  RemoteConfig cfg_;
};

// Builds the request body for one invocation (exposed for tests).
std::string build_chat_request(const RemoteConfig& cfg, const std::string& prompt,
                               const std::vector<FrameRef>& frames);

}  // namespace spectemp

#include "spectemp/remote.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "spectemp/common.hpp"

namespace spectemp {

using nlohmann::json;

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

std::string build_chat_request(const RemoteConfig& cfg, const std::string& prompt,
                               const std::vector<FrameRef>& frames) {
  json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  json msg;
  msg["role"] = "user";
  if (cfg.attach_images) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", prompt}});
    for (const FrameRef& f : frames) {
      std::string url =
          replace_all(cfg.image_url_pattern, "{t}", fmt_frame_ts(f.timestamp_s));
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    msg["content"] = std::move(content);
  } else {
    std::string text = prompt;
    if (!frames.empty()) {
      text += "\nAttached frames:";
      for (const FrameRef& f : frames)
        text += " [frame t=" + fmt_frame_ts(f.timestamp_s) + "s]";
    }
    msg["content"] = std::move(text);
  }
  body["messages"] = json::array({std::move(msg)});
  return body.dump();
}

RemoteModel::RemoteModel(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw ConfigError("remote adapter: base_url not configured");
  if (cfg_.model.empty()) throw ConfigError("remote adapter: model not configured");
}

ModelReply RemoteModel::invoke(const std::string& prompt,
                               const std::vector<FrameRef>& frames) {
  std::string body = build_chat_request(cfg_, prompt, frames);
  std::string last_error;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0) {
      double delay = cfg_.backoff_base_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    auto res = client.Post(cfg_.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      json parsed;
      try {
        parsed = json::parse(res->body);
      } catch (const json::exception& e) {
        throw RemoteRejected(res->status, std::string("unparseable body: ") + e.what());
      }
      ModelReply reply;
      reply.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      if (parsed.contains("usage") && parsed["usage"].contains("completion_tokens"))
        reply.decode_tokens = parsed["usage"]["completion_tokens"].get<int>();
      else
        reply.decode_tokens = static_cast<int>((reply.text.size() + 3) / 4);
      return reply;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;  // retry server errors
    }
    throw RemoteRejected(res->status, res->body);
  }
  throw RemoteUnavailable("remote endpoint unavailable after " +
                          std::to_string(cfg_.max_attempts) + " attempts: " + last_error);
}

}  // namespace spectemp

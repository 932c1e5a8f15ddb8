#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Reinfer Contributors

/**
 * @file http_backend.hpp
 * @brief Live backend speaking the chat-completions wire protocol.
 *
 * Requests carry model, system+user messages, temperature, max_tokens,
 * top_p, frequency/presence penalties, logprobs and top_logprobs; responses
 * must include per-token top-logprob candidate lists. The API key is read
 * from a configurable environment variable (default RI_API_KEY) and sent as
 * a bearer token.
 */

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include <reinfer/backend.hpp>
#include <reinfer/error.hpp>

namespace reinfer {

struct HttpBackendConfig {
  /// Full URL of the chat-completions route, e.g.
  /// "https://api.example.com/v1/chat/completions". A bare origin gets the
  /// conventional "/v1/chat/completions" path appended.
  std::string endpoint;
  std::string api_key_env = "RI_API_KEY";
  int connect_timeout_s = 10;
  int read_timeout_s = 300;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    fail(ErrorCode::InvalidArgument,
         "endpoint must include a scheme, got '" + endpoint + "'");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos)
    return SplitUrl{endpoint, "/v1/chat/completions"};
  return SplitUrl{endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

inline FinishReason parse_finish_reason(const std::string& s) {
  if (s == "stop") return FinishReason::Stop;
  if (s == "length") return FinishReason::Length;
  return FinishReason::Other;
}

}  // namespace detail

class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    url_ = detail::split_endpoint(config_.endpoint);
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      api_key_ = key;
  }

  ModelOutput complete(const PromptPair& prompt,
                       const InferenceParams& params) override {
    const std::string body = request_body(prompt, params);

    // One client per request keeps the backend safe under concurrent
    // issuance; connection reuse is not worth the locking here.
    httplib::Client client(url_.origin);
    client.set_connection_timeout(config_.connect_timeout_s, 0);
    client.set_read_timeout(config_.read_timeout_s, 0);
    httplib::Headers headers;
    if (!api_key_.empty())
      headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(url_.path, headers, body, "application/json");
    if (!res)
      fail(ErrorCode::TransportError,
           "request to " + url_.origin + " failed: " +
               httplib::to_string(res.error()));
    if (res->status >= 500)
      fail(ErrorCode::TransportError,
           "server returned status " + std::to_string(res->status));
    if (res->status >= 400)
      fail(ErrorCode::ProtocolError,
           "request rejected with status " + std::to_string(res->status) +
               ": " + res->body);
    return parse_response(res->body);
  }

  const char* kind() const override { return "live"; }

  static std::string request_body(const PromptPair& prompt,
                                  const InferenceParams& params) {
    nlohmann::ordered_json j;
    j["model"] = params.model_name;
    j["messages"] = {{{"role", "system"}, {"content", prompt.system}},
                     {{"role", "user"}, {"content", prompt.user}}};
    j["temperature"] = params.temperature;
    j["max_tokens"] = params.max_tokens;
    j["top_p"] = params.top_p;
    j["frequency_penalty"] = params.frequency_penalty;
    j["presence_penalty"] = params.presence_penalty;
    j["logprobs"] = params.logprobs_enabled;
    if (params.logprobs_enabled) j["top_logprobs"] = params.top_logprobs;
    return j.dump();
  }

  static ModelOutput parse_response(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ProtocolError,
           std::string("response is not valid JSON: ") + e.what());
    }
    try {
      const auto& choices = j.at("choices");
      if (!choices.is_array() || choices.empty())
        fail(ErrorCode::ProtocolError, "response has no choices");
      const auto& choice = choices.at(0);
      ModelOutput out;
      out.text = choice.at("message").at("content").get<std::string>();
      if (choice.contains("finish_reason") &&
          choice.at("finish_reason").is_string())
        out.finish_reason = detail::parse_finish_reason(
            choice.at("finish_reason").get<std::string>());
      if (choice.contains("logprobs") && choice.at("logprobs").is_object()) {
        const auto& content = choice.at("logprobs").value(
            "content", nlohmann::json::array());
        for (const auto& tok : content) {
          TokenLogprobs tl;
          tl.token = tok.at("token").get<std::string>();
          tl.logprob = tok.at("logprob").get<double>();
          for (const auto& cand :
               tok.value("top_logprobs", nlohmann::json::array()))
            tl.top.push_back(TokenCandidate{
                cand.at("token").get<std::string>(),
                cand.at("logprob").get<double>()});
          out.token_logprobs.push_back(std::move(tl));
        }
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ProtocolError,
           std::string("malformed chat-completions response: ") + e.what());
    }
  }

 private:
  HttpBackendConfig config_;
  detail::SplitUrl url_;
  std::string api_key_;
};

}  // namespace reinfer

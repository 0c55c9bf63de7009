// Copyright 2026 The authorbias Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "authorbias/error.h"
#include "authorbias/gateway.h"
#include "json.hpp"

namespace authorbias {

using nlohmann::json;

void GenerationRequest::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

void HttpGatewayConfig::validate() const {
  if (base_url.empty()) throw ConfigError("gateway base_url is empty");
  if (model_id.empty()) throw ConfigError("gateway model_id is empty");
  if (parallelism == 0) throw ConfigError("gateway parallelism must be >= 1");
  if (!(timeout_s > 0.0)) throw ConfigError("gateway timeout_s must be > 0");
  if (max_retries < 0) throw ConfigError("gateway max_retries must be >= 0");
}

std::string build_chat_request(const GenerationRequest& req, const std::string& model_id) {
  json body = {
      {"model", model_id},
      {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
      {"temperature", req.temperature},
      {"max_tokens", req.max_tokens},
  };
  if (req.want_logprobs) body["logprobs"] = true;
  if (req.seed) body["seed"] = *req.seed;
  return body.dump();
}

RawGeneration parse_chat_completion(const std::string& body, const RequestTag& tag,
                                    bool want_logprobs, const std::string& fallback_model) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw GenerationError(std::string("response is not JSON: ") + e.what());
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty())
    throw GenerationError("response has no choices");
  const json& choice = (*choices)[0];

  RawGeneration gen;
  gen.tag = tag;
  gen.model_id = j.value("model", fallback_model);
  const auto msg = choice.find("message");
  if (msg != choice.end() && msg->contains("content") && (*msg)["content"].is_string()) {
    gen.text = (*msg)["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    gen.text = choice["text"].get<std::string>();
  } else {
    throw GenerationError("response choice has no message content");
  }

  if (!want_logprobs) return gen;

  const auto lp = choice.find("logprobs");
  if (lp == choice.end() || lp->is_null() || !lp->contains("content") || !(*lp)["content"].is_array()) {
    gen.logprobs_missing = true;
    return gen;
  }
  std::string rebuilt;
  for (const auto& t : (*lp)["content"]) {
    if (!t.contains("token") || !t.contains("logprob") || !t["logprob"].is_number()) {
      gen.logprobs_missing = true;
      gen.tokens.clear();
      return gen;
    }
    double logprob = t["logprob"].get<double>();
    // Some servers emit tiny positive values from float rounding.
    if (logprob > 0.0 && logprob < 1e-6) logprob = 0.0;
    if (logprob > 0.0 || std::isnan(logprob)) {
      gen.logprobs_missing = true;
      gen.tokens.clear();
      return gen;
    }
    gen.tokens.push_back({t["token"].get<std::string>(), logprob});
    rebuilt += gen.tokens.back().text;
  }
  if (rebuilt != gen.text) {
    spdlog::warn("tokens do not reconstruct the answer for {}; logprobs dropped", tag.key());
    gen.tokens.clear();
    gen.logprobs_missing = true;
  }
  return gen;
}

HttpChatGateway::HttpChatGateway(HttpGatewayConfig config) : config_(std::move(config)) {
  config_.validate();
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

RawGeneration HttpChatGateway::generate(const GenerationRequest& req) {
  req.validate();
  httplib::Client client(config_.base_url);
  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string body = build_chat_request(req, config_.model_id);

  std::string last_error;
  double backoff = config_.backoff_initial_s;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff = std::min(backoff * 2.0, config_.backoff_max_s);
    }
    auto res = client.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      spdlog::warn("{} (attempt {}/{}) for {}", last_error, attempt + 1, config_.max_retries + 1,
                   req.tag.key());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthError(fmt::format("endpoint rejected credentials (HTTP {})", res->status));
    if (res->status == 429 || res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      spdlog::warn("{} (attempt {}/{}) for {}", last_error, attempt + 1, config_.max_retries + 1,
                   req.tag.key());
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw GenerationError(fmt::format("HTTP {}: {}", res->status, res->body));

    RawGeneration gen = parse_chat_completion(res->body, req.tag, req.want_logprobs, config_.model_id);
    if (gen.logprobs_missing)
      spdlog::warn("no usable logprobs for {}; confidence metrics disabled for it", req.tag.key());
    return gen;
  }
  throw GenerationError(fmt::format("giving up after {} attempts: {}", config_.max_retries + 1, last_error));
}

}  // namespace authorbias

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

#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "authorbias/context.h"
#include "authorbias/corpus.h"

namespace authorbias {

struct RequestTag {
  std::string query_id;
  std::string condition;

  std::string key() const { return query_id + '\t' + condition; }
  bool operator==(const RequestTag&) const = default;
  auto operator<=>(const RequestTag&) const = default;
};

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 512;
  bool want_logprobs = true;
  RequestTag tag;
  std::optional<std::uint64_t> seed;
  // Structured view of the prompt's context. Only the oracle generator reads
  // it; must outlive the generate() call.
  const ContextAssembly* context = nullptr;

  void validate() const;
};

struct TokenLogprob {
  std::string text;
  double logprob = 0.0;

  bool operator==(const TokenLogprob&) const = default;
};

struct RawGeneration {
  std::string text;
  std::vector<TokenLogprob> tokens;
  std::string model_id;
  RequestTag tag;
  // Logprobs were requested but the endpoint did not return usable ones.
  bool logprobs_missing = false;

  bool operator==(const RawGeneration&) const = default;
};

class GenerationGateway {
 public:
  virtual ~GenerationGateway() = default;
  virtual RawGeneration generate(const GenerationRequest& req) = 0;
  virtual std::string model_id() const = 0;
};

// ---------------------------------------------------------------------------
// Remote chat-completion endpoint.

struct HttpGatewayConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model_id;
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t parallelism = 4;
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_initial_s = 0.5;
  double backoff_max_s = 8.0;

  void validate() const;
};

std::string build_chat_request(const GenerationRequest& req, const std::string& model_id);

// Parses a chat-completion response body. Tokens whose texts do not
// reconstruct the message are dropped and the record is flagged
// logprobs_missing. Throws GenerationError on an unusable body.
RawGeneration parse_chat_completion(const std::string& body, const RequestTag& tag,
                                    bool want_logprobs, const std::string& fallback_model);

class HttpChatGateway : public GenerationGateway {
 public:
  explicit HttpChatGateway(HttpGatewayConfig config);

  RawGeneration generate(const GenerationRequest& req) override;
  std::string model_id() const override { return config_.model_id; }
  const HttpGatewayConfig& config() const { return config_; }

 private:
  HttpGatewayConfig config_;
  std::string api_key_;
};

// ---------------------------------------------------------------------------
// Oracle generator with a planted authorship bias.

inline constexpr double kOracleDelta = 0.2;

struct OraclePolicy {
  double bias_strength = 0.0;  // beta in [-1, 1]; positive favors human-labeled docs
  double cite_relevant_base = 0.7;
  double extra_cite_rate = 0.1;
  double confidence_relevant = 0.95;
  double confidence_nonrelevant = 0.85;
  std::uint64_t seed = 0;

  void validate() const;
};

// Cite probability for one document under the policy. Unlabeled documents get
// the base rate; human-kind labels shift it by +beta*delta, llm-kind by -beta*delta.
double oracle_cite_probability(const OraclePolicy& policy, bool relevant,
                               const std::optional<AuthorLabel>& label);

// Draws are seeded by (policy.seed, query_id) and consumed once per context
// slot, so two labelings of the same context share their random numbers.
RawGeneration oracle_generate(const ContextAssembly& ctx, const OraclePolicy& policy);

class OracleGateway : public GenerationGateway {
 public:
  explicit OracleGateway(OraclePolicy policy);
  RawGeneration generate(const GenerationRequest& req) override;
  std::string model_id() const override { return "oracle"; }
  const OraclePolicy& policy() const { return policy_; }

 private:
  OraclePolicy policy_;
};

// Scripted gateway for tests and offline runs.
class MockGateway : public GenerationGateway {
 public:
  using Handler = std::function<RawGeneration(const GenerationRequest&)>;

  explicit MockGateway(Handler handler, std::string model = "mock");
  RawGeneration generate(const GenerationRequest& req) override;
  std::string model_id() const override { return model_; }
  std::size_t calls() const;

  // Echoes the passage of a paraphrase prompt unchanged.
  static std::unique_ptr<MockGateway> identity_paraphraser();

 private:
  Handler handler_;
  std::string model_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Persisted generation log and concurrent runner.

struct GenerationRecord {
  RequestTag tag;
  bool ok = false;
  RawGeneration generation;
  std::string error;

  bool operator==(const GenerationRecord&) const = default;
};

std::string to_json_line(const GenerationRecord& rec);
GenerationRecord record_from_json_line(const std::string& line);

// Append-only JSONL log with a single serialized writer.
class GenerationLog {
 public:
  explicit GenerationLog(std::string path);
  void append(const GenerationRecord& rec);
  const std::string& path() const { return path_; }

  // Reads every record; throws ParseError on a malformed line.
  static std::vector<GenerationRecord> read(const std::string& path);

 private:
  std::string path_;
  std::ofstream out_;
  std::mutex mu_;
};

struct RunnerOptions {
  std::size_t parallelism = 1;
};

// Issues requests concurrently. Results are returned in request order.
// Per-request failures are recorded (ok = false) and do not stop the run;
// an AuthError stops outstanding work and is rethrown.
std::vector<GenerationRecord> run_generations(GenerationGateway& gateway,
                                              const std::vector<GenerationRequest>& requests,
                                              const RunnerOptions& options, GenerationLog* log);

// Rewrites a human document through the gateway. The result is
// "<doc_id>::synthetic", llm-authored, and linked back via paraphrase_of.
Document paraphrase(GenerationGateway& gateway, const Document& doc, double temperature = 0.0,
                    const PromptTemplate& tmpl = default_paraphrase_template());

inline constexpr const char* kSyntheticSuffix = "::synthetic";

// Parses "First Last" pairs from free-form model output: numbered or bulleted
// lines, "(First, Last)", "First, Last", or "First Last".
std::vector<std::pair<std::string, std::string>> parse_name_list(const std::string& text);

// Asks the gateway for a name pool, retrying once when fewer than `size`
// distinct pairs come back. Throws GenerationError after the retry.
NamePool generate_name_pool(GenerationGateway& gateway, std::uint64_t seed,
                            std::size_t size = kDefaultNamePoolSize);

}  // namespace authorbias

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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "authorbias/error.h"
#include "authorbias/gateway.h"
#include "authorbias/rng.h"
#include "json.hpp"

namespace authorbias {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Oracle

void OraclePolicy::validate() const {
  if (!(bias_strength >= -1.0 && bias_strength <= 1.0)) throw ConfigError("oracle bias_strength must be in [-1, 1]");
  for (double p : {cite_relevant_base, extra_cite_rate})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("oracle probabilities must be in [0, 1]");
  for (double c : {confidence_relevant, confidence_nonrelevant})
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("oracle confidences must be in (0, 1]");
}

double oracle_cite_probability(const OraclePolicy& policy, bool relevant,
                               const std::optional<AuthorLabel>& label) {
  double p = relevant ? policy.cite_relevant_base : policy.extra_cite_rate;
  if (label) {
    const double shift = policy.bias_strength * kOracleDelta;
    p += is_human_kind(label->kind) ? shift : -shift;
  }
  return std::clamp(p, 0.0, 1.0);
}

namespace {

std::string sanitize_body(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == '[') c = '(';
    if (c == ']') c = ')';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

RawGeneration oracle_generate(const ContextAssembly& ctx, const OraclePolicy& policy) {
  Rng rng(derive_seed(policy.seed, "oracle", ctx.query_id));
  std::vector<std::size_t> cited;
  for (const auto& d : ctx.docs) {
    const double u = rng.uniform();
    if (u < oracle_cite_probability(policy, ctx.is_relevant(d.index), d.label)) cited.push_back(d.index);
  }

  std::string body = "No answer found in the provided documents.";
  const auto rel = std::find_if(cited.begin(), cited.end(), [&](std::size_t i) { return ctx.is_relevant(i); });
  if (rel != cited.end()) {
    body = sanitize_body(ctx.docs[*rel].text);
  } else if (!cited.empty()) {
    body = sanitize_body(ctx.docs[cited.front()].text);
  }

  RawGeneration gen;
  gen.model_id = "oracle";
  gen.tag.query_id = ctx.query_id;
  gen.tokens.push_back({body + " ", 0.0});
  for (std::size_t i : cited) {
    const double conf = ctx.is_relevant(i) ? policy.confidence_relevant : policy.confidence_nonrelevant;
    gen.tokens.push_back({"[", 0.0});
    gen.tokens.push_back({std::to_string(i), std::log(conf)});
    gen.tokens.push_back({"]", 0.0});
  }
  gen.tokens.push_back({".", 0.0});
  for (const auto& t : gen.tokens) gen.text += t.text;
  return gen;
}

OracleGateway::OracleGateway(OraclePolicy policy) : policy_(policy) { policy_.validate(); }

RawGeneration OracleGateway::generate(const GenerationRequest& req) {
  if (!req.context) throw GenerationError("oracle generator needs the structured context");
  RawGeneration gen = oracle_generate(*req.context, policy_);
  gen.tag = req.tag;
  if (!req.want_logprobs) gen.tokens.clear();
  return gen;
}

// ---------------------------------------------------------------------------
// Mock

MockGateway::MockGateway(Handler handler, std::string model)
    : handler_(std::move(handler)), model_(std::move(model)) {}

RawGeneration MockGateway::generate(const GenerationRequest& req) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  RawGeneration gen = handler_(req);
  gen.tag = req.tag;
  if (gen.model_id.empty()) gen.model_id = model_;
  return gen;
}

std::size_t MockGateway::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::unique_ptr<MockGateway> MockGateway::identity_paraphraser() {
  return std::make_unique<MockGateway>(
      [](const GenerationRequest& req) {
        static const std::string marker = "Passage: ";
        const auto pos = req.prompt.rfind(marker);
        RawGeneration gen;
        gen.text = pos == std::string::npos ? req.prompt : req.prompt.substr(pos + marker.size());
        return gen;
      },
      "mock-identity");
}

// ---------------------------------------------------------------------------
// Log

std::string to_json_line(const GenerationRecord& rec) {
  json tokens = json::array();
  for (const auto& t : rec.generation.tokens) tokens.push_back(json::array({t.text, t.logprob}));
  json j = {
      {"query_id", rec.tag.query_id},
      {"condition", rec.tag.condition},
      {"status", rec.ok ? "ok" : "failed"},
      {"model_id", rec.generation.model_id},
      {"text", rec.generation.text},
      {"tokens", tokens},
      {"logprobs_missing", rec.generation.logprobs_missing},
      {"error", rec.error},
  };
  return j.dump();
}

GenerationRecord record_from_json_line(const std::string& line) {
  json j = json::parse(line);
  GenerationRecord rec;
  rec.tag = {j.at("query_id").get<std::string>(), j.at("condition").get<std::string>()};
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw std::invalid_argument("bad status " + status);
  rec.ok = status == "ok";
  rec.generation.tag = rec.tag;
  rec.generation.model_id = j.value("model_id", "");
  rec.generation.text = j.value("text", "");
  rec.generation.logprobs_missing = j.value("logprobs_missing", false);
  for (const auto& t : j.value("tokens", json::array()))
    rec.generation.tokens.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
  rec.error = j.value("error", "");
  return rec;
}

GenerationLog::GenerationLog(std::string path)
    : path_(std::move(path)), out_(path_, std::ios::app | std::ios::binary) {
  if (!out_) throw Error("cannot append to " + path_);
}

void GenerationLog::append(const GenerationRecord& rec) {
  const std::string line = to_json_line(rec);
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error("write failed on " + path_);
}

std::vector<GenerationRecord> GenerationLog::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<GenerationRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw ParseError(path, lineno, std::string("bad generation record: ") + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runner

std::vector<GenerationRecord> run_generations(GenerationGateway& gateway,
                                              const std::vector<GenerationRequest>& requests,
                                              const RunnerOptions& options, GenerationLog* log) {
  std::vector<GenerationRecord> results(requests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      const auto& req = requests[i];
      GenerationRecord rec;
      rec.tag = req.tag;
      try {
        rec.generation = gateway.generate(req);
        rec.generation.tag = req.tag;
        rec.ok = true;
      } catch (const AuthError&) {
        std::lock_guard lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        stop = true;
        return;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        spdlog::warn("generation failed for {}: {}", req.tag.key(), e.what());
      }
      if (log) log->append(rec);
      results[i] = std::move(rec);
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(options.parallelism, requests.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  return results;
}

// ---------------------------------------------------------------------------
// Paraphrase and name pool

Document paraphrase(GenerationGateway& gateway, const Document& doc, double temperature,
                    const PromptTemplate& tmpl) {
  if (doc.actual_author != Author::Human || doc.paraphrase_of)
    throw ValidationError("only original human documents can be paraphrased: " + doc.doc_id);
  GenerationRequest req;
  req.prompt = substitute(tmpl.body, {{"passage", doc.text}});
  req.temperature = temperature;
  req.max_tokens = 1024;
  req.want_logprobs = false;
  req.tag = {doc.doc_id, "paraphrase"};
  RawGeneration gen = gateway.generate(req);

  std::string text = gen.text;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw GenerationError("empty paraphrase for " + doc.doc_id);
  text = text.substr(first, text.find_last_not_of(" \t\r\n") - first + 1);

  Document out;
  out.doc_id = doc.doc_id + kSyntheticSuffix;
  out.text = std::move(text);
  out.actual_author = Author::LLM;
  out.paraphrase_of = doc.doc_id;
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"'");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n\"'");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_name_list(const std::string& text) {
  static const std::regex paren(R"(\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\))");
  static const std::regex numbering(R"(^\s*(?:\d+\s*[.):-]|[-*])\s*)");
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::pair<std::string, std::string>> found;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), paren); it != std::sregex_iterator(); ++it)
      found.emplace_back(trim((*it)[1].str()), trim((*it)[2].str()));
    if (found.empty()) {
      std::string s = trim(std::regex_replace(line, numbering, ""));
      if (s.empty() || s.back() == ':') continue;
      const auto comma = s.find(',');
      if (comma != std::string::npos) {
        found.emplace_back(trim(s.substr(0, comma)), trim(s.substr(comma + 1)));
      } else {
        std::istringstream words(s);
        std::vector<std::string> w;
        for (std::string x; words >> x;) w.push_back(x);
        if (w.size() == 2) found.emplace_back(w[0], w[1]);
      }
    }
    for (auto& p : found)
      if (!p.first.empty() && !p.second.empty() && p.first.find(' ') == std::string::npos &&
          p.second.find(' ') == std::string::npos)
        out.push_back(std::move(p));
  }
  return out;
}

NamePool generate_name_pool(GenerationGateway& gateway, std::uint64_t seed, std::size_t size) {
  std::size_t last_distinct = 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    GenerationRequest req;
    req.prompt = name_pool_instruction();
    req.temperature = 1.0;
    req.max_tokens = 2048;
    req.want_logprobs = false;
    req.seed = derive_seed(seed, "name_pool", std::to_string(attempt));
    req.tag = {"name_pool", fmt::format("attempt{}", attempt)};
    const auto pairs = parse_name_list(gateway.generate(req).text);

    NamePool pool;
    std::set<std::pair<std::string, std::string>> seen;
    bool duplicate = false;
    for (const auto& p : pairs) {
      if (!seen.insert(p).second) {
        duplicate = true;
        continue;
      }
      pool.names.push_back(p);
    }
    last_distinct = pool.names.size();
    if (!duplicate && pool.names.size() >= size) {
      pool.names.resize(size);
      return pool;
    }
    spdlog::warn("name pool attempt {} returned {} distinct pairs{}; need {}", attempt + 1,
                 pool.names.size(), duplicate ? " with duplicates" : "", size);
  }
  throw GenerationError(fmt::format("name pool generation returned {} distinct pairs after retry; need {}",
                                    last_distinct, size));
}

}  // namespace authorbias

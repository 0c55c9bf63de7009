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

#include "authorbias/pipeline.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "authorbias/error.h"
#include "authorbias/rng.h"
#include "authorbias/synthetic.h"
#include "json.hpp"

namespace authorbias {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kPlacementFilterDepth = 10;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out.flush()) throw Error("cannot write " + path);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Rejects keys outside `allowed` so typos in config files surface early.
void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(fmt::format("\"{}\" must be an object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, where));
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("bad value for \"{}\"", key));
  }
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

AuthorshipConfig parse_authorship(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw ConfigError("authorship must look like \"human-llm\", got \"" + s + "\"");
  try {
    return {author_from_string(s.substr(0, dash)), author_from_string(s.substr(dash + 1))};
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

std::vector<ConditionSpec> RunConfig::specs() const {
  std::vector<ConditionSpec> out;
  for (const auto& actual : authorship) {
    for (auto cond : conditions) {
      if (cond.mode == RagMode::Vanilla) cond.label_scheme = LabelScheme::Tokens;
      out.push_back({cond, actual, k});
    }
  }
  return out;
}

bool RunConfig::uses_llm_documents() const {
  return std::any_of(authorship.begin(), authorship.end(), [](const AuthorshipConfig& a) {
    return a.relevant == Author::LLM || a.nonrelevant == Author::LLM;
  });
}

bool RunConfig::uses_names() const {
  return std::any_of(conditions.begin(), conditions.end(), [](const RagCondition& c) {
    return c.mode != RagMode::Vanilla && c.label_scheme == LabelScheme::ExtendedNames;
  });
}

void RunConfig::validate() const {
  if (k == 0) throw ConfigError("k must be positive");
  if (conditions.empty()) throw ConfigError("no conditions configured");
  if (authorship.empty()) throw ConfigError("no authorship configuration");
  for (const auto& c : conditions) c.validate();
  std::set<std::string> ids;
  for (const auto& s : specs())
    if (!ids.insert(s.id()).second) throw ConfigError("condition listed twice: " + s.id());
  std::set<AuthorshipConfig> seen;
  for (const auto& a : authorship)
    if (!seen.insert(a).second) throw ConfigError("authorship configuration listed twice");
  if (retriever.kind == RetrieverKind::RunFile && retriever.run_file.empty())
    throw ConfigError("retriever.run_file is required for the run_file retriever");
  retriever.params.validate();
  const std::size_t need = placement == Placement::RandomRelevant ? std::max(k, kPlacementFilterDepth) : k;
  if (retriever.depth < need) throw ConfigError(fmt::format("retriever.depth must be at least {}", need));
  if (sweep_ks.empty() || std::find(sweep_ks.begin(), sweep_ks.end(), 0u) != sweep_ks.end())
    throw ConfigError("sweep.k must list positive cutoffs");
  if (!(audit.threshold >= 0.0 && audit.threshold <= 1.0)) throw ConfigError("audit.threshold must be in [0, 1]");
  if (!(audit.fraction > 0.0 && audit.fraction <= 1.0)) throw ConfigError("audit.fraction must be in (0, 1]");
  if (parallelism == 0) throw ConfigError("parallelism must be positive");
  if (generator.kind == GeneratorKind::Oracle) {
    try {
      generator.oracle.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  } else {
    generator.http.validate();
  }
}

RunConfig RunConfig::parse(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"benchmark", "retriever", "k", "sample", "seed", "conditions", "authorship", "placement",
                           "sweep", "generator", "audit", "templates", "name_pool", "parallelism", "output_dir"});
  RunConfig c;

  if (!j.contains("benchmark")) throw ConfigError("config needs a \"benchmark\" section");
  const auto& b = j.at("benchmark");
  check_keys(b, "benchmark", {"queries", "collection", "qrels", "synthetic"});
  read_opt(b, "queries", c.queries);
  read_opt(b, "collection", c.collection);
  read_opt(b, "qrels", c.qrels);
  read_opt(b, "synthetic", c.synthetic);
  if (c.queries.empty() || c.collection.empty() || c.qrels.empty())
    throw ConfigError("benchmark needs queries, collection, and qrels paths");

  if (auto it = j.find("retriever"); it != j.end()) {
    check_keys(*it, "retriever", {"kind", "k1", "b", "depth", "run_file"});
    std::string kind = "bm25";
    read_opt(*it, "kind", kind);
    if (kind == "bm25") c.retriever.kind = RetrieverKind::Bm25;
    else if (kind == "run_file") c.retriever.kind = RetrieverKind::RunFile;
    else throw ConfigError("unknown retriever \"" + kind + "\"");
    read_opt(*it, "k1", c.retriever.params.k1);
    read_opt(*it, "b", c.retriever.params.b);
    read_opt(*it, "depth", c.retriever.depth);
    read_opt(*it, "run_file", c.retriever.run_file);
  }
  read_opt(j, "k", c.k);
  if (auto it = j.find("sample"); it != j.end()) {
    check_keys(*it, "sample", {"size"});
    read_opt(*it, "size", c.sample_size);
  }
  read_opt(j, "seed", c.seed);

  if (!j.contains("conditions") || !j.at("conditions").is_array())
    throw ConfigError("config needs a \"conditions\" array");
  for (const auto& cj : j.at("conditions")) {
    check_keys(cj, "condition", {"mode", "labels", "relevant", "nonrelevant"});
    RagCondition cond;
    std::string mode;
    read_opt(cj, "mode", mode);
    cond.mode = rag_mode_from_string(mode);
    if (cj.contains("labels")) cond.label_scheme = label_scheme_from_string(cj.at("labels").get<std::string>());
    if (cond.mode == RagMode::Mixed) {
      std::string rel, non;
      read_opt(cj, "relevant", rel);
      read_opt(cj, "nonrelevant", non);
      if (rel.empty() || non.empty()) throw ConfigError("mixed conditions need \"relevant\" and \"nonrelevant\" modes");
      cond.mixed_relevant_mode = rag_mode_from_string(rel);
      cond.mixed_nonrelevant_mode = rag_mode_from_string(non);
    } else if (cj.contains("relevant") || cj.contains("nonrelevant")) {
      throw ConfigError("\"relevant\"/\"nonrelevant\" modes are only valid for mixed conditions");
    }
    c.conditions.push_back(cond);
  }
  if (auto it = j.find("authorship"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("\"authorship\" must be an array");
    c.authorship.clear();
    for (const auto& a : *it) c.authorship.push_back(parse_authorship(a.get<std::string>()));
  }
  if (auto it = j.find("placement"); it != j.end()) {
    const auto p = it->get<std::string>();
    if (p == "ranked") c.placement = Placement::Ranked;
    else if (p == "random_relevant") c.placement = Placement::RandomRelevant;
    else throw ConfigError("unknown placement \"" + p + "\"");
  }
  if (auto it = j.find("sweep"); it != j.end()) {
    check_keys(*it, "sweep", {"k"});
    read_opt(*it, "k", c.sweep_ks);
  }

  // Unless given, the oracle seed is derived from the root seed.
  c.generator.oracle.seed = derive_seed(c.seed, "oracle");
  if (auto it = j.find("generator"); it != j.end()) {
    const auto& g = *it;
    std::string kind = "oracle";
    read_opt(g, "kind", kind);
    read_opt(g, "temperature", c.generator.temperature);
    read_opt(g, "max_tokens", c.generator.max_tokens);
    if (kind == "oracle") {
      check_keys(g, "generator", {"kind", "temperature", "max_tokens", "bias_strength", "cite_relevant_base",
                                  "extra_cite_rate", "confidence_relevant", "confidence_nonrelevant", "seed"});
      c.generator.kind = GeneratorKind::Oracle;
      auto& o = c.generator.oracle;
      read_opt(g, "bias_strength", o.bias_strength);
      read_opt(g, "cite_relevant_base", o.cite_relevant_base);
      read_opt(g, "extra_cite_rate", o.extra_cite_rate);
      read_opt(g, "confidence_relevant", o.confidence_relevant);
      read_opt(g, "confidence_nonrelevant", o.confidence_nonrelevant);
      read_opt(g, "seed", o.seed);
    } else if (kind == "http") {
      check_keys(g, "generator", {"kind", "temperature", "max_tokens", "base_url", "path", "model", "api_key_env",
                                  "timeout_s", "max_retries", "backoff_initial_s", "backoff_max_s"});
      c.generator.kind = GeneratorKind::Http;
      auto& h = c.generator.http;
      read_opt(g, "base_url", h.base_url);
      read_opt(g, "path", h.path);
      read_opt(g, "model", h.model_id);
      read_opt(g, "api_key_env", h.api_key_env);
      read_opt(g, "timeout_s", h.timeout_s);
      read_opt(g, "max_retries", h.max_retries);
      read_opt(g, "backoff_initial_s", h.backoff_initial_s);
      read_opt(g, "backoff_max_s", h.backoff_max_s);
    } else {
      throw ConfigError("unknown generator \"" + kind + "\"");
    }
  }
  if (auto it = j.find("audit"); it != j.end()) {
    check_keys(*it, "audit", {"verdicts", "threshold", "fraction"});
    read_opt(*it, "verdicts", c.audit.verdicts);
    read_opt(*it, "threshold", c.audit.threshold);
    read_opt(*it, "fraction", c.audit.fraction);
  }
  if (auto it = j.find("templates"); it != j.end()) {
    check_keys(*it, "templates", {"vanilla", "informed"});
    read_opt(*it, "vanilla", c.vanilla_template);
    read_opt(*it, "informed", c.informed_template);
  }
  read_opt(j, "name_pool", c.name_pool);
  read_opt(j, "parallelism", c.parallelism);
  read_opt(j, "output_dir", c.output_dir);

  for (auto* p : {&c.queries, &c.collection, &c.qrels, &c.synthetic, &c.retriever.run_file, &c.audit.verdicts,
                  &c.vanilla_template, &c.informed_template, &c.name_pool, &c.output_dir})
    *p = resolve(base_dir, *p);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse(text, fs::path(path).parent_path().string());
}

std::string RunConfig::to_json() const {
  json conds = json::array();
  for (const auto& c : conditions) {
    json cj = {{"mode", to_string(c.mode)}};
    if (c.mode != RagMode::Vanilla) cj["labels"] = to_string(c.label_scheme);
    if (c.mode == RagMode::Mixed) {
      cj["relevant"] = to_string(*c.mixed_relevant_mode);
      cj["nonrelevant"] = to_string(*c.mixed_nonrelevant_mode);
    }
    conds.push_back(cj);
  }
  json auth = json::array();
  for (const auto& a : authorship) auth.push_back(fmt::format("{}-{}", to_string(a.relevant), to_string(a.nonrelevant)));
  json gen;
  if (generator.kind == GeneratorKind::Oracle) {
    const auto& o = generator.oracle;
    gen = {{"kind", "oracle"},
           {"bias_strength", o.bias_strength},
           {"cite_relevant_base", o.cite_relevant_base},
           {"extra_cite_rate", o.extra_cite_rate},
           {"confidence_relevant", o.confidence_relevant},
           {"confidence_nonrelevant", o.confidence_nonrelevant},
           {"seed", o.seed}};
  } else {
    const auto& h = generator.http;
    gen = {{"kind", "http"},         {"base_url", h.base_url},       {"path", h.path},
           {"model", h.model_id},    {"api_key_env", h.api_key_env}, {"timeout_s", h.timeout_s},
           {"max_retries", h.max_retries}, {"backoff_initial_s", h.backoff_initial_s},
           {"backoff_max_s", h.backoff_max_s}};
  }
  gen["temperature"] = generator.temperature;
  gen["max_tokens"] = generator.max_tokens;
  json j = {
      {"benchmark", {{"queries", queries}, {"collection", collection}, {"qrels", qrels}, {"synthetic", synthetic}}},
      {"retriever",
       {{"kind", retriever.kind == RetrieverKind::Bm25 ? "bm25" : "run_file"},
        {"k1", retriever.params.k1},
        {"b", retriever.params.b},
        {"depth", retriever.depth},
        {"run_file", retriever.run_file}}},
      {"k", k},
      {"sample", {{"size", sample_size}}},
      {"seed", seed},
      {"conditions", conds},
      {"authorship", auth},
      {"placement", placement == Placement::Ranked ? "ranked" : "random_relevant"},
      {"sweep", {{"k", sweep_ks}}},
      {"generator", gen},
      {"audit", {{"verdicts", audit.verdicts}, {"threshold", audit.threshold}, {"fraction", audit.fraction}}},
      {"templates", {{"vanilla", vanilla_template}, {"informed", informed_template}}},
      {"name_pool", name_pool},
      {"parallelism", parallelism},
      {"output_dir", output_dir},
  };
  return j.dump(2) + "\n";
}

const std::string& config_schema() {
  static const std::string schema = R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "authorbias run config",
  "type": "object",
  "additionalProperties": false,
  "required": ["benchmark", "conditions"],
  "properties": {
    "benchmark": {
      "type": "object",
      "additionalProperties": false,
      "required": ["queries", "collection", "qrels"],
      "properties": {
        "queries": {"type": "string", "description": "JSONL: query_id, text, gold_answers"},
        "collection": {"type": "string", "description": "JSONL: doc_id, text, actual_author, paraphrase_of?"},
        "qrels": {"type": "string", "description": "TREC qrels: query_id iter doc_id grade"},
        "synthetic": {"type": "string", "description": "JSONL of synthetic documents merged into the collection"}
      }
    },
    "retriever": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["bm25", "run_file"], "default": "bm25"},
        "k1": {"type": "number", "default": 0.9},
        "b": {"type": "number", "default": 0.4},
        "depth": {"type": "integer", "minimum": 1, "default": 100},
        "run_file": {"type": "string"}
      }
    },
    "k": {"type": "integer", "minimum": 1, "default": 10},
    "sample": {
      "type": "object",
      "additionalProperties": false,
      "properties": {"size": {"type": "integer", "minimum": 0, "default": 0}}
    },
    "seed": {"type": "integer", "minimum": 0, "default": 0},
    "conditions": {
      "type": "array",
      "minItems": 1,
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["mode"],
        "properties": {
          "mode": {"enum": ["vanilla", "informed", "cf_informed", "mixed"]},
          "labels": {"enum": ["tokens", "names"], "default": "tokens"},
          "relevant": {"enum": ["informed", "cf_informed"]},
          "nonrelevant": {"enum": ["informed", "cf_informed"]}
        }
      }
    },
    "authorship": {
      "type": "array",
      "items": {"enum": ["human-human", "human-llm", "llm-human", "llm-llm"]},
      "default": ["human-human"]
    },
    "placement": {"enum": ["ranked", "random_relevant"], "default": "ranked"},
    "sweep": {
      "type": "object",
      "additionalProperties": false,
      "properties": {"k": {"type": "array", "items": {"type": "integer", "minimum": 1}, "default": [2, 5, 8, 10]}}
    },
    "generator": {
      "type": "object",
      "properties": {
        "kind": {"enum": ["oracle", "http"], "default": "oracle"},
        "temperature": {"type": "number", "default": 0},
        "max_tokens": {"type": "integer", "default": 512},
        "bias_strength": {"type": "number", "minimum": -1, "maximum": 1, "default": 0},
        "cite_relevant_base": {"type": "number", "default": 0.7},
        "extra_cite_rate": {"type": "number", "default": 0.1},
        "confidence_relevant": {"type": "number", "default": 0.95},
        "confidence_nonrelevant": {"type": "number", "default": 0.85},
        "seed": {"type": "integer", "minimum": 0},
        "base_url": {"type": "string"},
        "path": {"type": "string", "default": "/v1/chat/completions"},
        "model": {"type": "string"},
        "api_key_env": {"type": "string", "default": "OPENAI_API_KEY"},
        "timeout_s": {"type": "number", "default": 60},
        "max_retries": {"type": "integer", "default": 3},
        "backoff_initial_s": {"type": "number", "default": 0.5},
        "backoff_max_s": {"type": "number", "default": 8}
      }
    },
    "audit": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "verdicts": {"type": "string"},
        "threshold": {"type": "number", "minimum": 0, "maximum": 1, "default": 1},
        "fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1, "default": 0.1}
      }
    },
    "templates": {
      "type": "object",
      "additionalProperties": false,
      "properties": {"vanilla": {"type": "string"}, "informed": {"type": "string"}}
    },
    "name_pool": {"type": "string", "description": "CSV with header first,last"},
    "parallelism": {"type": "integer", "minimum": 1, "default": 4},
    "output_dir": {"type": "string"}
  }
}
)";
  return schema;
}

// ---------------------------------------------------------------------------
// Context records and scoring

std::string to_json_line(const ContextRecord& rec) {
  json j = {{"query_id", rec.query_id},   {"condition", rec.spec.id()},
            {"doc_ids", rec.doc_ids},     {"labels", rec.labels},
            {"relevant", rec.relevant_set}, {"gold_answers", rec.gold_answers},
            {"prompt_sha256", rec.prompt_sha256}};
  return j.dump();
}

ContextRecord context_record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  ContextRecord r;
  r.query_id = j.at("query_id").get<std::string>();
  r.spec = ConditionSpec::parse(j.at("condition").get<std::string>());
  r.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  r.labels = j.at("labels").get<std::vector<std::string>>();
  r.relevant_set = j.at("relevant").get<std::set<std::size_t>>();
  r.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
  r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
  return r;
}

ScoredGeneration score_generation(const ContextRecord& ctx, const RawGeneration& gen) {
  const auto cits = parse_citations(gen.text, ctx.spec.k);
  const auto attr = score_attribution(cits, ctx.relevant_set);
  ScoredGeneration out;
  out.score.query_id = ctx.query_id;
  out.score.condition = ctx.spec.id();
  out.score.precision = attr.precision;
  out.score.recall = attr.recall;
  out.score.em = exact_match(gen.text, ctx.gold_answers);
  out.score.n_cited = attr.n_cited;
  out.score.n_cited_relevant = attr.n_cited_relevant;
  out.score.out_of_range = cits.out_of_range;
  out.confidence = extract_citation_confidence(gen, cits, ctx.relevant_set);
  return out;
}

MetricReport aggregate(const std::vector<ContextRecord>& contexts, const std::vector<GenerationRecord>& records,
                       std::vector<QueryScore>* scores) {
  std::vector<ConditionRun> runs;
  std::unordered_map<std::string, std::size_t> run_of;
  std::unordered_map<std::string, const ContextRecord*> ctx_of;
  std::vector<std::size_t> expected;
  for (const auto& c : contexts) {
    const std::string cid = c.spec.id();
    auto [it, fresh] = run_of.emplace(cid, runs.size());
    if (fresh) {
      runs.push_back({c.spec, {}, {}, 0});
      expected.push_back(0);
    }
    ++expected[it->second];
    if (!ctx_of.emplace(RequestTag{c.query_id, cid}.key(), &c).second)
      throw ValidationError("context listed twice: " + c.query_id + " / " + cid);
  }
  for (const auto& rec : records) {
    auto it = ctx_of.find(rec.tag.key());
    if (it == ctx_of.end())
      throw ValidationError("generation record without a context: " + rec.tag.query_id + " / " + rec.tag.condition);
    if (!rec.ok) continue;
    auto& run = runs[run_of.at(rec.tag.condition)];
    if (run.scores.count(rec.tag.query_id)) continue;
    auto scored = score_generation(*it->second, rec.generation);
    run.scores.emplace(rec.tag.query_id, scored.score);
    if (scored.confidence) run.confidence.emplace(rec.tag.query_id, std::move(*scored.confidence));
  }
  for (std::size_t i = 0; i < runs.size(); ++i) runs[i].n_failed = expected[i] - runs[i].scores.size();
  if (scores) {
    scores->clear();
    for (const auto& run : runs)
      for (const auto& [_, s] : run.scores) scores->push_back(s);
  }
  return build_report(runs);
}

// ---------------------------------------------------------------------------
// Stages

PreparedQueries prepare_queries(const RunConfig& config, const Benchmark& bench) {
  PreparedQueries out;
  const std::size_t depth = config.retriever.depth;

  if (config.retriever.kind == RetrieverKind::Bm25) {
    Collection originals;
    for (const auto& [id, doc] : bench.collection)
      if (!doc.paraphrase_of) originals.emplace(id, doc);
    const Bm25Index index(originals);
    for (const auto& q : bench.queries) out.ranked.emplace(q.query_id, index.retrieve(q, depth, config.retriever.params));
  } else {
    auto loaded = load_run_file(config.retriever.run_file, depth);
    for (const auto& w : loaded.warnings) spdlog::warn("{}", w);
    out.ranked = std::move(loaded.lists);
  }

  ContextMap candidates;
  const std::size_t filter_depth = config.placement == Placement::Ranked ? config.k : kPlacementFilterDepth;
  for (const auto& q : bench.queries) {
    auto it = out.ranked.find(q.query_id);
    if (it == out.ranked.end()) continue;
    auto ids = it->second.doc_ids();
    if (ids.size() < filter_depth) continue;
    ids.resize(filter_depth);
    candidates.emplace(q.query_id, std::move(ids));
  }
  auto filtered = filter_single_relevant(bench, candidates);
  out.missing = std::move(filtered.missing);

  for (const auto& qid : filtered.retained) {
    if (config.placement == Placement::Ranked) {
      out.contexts.emplace(qid, candidates.at(qid));
      out.retained.push_back(qid);
      continue;
    }
    const auto& ranked = out.ranked.at(qid);
    std::string relevant;
    for (const auto& d : candidates.at(qid))
      if (bench.qrels.relevant(qid, d)) relevant = d;
    // Other relevant documents deeper in the list are dropped so the context
    // keeps exactly one.
    RankedList pool{qid, {}, ranked.k};
    for (const auto& e : ranked.entries)
      if (!bench.qrels.relevant(qid, e.doc_id)) pool.entries.push_back(e);
    if (pool.entries.size() + 1 < config.k) continue;
    const auto placed = place_relevant_random(pool, relevant, config.k, derive_seed(config.seed, "placement", qid));
    out.contexts.emplace(qid, placed.doc_ids());
    out.retained.push_back(qid);
  }

  if (config.sample_size == 0 || config.sample_size >= out.retained.size()) {
    if (config.sample_size > out.retained.size())
      spdlog::warn("sample size {} exceeds the {} retained queries; using all", config.sample_size,
                   out.retained.size());
    out.sampled = out.retained;
  } else {
    out.sampled = sample_ids(out.retained, config.sample_size, derive_seed(config.seed, "sample"));
  }
  std::sort(out.sampled.begin(), out.sampled.end());
  return out;
}

namespace {

struct Manifest {
  std::string dir;
  json j;

  void stage(const std::string& name) {
    if (dir.empty()) return;
    j["stages"].push_back({{"stage", name}, {"completed_at", utc_now()}});
    j["last_completed_stage"] = name;
    write_text((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
  }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<ContextRecord> read_contexts(const std::string& path) {
  std::vector<ContextRecord> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    try {
      out.push_back(context_record_from_json_line(line));
    } catch (const std::exception& e) {
      throw ParseError(path, lineno, e.what());
    }
  }
  return out;
}

void check_audit_gate(const RunConfig& config) {
  if (!config.uses_llm_documents()) return;
  if (config.audit.verdicts.empty())
    throw AuditGateError("LLM-authored documents are in use but no audit verdicts are configured (audit.verdicts)");
  AuditSummary summary;
  try {
    summary = summarize_worksheet(config.audit.verdicts, config.audit.threshold);
  } catch (const ValidationError& e) {
    throw AuditGateError(e.what());
  }
  if (!summary.gate_open())
    throw AuditGateError(fmt::format("audit pass rate {:.1f}% is below the {:.1f}% threshold",
                                     100.0 * summary.pass_rate(), 100.0 * summary.threshold));
  spdlog::info("audit gate open: {}/{} items passed", summary.passed, summary.total);
}

PromptTemplates load_templates(const RunConfig& config) {
  PromptTemplates t;
  if (!config.vanilla_template.empty())
    t.vanilla = load_prompt_template(config.vanilla_template, default_vanilla_template().row);
  if (!config.informed_template.empty())
    t.informed = load_prompt_template(config.informed_template, default_informed_template().row);
  return t;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const Benchmark& bench, GenerationGateway& gateway,
                            const NamePool* pool) {
  config.validate();
  if (config.uses_names() && !pool) throw ConfigError("the names label scheme needs a name pool");
  check_audit_gate(config);
  const SyntheticIndex synthetic = build_synthetic_index(bench.collection);
  if (config.uses_llm_documents() && synthetic.empty())
    throw ConfigError("LLM-authored documents requested but the collection has no synthetic documents");

  PipelineResult result;
  Manifest manifest;
  const bool persist = !config.output_dir.empty();
  if (persist) {
    fs::create_directories(config.output_dir);
    manifest.dir = config.output_dir;
    manifest.j = {{"version", kVersion},
                  {"started_at", utc_now()},
                  {"config", json::parse(config.to_json())},
                  {"model_id", gateway.model_id()},
                  {"stages", json::array()}};
    json digests = json::object();
    for (const auto* p : {&config.queries, &config.collection, &config.qrels, &config.synthetic,
                          &config.retriever.run_file, &config.audit.verdicts, &config.vanilla_template,
                          &config.informed_template, &config.name_pool})
      if (!p->empty() && fs::exists(*p)) digests[*p] = sha256_file(*p);
    manifest.j["input_sha256"] = digests;
    write_text((fs::path(config.output_dir) / "config.json").string(), config.to_json());
    if (pool) save_name_pool(*pool, (fs::path(config.output_dir) / "names.csv").string());
  }
  manifest.stage("ingest");

  result.prepared = prepare_queries(config, bench);
  const auto& prepared = result.prepared;
  spdlog::info("{} queries retained with a single relevant document, {} sampled", prepared.retained.size(),
               prepared.sampled.size());
  if (prepared.sampled.empty()) throw ValidationError("no query has exactly one relevant document in its context");
  if (persist) {
    write_run_file(prepared.ranked, (fs::path(config.output_dir) / "run.trec").string());
    std::string text;
    for (const auto& q : prepared.sampled) text += q + "\n";
    write_text((fs::path(config.output_dir) / "queries.txt").string(), text);
  }
  manifest.stage("retrieve");

  const PromptTemplates templates = load_templates(config);
  const auto specs = config.specs();
  const std::uint64_t label_seed = derive_seed(config.seed, "labels");
  std::vector<ContextAssembly> assemblies;
  assemblies.reserve(specs.size() * prepared.sampled.size());
  std::vector<GenerationRequest> requests;
  for (const auto& spec : specs) {
    const std::string cid = spec.id();
    for (const auto& qid : prepared.sampled) {
      const Query& query = *bench.find_query(qid);
      auto base = assemble_context(bench, synthetic, qid, prepared.contexts.at(qid), spec.actual);
      assemblies.push_back(assign_labels(base, spec.condition, pool, label_seed));
      const ContextAssembly& ctx = assemblies.back();

      GenerationRequest req;
      req.prompt = render_prompt(ctx, spec.condition, query, templates);
      req.temperature = config.generator.temperature;
      req.max_tokens = config.generator.max_tokens;
      req.tag = {qid, cid};
      req.seed = derive_seed(config.seed, "generation", req.tag.key());
      req.context = &ctx;

      ContextRecord rec;
      rec.query_id = qid;
      rec.spec = spec;
      for (const auto& d : ctx.docs) {
        rec.doc_ids.push_back(d.doc_id);
        rec.labels.push_back(d.label ? d.label->display : "");
      }
      rec.relevant_set = ctx.relevant_set;
      rec.gold_answers = query.gold_answers;
      rec.prompt_sha256 = sha256_hex(req.prompt);
      result.contexts.push_back(std::move(rec));
      requests.push_back(std::move(req));
    }
  }
  if (persist) {
    std::string text;
    for (const auto& c : result.contexts) text += to_json_line(c) + "\n";
    write_text((fs::path(config.output_dir) / "contexts.jsonl").string(), text);
  }
  manifest.stage("assemble");

  std::vector<GenerationRecord> records;
  const RunnerOptions runner{config.parallelism};
  if (persist) {
    const std::string log_path = (fs::path(config.output_dir) / "generations.jsonl").string();
    std::unordered_set<std::string> done;
    if (fs::exists(log_path))
      for (const auto& r : GenerationLog::read(log_path)) done.insert(r.tag.key());
    std::vector<GenerationRequest> todo;
    for (const auto& r : requests)
      if (!done.count(r.tag.key())) todo.push_back(r);
    result.resumed = requests.size() - todo.size();
    result.generated = todo.size();
    if (result.resumed) spdlog::info("resuming: {} generations already logged", result.resumed);
    {
      GenerationLog log(log_path);
      run_generations(gateway, todo, runner, &log);
    }
    // Score from the log so a replay sees exactly the same bytes.
    std::unordered_set<std::string> wanted;
    for (const auto& r : requests) wanted.insert(r.tag.key());
    for (auto& r : GenerationLog::read(log_path))
      if (wanted.count(r.tag.key())) records.push_back(std::move(r));
  } else {
    records = run_generations(gateway, requests, runner, nullptr);
    result.generated = requests.size();
  }
  if (std::none_of(records.begin(), records.end(), [](const GenerationRecord& r) { return r.ok; }))
    throw GenerationError(records.empty() ? "no generation records" : "every generation failed: " + records.front().error);
  manifest.stage("generate");

  std::vector<QueryScore> scores;
  result.report = aggregate(result.contexts, records, &scores);
  if (persist) {
    std::string text;
    for (const auto& s : scores) text += to_json_line(s) + "\n";
    write_text((fs::path(config.output_dir) / "scores.jsonl").string(), text);
  }
  manifest.stage("score");
  if (persist) emit_report(result.report, config.output_dir);
  manifest.stage("report");
  return result;
}

namespace {

NamePool resolve_name_pool(const RunConfig& config, GenerationGateway& gateway) {
  if (!config.name_pool.empty()) return load_name_pool(config.name_pool);
  if (!config.output_dir.empty()) {
    const auto saved = fs::path(config.output_dir) / "names.csv";
    if (fs::exists(saved)) return load_name_pool(saved.string());
  }
  if (config.generator.kind == GeneratorKind::Oracle)
    throw ConfigError("the oracle generator cannot produce names; set name_pool");
  return generate_name_pool(gateway, derive_seed(config.seed, "name-pool"));
}

}  // namespace

Benchmark load_config_benchmark(const RunConfig& config) {
  Benchmark bench = load_benchmark(config.queries, config.collection, config.qrels);
  if (!config.synthetic.empty()) {
    for (auto& [id, doc] : load_collection(config.synthetic)) {
      if (!bench.collection.emplace(id, std::move(doc)).second)
        throw ValidationError("synthetic doc_id \"" + id + "\" collides with the collection");
    }
    bench.validate();
  }
  return bench;
}

std::unique_ptr<GenerationGateway> make_gateway(const GeneratorConfig& config, std::size_t parallelism) {
  if (config.kind == GeneratorKind::Oracle) return std::make_unique<OracleGateway>(config.oracle);
  auto http = config.http;
  http.parallelism = parallelism;
  return std::make_unique<HttpChatGateway>(http);
}

PipelineResult run_pipeline(const RunConfig& config) {
  config.validate();
  const Benchmark bench = load_config_benchmark(config);
  auto gateway = make_gateway(config.generator, config.parallelism);
  std::optional<NamePool> pool;
  if (config.uses_names()) pool = resolve_name_pool(config, *gateway);
  return run_pipeline(config, bench, *gateway, pool ? &*pool : nullptr);
}

MetricReport replay_report(const std::string& run_dir) {
  const auto contexts = read_contexts((fs::path(run_dir) / "contexts.jsonl").string());
  const auto records = GenerationLog::read((fs::path(run_dir) / "generations.jsonl").string());
  std::unordered_set<std::string> wanted;
  for (const auto& c : contexts) wanted.insert(RequestTag{c.query_id, c.spec.id()}.key());
  std::vector<GenerationRecord> kept;
  for (const auto& r : records)
    if (wanted.count(r.tag.key())) kept.push_back(r);
  return aggregate(contexts, kept);
}

void emit_report(const MetricReport& report, const std::string& dir, const std::set<ReportFormat>& formats) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());
  const fs::path d(dir);
  if (formats.count(ReportFormat::Markdown)) write_text((d / "report.md").string(), report_to_markdown(report));
  if (formats.count(ReportFormat::Csv)) {
    write_text((d / "report.csv").string(), report_to_csv(report));
    write_text((d / "pairs.csv").string(), pairs_to_csv(report));
  }
  if (formats.count(ReportFormat::Json)) write_text((d / "report.json").string(), report_to_json(report));
}

std::vector<PipelineResult> run_sweep(const RunConfig& config, const Benchmark& bench, GenerationGateway& gateway,
                                      const NamePool* pool) {
  std::vector<PipelineResult> out;
  for (std::size_t k : config.sweep_ks) {
    RunConfig sub = config;
    sub.k = k;
    sub.placement = Placement::RandomRelevant;
    sub.retriever.depth = std::max({config.retriever.depth, k, kPlacementFilterDepth});
    if (!config.output_dir.empty()) sub.output_dir = (fs::path(config.output_dir) / fmt::format("k{}", k)).string();
    spdlog::info("sweep: k = {}", k);
    out.push_back(run_pipeline(sub, bench, gateway, pool));
  }
  return out;
}

std::vector<PipelineResult> run_sweep(const RunConfig& config) {
  config.validate();
  const Benchmark bench = load_config_benchmark(config);
  auto gateway = make_gateway(config.generator, config.parallelism);
  std::optional<NamePool> pool;
  if (config.uses_names()) pool = resolve_name_pool(config, *gateway);
  return run_sweep(config, bench, *gateway, pool ? &*pool : nullptr);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text(path)); }

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const AuditGateError& e) {
    spdlog::error("audit gate: {}", e.what());
    return kExitAuditGate;
  } catch (const GenerationError& e) {
    spdlog::error("generation: {}", e.what());
    return kExitGeneration;
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    spdlog::error("input: {}", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    spdlog::error("input: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitOther;
  }
}

}  // namespace authorbias

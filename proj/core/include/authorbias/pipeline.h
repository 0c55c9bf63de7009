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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "authorbias/bm25.h"
#include "authorbias/context.h"
#include "authorbias/corpus.h"
#include "authorbias/gateway.h"
#include "authorbias/metrics.h"
#include "authorbias/ranked_list.h"
#include "authorbias/scoring.h"

namespace authorbias {

inline constexpr const char* kVersion = "0.3.0";

enum class RetrieverKind { Bm25, RunFile };
enum class GeneratorKind { Oracle, Http };
// Ranked: contexts are the top-k retrieved documents. RandomRelevant: the
// single relevant document is moved to a uniformly random slot of a length-k
// list whose other slots are the leading non-relevant documents.
enum class Placement { Ranked, RandomRelevant };

struct RetrieverConfig {
  RetrieverKind kind = RetrieverKind::Bm25;
  Bm25Params params;
  std::string run_file;
  // Ranked-list depth kept before building contexts. Must be >= k.
  std::size_t depth = 100;
};

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::Oracle;
  OraclePolicy oracle;
  HttpGatewayConfig http;
  double temperature = 0.0;
  int max_tokens = 512;
};

struct AuditConfig {
  std::string verdicts;  // filled worksheet; required when LLM-authored docs are used
  double threshold = 1.0;
  double fraction = 0.1;
};

struct RunConfig {
  std::string queries;
  std::string collection;
  std::string qrels;
  std::string synthetic;  // optional JSONL of synthetic documents
  RetrieverConfig retriever;
  std::size_t k = 10;
  std::size_t sample_size = 0;  // 0 keeps every retained query
  std::uint64_t seed = 0;
  std::vector<RagCondition> conditions;
  std::vector<AuthorshipConfig> authorship{{Author::Human, Author::Human}};
  Placement placement = Placement::Ranked;
  std::vector<std::size_t> sweep_ks{2, 5, 8, 10};
  GeneratorConfig generator;
  AuditConfig audit;
  std::string vanilla_template;
  std::string informed_template;
  std::string name_pool;
  std::size_t parallelism = 4;
  std::string output_dir;

  // Cross product of conditions and authorship at this config's k.
  std::vector<ConditionSpec> specs() const;
  bool uses_llm_documents() const;
  bool uses_names() const;
  // Throws ConfigError.
  void validate() const;

  // JSON form. Relative paths in the file are resolved against base_dir.
  static RunConfig parse(const std::string& json_text, const std::string& base_dir = "");
  static RunConfig load(const std::string& path);
  std::string to_json() const;
};

// The published config schema (JSON Schema draft 2020-12).
const std::string& config_schema();

// ---------------------------------------------------------------------------
// Stage outputs.

struct PreparedQueries {
  RunMap ranked;  // full-depth retrieval
  ContextMap contexts;  // original doc ids per query, length k
  std::vector<std::string> retained;  // single-relevant queries
  std::vector<std::string> missing;
  std::vector<std::string> sampled;
};

// What scoring needs from one assembled context; persisted for replay.
struct ContextRecord {
  std::string query_id;
  ConditionSpec spec;
  std::vector<std::string> doc_ids;
  std::vector<std::string> labels;  // display strings, empty when unlabeled
  std::set<std::size_t> relevant_set;
  std::vector<std::string> gold_answers;
  std::string prompt_sha256;

  bool operator==(const ContextRecord&) const = default;
};

std::string to_json_line(const ContextRecord& rec);
ContextRecord context_record_from_json_line(const std::string& line);

struct ScoredGeneration {
  QueryScore score;
  std::optional<CitationConfidence> confidence;
};

ScoredGeneration score_generation(const ContextRecord& ctx, const RawGeneration& gen);

// Scores every successful record against its context and aggregates. Records
// whose tag has no context are rejected; a context without a successful
// record counts as failed.
MetricReport aggregate(const std::vector<ContextRecord>& contexts, const std::vector<GenerationRecord>& records,
                       std::vector<QueryScore>* scores = nullptr);

// Retrieval, single-relevant filter, placement, and sampling.
PreparedQueries prepare_queries(const RunConfig& config, const Benchmark& bench);

struct PipelineResult {
  MetricReport report;
  PreparedQueries prepared;
  std::vector<ContextRecord> contexts;
  std::size_t generated = 0;  // requests issued in this invocation
  std::size_t resumed = 0;    // requests satisfied from an existing log
};

// Loads the benchmark, builds the gateway named by the config, and runs.
PipelineResult run_pipeline(const RunConfig& config);

// Runs every stage after ingest. When config.output_dir is set, each stage is
// persisted there and existing generation records are reused. `pool` is
// required when a condition uses the names scheme.
PipelineResult run_pipeline(const RunConfig& config, const Benchmark& bench, GenerationGateway& gateway,
                            const NamePool* pool = nullptr);

// Rebuilds the report of a persisted run from contexts.jsonl and
// generations.jsonl alone.
MetricReport replay_report(const std::string& run_dir);

enum class ReportFormat { Markdown, Csv, Json };

// Writes report.md, report.csv (plus pairs.csv), and report.json. Throws Error
// when the directory is not writable.
void emit_report(const MetricReport& report, const std::string& dir,
                 const std::set<ReportFormat>& formats = {ReportFormat::Markdown, ReportFormat::Csv,
                                                          ReportFormat::Json});

// One run per cutoff with random relevant placement, written to
// <output_dir>/k<k>.
std::vector<PipelineResult> run_sweep(const RunConfig& config);
std::vector<PipelineResult> run_sweep(const RunConfig& config, const Benchmark& bench, GenerationGateway& gateway,
                                      const NamePool* pool = nullptr);

// Benchmark named by the config, with its synthetic collection merged in.
Benchmark load_config_benchmark(const RunConfig& config);
std::unique_ptr<GenerationGateway> make_gateway(const GeneratorConfig& config, std::size_t parallelism);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAuditGate = 3;
inline constexpr int kExitGeneration = 4;
inline constexpr int kExitOther = 1;

// Maps the active exception to an exit code; call from a catch block.
int exit_code_for_current_exception();

}  // namespace authorbias

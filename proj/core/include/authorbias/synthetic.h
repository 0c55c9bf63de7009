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
#include <optional>
#include <string>
#include <vector>

#include "authorbias/corpus.h"
#include "authorbias/gateway.h"

namespace authorbias {

struct SkippedDocument {
  std::string doc_id;
  std::string reason;
};

struct SyntheticBuild {
  Collection documents;  // synthetic documents only
  std::vector<SkippedDocument> skipped;
  // Mean of synthetic/original character length over built documents.
  double mean_length_ratio = 0.0;
};

struct SynthesisOptions {
  double temperature = 0.0;
  std::size_t parallelism = 1;
  double max_failure_rate = 0.01;
  PromptTemplate paraphrase_template = default_paraphrase_template();
};

// Paraphrases every original document of the benchmark. Throws
// ValidationError if any source document is already synthetic, and Error if
// more than max_failure_rate of the documents fail.
SyntheticBuild build_synthetic_collection(const Benchmark& bench, GenerationGateway& gateway,
                                          const SynthesisOptions& options = {});

enum class ExpectedStatus { StillRelevant, StillNonRelevant };
enum class Verdict { Pass, Fail };

const char* to_string(ExpectedStatus s);
const char* to_string(Verdict v);

struct AuditItem {
  std::string item_id;
  std::string query_id;
  std::string original_doc_id;
  std::string synthetic_doc_id;
  std::string gold_answer;
  ExpectedStatus expected_status = ExpectedStatus::StillRelevant;
  std::optional<Verdict> verdict;

  bool operator==(const AuditItem&) const = default;
};

struct AuditSample {
  std::vector<AuditItem> items;
  // Queries drawn for the non-relevant check.
  std::vector<std::string> nonrelevant_queries;
};

// One StillRelevant item per query in `query_ids` (its relevant context
// passage) plus, for a seeded `fraction` of those queries, one
// StillNonRelevant item per non-relevant context passage. Pairs whose
// synthetic rewrite is missing are left out.
AuditSample make_audit_sample(const Benchmark& bench, const SyntheticIndex& synthetic,
                              const ContextMap& contexts, const std::vector<std::string>& query_ids,
                              double fraction, std::uint64_t seed);

// Worksheet CSV: item_id, query_text, original_text, synthetic_text,
// gold_answer, expected_status, verdict.
void write_audit_worksheet(const AuditSample& sample, const Benchmark& bench, const std::string& path);

struct AuditSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::map<ExpectedStatus, std::pair<std::size_t, std::size_t>> by_status;  // (passed, total)
  double threshold = 1.0;

  double pass_rate() const { return total ? static_cast<double>(passed) / static_cast<double>(total) : 0.0; }
  bool gate_open() const { return total > 0 && pass_rate() >= threshold; }
};

// Reads verdicts (pass|fail in the verdict column, keyed by item_id) from a
// filled worksheet. Throws ValidationError for an empty item list or listing
// every item without a verdict.
AuditSummary record_audit(std::vector<AuditItem>& items, const std::string& verdicts_path, double threshold = 1.0);

// Re-reads a filled worksheet on its own, for the run-time audit gate.
AuditSummary summarize_worksheet(const std::string& verdicts_path, double threshold = 1.0);

}  // namespace authorbias

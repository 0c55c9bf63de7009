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
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "authorbias/corpus.h"

namespace authorbias {

enum class LabelKind { Human, LLM, AI, NamedPerson };

// NamedPerson counts as human-kind, AI as llm-kind.
inline bool is_human_kind(LabelKind k) { return k == LabelKind::Human || k == LabelKind::NamedPerson; }

inline constexpr const char* kHumanLabel = "[Human]";
inline constexpr const char* kLlmLabel = "[LLM]";
inline constexpr const char* kAiLabel = "[AI]";

struct AuthorLabel {
  LabelKind kind = LabelKind::Human;
  std::string display;

  bool operator==(const AuthorLabel&) const = default;
};

enum class RagMode { Vanilla, Informed, CfInformed, Mixed };
enum class LabelScheme { Tokens, ExtendedNames };

const char* to_string(RagMode m);
const char* to_string(LabelScheme s);
RagMode rag_mode_from_string(const std::string& s);
LabelScheme label_scheme_from_string(const std::string& s);

struct RagCondition {
  RagMode mode = RagMode::Vanilla;
  // Present iff mode == Mixed; each is Informed or CfInformed.
  std::optional<RagMode> mixed_relevant_mode;
  std::optional<RagMode> mixed_nonrelevant_mode;
  LabelScheme label_scheme = LabelScheme::Tokens;

  // Throws ConfigError.
  void validate() const;

  bool operator==(const RagCondition&) const = default;
};

// Actual authorship of the relevant / non-relevant documents placed in context.
struct AuthorshipConfig {
  Author relevant = Author::Human;
  Author nonrelevant = Author::Human;

  bool operator==(const AuthorshipConfig&) const = default;
  auto operator<=>(const AuthorshipConfig&) const = default;
};

// One cell of the experimental grid.
struct ConditionSpec {
  RagCondition condition;
  AuthorshipConfig actual;
  std::size_t k = 10;

  // Stable textual identifier, e.g. "human-llm/informed/tokens/k10" or
  // "human-human/mixed(informed,cf_informed)/names/k10". Vanilla ids omit the
  // label scheme.
  std::string id() const;
  static ConditionSpec parse(const std::string& id);

  bool operator==(const ConditionSpec& o) const { return id() == o.id(); }
};

struct ContextDoc {
  std::size_t index = 0;
  std::string doc_id;
  std::string text;
  Author actual_author = Author::Human;
  std::optional<AuthorLabel> label;

  bool operator==(const ContextDoc&) const = default;
};

struct ContextAssembly {
  std::string query_id;
  std::vector<ContextDoc> docs;
  std::set<std::size_t> relevant_set;
  std::set<std::size_t> nonrelevant_set;

  std::size_t k() const { return docs.size(); }
  bool is_relevant(std::size_t index) const { return relevant_set.count(index) > 0; }
  // Checks index contiguity and the relevant/non-relevant partition.
  void validate() const;

  bool operator==(const ContextAssembly&) const = default;
};

// Builds the context for one query from its ranked original doc ids. Each slot
// holds either the original or its synthetic rewrite, per `actual`. Relevance
// is judged on the original doc id.
ContextAssembly assemble_context(const Benchmark& bench, const SyntheticIndex& synthetic,
                                 const std::string& query_id,
                                 const std::vector<std::string>& original_doc_ids,
                                 AuthorshipConfig actual);

struct NamePool {
  std::vector<std::pair<std::string, std::string>> names;

  std::size_t size() const { return names.size(); }
  // Non-empty, distinct, non-blank pairs. Throws ValidationError.
  void validate() const;
};

inline constexpr std::size_t kDefaultNamePoolSize = 100;

NamePool load_name_pool(const std::string& csv_path);
void save_name_pool(const NamePool& pool, const std::string& csv_path);

AuthorLabel label_for(Author author, LabelScheme scheme, const NamePool* pool, std::size_t name_index);

// Returns a copy of ctx labeled under cond. Under ExtendedNames one pool entry
// is drawn per document position from a stream seeded by (seed, query_id), so
// the same slot receives the same name across conditions.
ContextAssembly assign_labels(const ContextAssembly& ctx, const RagCondition& cond,
                              const NamePool* pool, std::uint64_t seed);

struct PromptTemplate {
  std::string body;  // uses {documents} and {question}
  std::string row;   // uses {index}, {text}, and optionally {author}
};

const PromptTemplate& default_vanilla_template();
const PromptTemplate& default_informed_template();
const PromptTemplate& default_paraphrase_template();  // body uses {passage}
const std::string& name_pool_instruction();

// Template file: lines starting with "#row: " set the row template, the rest
// is the body. Missing row lines keep `fallback_row`.
PromptTemplate load_prompt_template(const std::string& path, const std::string& fallback_row);

// Single-pass replacement of {key} placeholders; unknown keys and text
// inserted by earlier substitutions are left alone.
std::string substitute(const std::string& tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

struct PromptTemplates {
  PromptTemplate vanilla = default_vanilla_template();
  PromptTemplate informed = default_informed_template();
};

std::string render_prompt(const ContextAssembly& ctx, const RagCondition& cond, const Query& query,
                          const PromptTemplates& templates = {});

}  // namespace authorbias

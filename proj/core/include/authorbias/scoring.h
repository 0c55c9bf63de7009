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

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "authorbias/gateway.h"

namespace authorbias {

// One bracketed numeral in an answer. [begin, end) is the byte span of the
// digits, excluding brackets, commas, and spaces.
struct CitationOccurrence {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const CitationOccurrence&) const = default;
};

struct CitationSet {
  std::vector<std::size_t> cited;  // in-range indices in order of appearance
  std::set<std::size_t> distinct;
  std::vector<std::size_t> out_of_range;  // indices >= k, in order of appearance
  std::vector<CitationOccurrence> occurrences;  // in-range only, parallel to `cited`

  bool operator==(const CitationSet&) const = default;
};

// Every bracketed numeral group: "[3]", "[2][5]", "[1, 3]". Numerals longer
// than 9 digits are ignored.
std::vector<CitationOccurrence> find_citations(std::string_view text);

CitationSet parse_citations(std::string_view text, std::size_t k);

// "[a][b]..." over cited then out_of_range; parses back to the same set.
std::string serialize_citations(const CitationSet& cits);

struct AttributionScore {
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
  std::size_t n_cited = 0;
  std::size_t n_cited_relevant = 0;
};

// Set semantics over distinct in-range citations. An empty citation set scores
// precision 0. Throws ValidationError when relevant_set is empty.
AttributionScore score_attribution(const CitationSet& cits, const std::set<std::size_t>& relevant_set);

// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

// 1 iff some normalized gold answer is a substring of the normalized answer.
int exact_match(std::string_view answer, const std::vector<std::string>& gold_answers);

struct CitationProbability {
  std::size_t index = 0;
  double probability = 0.0;
  bool is_relevant = false;

  bool operator==(const CitationProbability&) const = default;
};

struct CitationConfidence {
  std::vector<CitationProbability> items;  // one per aligned citation occurrence
  std::size_t skipped = 0;

  bool operator==(const CitationConfidence&) const = default;
};

// Probability of each citation = exp(sum of logprobs of the tokens covering its
// digits). Returns nullopt when the generation carries no tokens. A citation
// whose covering tokens also cover another citation's digits is skipped.
std::optional<CitationConfidence> extract_citation_confidence(const RawGeneration& gen,
                                                              const CitationSet& cits,
                                                              const std::set<std::size_t>& relevant_set);

struct QueryScore {
  std::string query_id;
  std::string condition;
  double precision = 0.0;
  double recall = 0.0;
  int em = 0;
  std::size_t n_cited = 0;
  std::size_t n_cited_relevant = 0;
  std::vector<std::size_t> out_of_range;

  bool operator==(const QueryScore&) const = default;
};

std::string to_json_line(const QueryScore& s);
QueryScore query_score_from_json_line(const std::string& line);

}  // namespace authorbias

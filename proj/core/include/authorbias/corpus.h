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
#include <unordered_map>
#include <utility>
#include <vector>

namespace authorbias {

enum class Author { Human, LLM };

const char* to_string(Author a);
Author author_from_string(const std::string& s);
inline Author flip(Author a) { return a == Author::Human ? Author::LLM : Author::Human; }

struct Document {
  std::string doc_id;
  std::string text;
  Author actual_author = Author::Human;
  // Set when this document is a synthetic rewrite of another one.
  std::optional<std::string> paraphrase_of;

  bool operator==(const Document&) const = default;
};

struct Query {
  std::string query_id;
  std::string text;
  std::vector<std::string> gold_answers;

  bool operator==(const Query&) const = default;
};

// Relevance judgments keyed by (query_id, doc_id). Grades > 0 are relevant.
class Qrels {
 public:
  void set(const std::string& query_id, const std::string& doc_id, int grade);
  int grade(const std::string& query_id, const std::string& doc_id) const;
  bool relevant(const std::string& query_id, const std::string& doc_id) const {
    return grade(query_id, doc_id) > 0;
  }
  // Relevant doc ids for a query, sorted.
  std::vector<std::string> relevant_docs(const std::string& query_id) const;

  const std::map<std::string, std::map<std::string, int>>& judgments() const { return by_query_; }
  std::size_t size() const;

  bool operator==(const Qrels&) const = default;

 private:
  std::map<std::string, std::map<std::string, int>> by_query_;
};

using Collection = std::map<std::string, Document>;
using ContextMap = std::map<std::string, std::vector<std::string>>;

struct Benchmark {
  std::vector<Query> queries;
  Collection collection;
  Qrels qrels;

  const Query* find_query(const std::string& query_id) const;
  // Validates every invariant; throws ValidationError on the first violation.
  void validate() const;

  bool operator==(const Benchmark&) const = default;
};

// original doc_id -> doc_id of its synthetic rewrite.
using SyntheticIndex = std::unordered_map<std::string, std::string>;
SyntheticIndex build_synthetic_index(const Collection& collection);

std::vector<Query> load_queries(const std::string& path);
Collection load_collection(const std::string& path);
Qrels load_qrels(const std::string& path);

// Loads and cross-validates the three benchmark files.
Benchmark load_benchmark(const std::string& queries_path, const std::string& collection_path,
                         const std::string& qrels_path);

void save_queries(const std::vector<Query>& queries, const std::string& path);
void save_collection(const Collection& collection, const std::string& path);
void save_qrels(const Qrels& qrels, const std::string& path);

struct FilterResult {
  std::vector<std::string> retained;
  // Queries with no entry in the context map.
  std::vector<std::string> missing;
};

// Keeps the queries whose context holds exactly one relevant document.
FilterResult filter_single_relevant(const Benchmark& bench, const ContextMap& contexts);

// Seeded uniform sample without replacement. Sampling n and n+1 with the same
// seed agree on the first n elements.
std::vector<std::string> sample_ids(const std::vector<std::string>& population, std::size_t n,
                                    std::uint64_t seed);
std::vector<std::string> sample_queries(const Benchmark& bench, std::size_t n, std::uint64_t seed);

}  // namespace authorbias

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
#include <string>
#include <vector>

namespace authorbias {

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

// Top-k list for one query. Entries are sorted by score descending with ties
// broken by doc_id ascending; doc ids are distinct and entries.size() <= k.
struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;
  std::size_t k = 10;

  std::vector<std::string> doc_ids() const;
  bool is_canonical() const;
  // Sorts into canonical order. Returns true if the order changed.
  bool canonicalize();

  bool operator==(const RankedList&) const = default;
};

bool ranks_before(const RankedEntry& a, const RankedEntry& b);

using RunMap = std::map<std::string, RankedList>;

struct RunFileLoad {
  RunMap lists;
  std::vector<std::string> warnings;
};

// Reads a TREC run file (query_id Q0 doc_id rank score tag). Rows are ordered
// by score; disagreement with the rank column is reported as a warning. Each
// list is truncated to its first k entries.
RunFileLoad load_run_file(const std::string& path, std::size_t k);
void write_run_file(const RunMap& lists, const std::string& path, const std::string& tag = "authorbias");

// Builds a length-k list holding relevant_doc at a seeded uniformly random
// position, filling the remaining slots with the leading entries of `list`
// that are not relevant_doc, in order. Scores are rewritten to k - position so
// the result stays canonical.
RankedList place_relevant_random(const RankedList& list, const std::string& relevant_doc,
                                 std::size_t k, std::uint64_t seed);

}  // namespace authorbias

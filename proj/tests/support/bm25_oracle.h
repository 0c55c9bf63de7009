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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "authorbias/bm25.h"

namespace authorbias::testing {

// Brute-force scorer: re-tokenizes and scans every document for every term.
inline std::vector<RankedEntry> brute_force(const Collection& c, const std::string& query, std::size_t k, double k1,
                                            double b) {
  auto toks = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char ch : s) {
      if (std::isalnum(ch) || ch >= 0x80) {
        cur += static_cast<char>(std::tolower(ch));
      } else if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  std::map<std::string, std::vector<std::string>> doc_toks;
  double total = 0;
  for (const auto& [id, d] : c) {
    doc_toks[id] = toks(d.text);
    total += static_cast<double>(doc_toks[id].size());
  }
  const double n = static_cast<double>(c.size());
  const double avg = total / n;
  const auto q = toks(query);
  const std::set<std::string> terms(q.begin(), q.end());
  std::vector<RankedEntry> scored;
  for (const auto& [id, dt] : doc_toks) {
    double score = 0;
    bool any = false;
    for (const auto& t : terms) {
      const double tf = static_cast<double>(std::count(dt.begin(), dt.end(), t));
      if (tf == 0) continue;
      any = true;
      double df = 0;
      for (const auto& [_, other] : doc_toks) df += std::count(other.begin(), other.end(), t) > 0 ? 1 : 0;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * static_cast<double>(dt.size()) / avg));
    }
    if (any) scored.push_back({id, score});
  }
  std::sort(scored.begin(), scored.end(), [](const RankedEntry& x, const RankedEntry& y) {
    return x.score != y.score ? x.score > y.score : x.doc_id < y.doc_id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

inline Collection random_collection(std::mt19937_64& gen, std::size_t n_docs, std::size_t vocab) {
  Collection c;
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::string text;
    const std::size_t len = 1 + gen() % 25;
    for (std::size_t i = 0; i < len; ++i) text += "w" + std::to_string(gen() % vocab) + " ";
    const std::string id = "d" + std::to_string(d);
    c.emplace(id, Document{id, text, Author::Human, std::nullopt});
  }
  return c;
}

}  // namespace authorbias::testing

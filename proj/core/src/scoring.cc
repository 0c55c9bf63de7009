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

#include "authorbias/scoring.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <spdlog/spdlog.h>

#include "authorbias/error.h"
#include "json.hpp"

namespace authorbias {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t'; }

}  // namespace

std::vector<CitationOccurrence> find_citations(std::string_view text) {
  std::vector<CitationOccurrence> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '[') {
      ++i;
      continue;
    }
    // Try to read "[ d+ ( , d+ )* ]" starting at i.
    std::vector<CitationOccurrence> group;
    std::size_t j = i + 1;
    bool ok = false;
    while (true) {
      while (j < text.size() && is_space(text[j])) ++j;
      const std::size_t begin = j;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j == begin) break;
      if (j - begin <= 9) {
        group.push_back({static_cast<std::size_t>(std::stoul(std::string(text.substr(begin, j - begin)))),
                         begin, j});
      }
      while (j < text.size() && is_space(text[j])) ++j;
      if (j < text.size() && text[j] == ',') {
        ++j;
        continue;
      }
      if (j < text.size() && text[j] == ']') {
        ok = true;
        ++j;
      }
      break;
    }
    if (ok) {
      out.insert(out.end(), group.begin(), group.end());
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

CitationSet parse_citations(std::string_view text, std::size_t k) {
  CitationSet out;
  for (const auto& occ : find_citations(text)) {
    if (occ.index < k) {
      out.cited.push_back(occ.index);
      out.distinct.insert(occ.index);
      out.occurrences.push_back(occ);
    } else {
      out.out_of_range.push_back(occ.index);
    }
  }
  return out;
}

std::string serialize_citations(const CitationSet& cits) {
  std::string out;
  for (auto i : cits.cited) out += "[" + std::to_string(i) + "]";
  for (auto i : cits.out_of_range) out += "[" + std::to_string(i) + "]";
  return out;
}

AttributionScore score_attribution(const CitationSet& cits, const std::set<std::size_t>& relevant_set) {
  if (relevant_set.empty()) throw ValidationError("attribution scoring needs at least one relevant document");
  AttributionScore s;
  s.n_cited = cits.distinct.size();
  for (auto i : cits.distinct)
    if (relevant_set.count(i)) ++s.n_cited_relevant;
  s.precision = s.n_cited == 0 ? 0.0 : 100.0 * static_cast<double>(s.n_cited_relevant) / static_cast<double>(s.n_cited);
  s.recall = 100.0 * static_cast<double>(s.n_cited_relevant) / static_cast<double>(relevant_set.size());
  return s;
}

std::string normalize_answer(std::string_view text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    lowered += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
  }
  std::string out;
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    const std::size_t b = i;
    while (i < lowered.size() && !std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    if (b == i) break;
    const std::string_view word(lowered.data() + b, i - b);
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

int exact_match(std::string_view answer, const std::vector<std::string>& gold_answers) {
  const std::string norm = normalize_answer(answer);
  if (norm.empty()) return 0;
  for (const auto& g : gold_answers) {
    const std::string ng = normalize_answer(g);
    if (!ng.empty() && norm.find(ng) != std::string::npos) return 1;
  }
  return 0;
}

std::optional<CitationConfidence> extract_citation_confidence(const RawGeneration& gen,
                                                              const CitationSet& cits,
                                                              const std::set<std::size_t>& relevant_set) {
  if (gen.tokens.empty()) return std::nullopt;

  // Byte offsets of each token.
  std::vector<std::size_t> starts;
  starts.reserve(gen.tokens.size() + 1);
  std::string rebuilt;
  for (const auto& t : gen.tokens) {
    starts.push_back(rebuilt.size());
    rebuilt += t.text;
  }
  starts.push_back(rebuilt.size());

  CitationConfidence conf;
  if (rebuilt != gen.text) {
    spdlog::warn("tokens do not reconstruct the answer for {}; skipping {} citations", gen.tag.key(),
                 cits.occurrences.size());
    conf.skipped = cits.occurrences.size();
    return conf;
  }

  auto covering = [&](const CitationOccurrence& occ) {
    // First token ending after occ.begin through last token starting before occ.end.
    std::size_t first = static_cast<std::size_t>(
        std::upper_bound(starts.begin(), starts.end(), occ.begin) - starts.begin()) - 1;
    std::size_t last = static_cast<std::size_t>(
        std::lower_bound(starts.begin(), starts.end(), occ.end) - starts.begin()) - 1;
    return std::pair{first, last};
  };

  // Every numeral (including out-of-range ones) claims its covering tokens.
  const auto all = find_citations(gen.text);
  for (const auto& occ : cits.occurrences) {
    const auto [first, last] = covering(occ);
    bool shared = false;
    for (const auto& other : all) {
      if (other.begin == occ.begin) continue;
      const auto [of, ol] = covering(other);
      if (of <= last && first <= ol) {
        shared = true;
        break;
      }
    }
    if (shared) {
      spdlog::warn("citation [{}] in {} shares tokens with another citation; skipped", occ.index, gen.tag.key());
      ++conf.skipped;
      continue;
    }
    double logprob = 0.0;
    for (std::size_t t = first; t <= last; ++t) logprob += gen.tokens[t].logprob;
    conf.items.push_back({occ.index, std::exp(logprob), relevant_set.count(occ.index) > 0});
  }
  return conf;
}

std::string to_json_line(const QueryScore& s) {
  nlohmann::json j = {
      {"query_id", s.query_id},   {"condition", s.condition}, {"precision", s.precision},
      {"recall", s.recall},       {"em", s.em},               {"n_cited", s.n_cited},
      {"n_cited_relevant", s.n_cited_relevant}, {"out_of_range", s.out_of_range},
  };
  return j.dump();
}

QueryScore query_score_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  QueryScore s;
  s.query_id = j.at("query_id").get<std::string>();
  s.condition = j.at("condition").get<std::string>();
  s.precision = j.at("precision").get<double>();
  s.recall = j.at("recall").get<double>();
  s.em = j.at("em").get<int>();
  s.n_cited = j.at("n_cited").get<std::size_t>();
  s.n_cited_relevant = j.at("n_cited_relevant").get<std::size_t>();
  s.out_of_range = j.value("out_of_range", std::vector<std::size_t>{});
  return s;
}

}  // namespace authorbias

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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "authorbias/error.h"

namespace authorbias {
namespace {

AttributionScore score(const std::string& answer, std::size_t k, std::set<std::size_t> relevant) {
  return score_attribution(parse_citations(answer, k), relevant);
}

TEST(Attribution, RepeatedCitationCountsOnce) {
  const auto s = score("Djokovic won [2][5]. He beat Medvedev [5].", 10, {5});
  EXPECT_DOUBLE_EQ(s.precision, 50.0);
  EXPECT_DOUBLE_EQ(s.recall, 100.0);
}

TEST(Attribution, SingleRelevantCitation) {
  const auto s = score("Novak Djokovic [5].", 10, {5});
  EXPECT_DOUBLE_EQ(s.precision, 100.0);
  EXPECT_DOUBLE_EQ(s.recall, 100.0);
}

TEST(Attribution, OneOfThree) {
  const auto s = score("[0] and [2], also [5]", 10, {5});
  EXPECT_NEAR(s.precision, 100.0 / 3, 1e-12);
  EXPECT_DOUBLE_EQ(s.recall, 100.0);
}

TEST(Attribution, NoCitationsScoresZero) {
  const auto s = score("I do not know.", 10, {1});
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_THROW(score("[1]", 10, {}), ValidationError);
}

TEST(Citations, OutOfRangeIsRecordedNotScored) {
  const auto c = parse_citations("see [12] and [3]", 10);
  EXPECT_EQ(c.cited, (std::vector<std::size_t>{3}));
  EXPECT_EQ(c.out_of_range, (std::vector<std::size_t>{12}));
  const auto s = score_attribution(c, {3});
  EXPECT_DOUBLE_EQ(s.precision, 100.0);
}

TEST(Citations, GroupsAndSpans) {
  const std::string text = "a [1, 3] b [10]";
  const auto occ = find_citations(text);
  ASSERT_EQ(occ.size(), 3u);
  EXPECT_EQ(occ[0].index, 1u);
  EXPECT_EQ(occ[1].index, 3u);
  EXPECT_EQ(text.substr(occ[2].begin, occ[2].end - occ[2].begin), "10");
  EXPECT_TRUE(find_citations("[x] [] [1a]").empty());
}

TEST(Citations, SerializationIsIdempotent) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 200; ++rep) {
    std::string text;
    const int n = static_cast<int>(gen() % 8);
    for (int i = 0; i < n; ++i) text += "w [" + std::to_string(gen() % 15) + "] ";
    const auto c = parse_citations(text, 10);
    const auto once = serialize_citations(c);
    const auto again = parse_citations(once, 10);
    EXPECT_EQ(again.cited, c.cited);
    EXPECT_EQ(again.distinct, c.distinct);
    EXPECT_EQ(again.out_of_range, c.out_of_range);
    EXPECT_EQ(serialize_citations(again), once);
  }
}

TEST(Attribution, InvariantUnderCitationReordering) {
  std::mt19937_64 gen(8);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::size_t> ids;
    for (int i = 0; i < 6; ++i) ids.push_back(gen() % 10);
    std::set<std::size_t> relevant{gen() % 10};
    auto render = [](const std::vector<std::size_t>& v) {
      std::string s;
      for (auto i : v) s += "[" + std::to_string(i) + "] ";
      return s;
    };
    const auto a = score(render(ids), 10, relevant);
    std::shuffle(ids.begin(), ids.end(), gen);
    const auto b = score(render(ids), 10, relevant);
    EXPECT_EQ(a.precision, b.precision);
    EXPECT_EQ(a.recall, b.recall);
    EXPECT_GE(a.precision, 0.0);
    EXPECT_LE(a.precision, 100.0);
  }
}

TEST(ExactMatch, NormalizedContainment) {
  EXPECT_EQ(exact_match("The winner was Novak Djokovic.", {"Novak Djokovic"}), 1);
  EXPECT_EQ(exact_match("It was Djokovic", {"Novak Djokovic", "Djokovic"}), 1);
  EXPECT_EQ(exact_match("It was Nadal", {"Novak Djokovic"}), 0);
  EXPECT_EQ(exact_match("an Apple!", {"the apple"}), 1);
  EXPECT_EQ(exact_match("", {"x"}), 0);
  EXPECT_EQ(normalize_answer("  The  U.S.A, a  Country "), "usa country");
}

RawGeneration tokens(std::vector<TokenLogprob> toks) {
  RawGeneration g;
  for (const auto& t : toks) g.text += t.text;
  g.tokens = std::move(toks);
  return g;
}

TEST(Confidence, SingleTokenCitation) {
  const auto g = tokens({{"Paris ", -0.5}, {"[", 0.0}, {"1", std::log(0.9)}, {"]", 0.0}});
  const auto c = extract_citation_confidence(g, parse_citations(g.text, 10), {1});
  ASSERT_TRUE(c);
  ASSERT_EQ(c->items.size(), 1u);
  EXPECT_NEAR(c->items[0].probability, 0.9, 1e-12);
  EXPECT_TRUE(c->items[0].is_relevant);
}

TEST(Confidence, MultiTokenNumeralMultiplies) {
  const auto g = tokens({{"x [", 0.0}, {"1", std::log(0.9)}, {"0", std::log(0.8)}, {"]", 0.0}});
  const auto c = extract_citation_confidence(g, parse_citations(g.text, 20), {3});
  ASSERT_TRUE(c);
  ASSERT_EQ(c->items.size(), 1u);
  EXPECT_NEAR(c->items[0].probability, 0.72, 1e-12);
  EXPECT_FALSE(c->items[0].is_relevant);
}

TEST(Confidence, SharedTokensAreSkipped) {
  const auto g = tokens({{"x ", 0.0}, {"[1][2]", std::log(0.5)}});
  const auto c = extract_citation_confidence(g, parse_citations(g.text, 10), {1});
  ASSERT_TRUE(c);
  EXPECT_TRUE(c->items.empty());
  EXPECT_EQ(c->skipped, 2u);
}

TEST(Confidence, NoTokensMeansUnavailable) {
  RawGeneration g;
  g.text = "[1]";
  EXPECT_FALSE(extract_citation_confidence(g, parse_citations(g.text, 10), {1}).has_value());
}

TEST(QueryScore, JsonRoundTrip) {
  QueryScore s{"q1", "human-llm/informed/tokens/k10", 33.333333333333336, 100.0, 1, 3, 1, {12, 40}};
  EXPECT_EQ(query_score_from_json_line(to_json_line(s)), s);
}

}  // namespace
}  // namespace authorbias

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

#include "authorbias/metrics.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "authorbias/error.h"

namespace authorbias {
namespace {

ConditionRun make_run(const std::string& spec_id, const std::vector<double>& precision,
                      const std::vector<double>& recall = {}) {
  ConditionRun run;
  run.spec = ConditionSpec::parse(spec_id);
  for (std::size_t i = 0; i < precision.size(); ++i) {
    QueryScore s;
    s.query_id = "q" + std::to_string(i);
    s.condition = spec_id;
    s.precision = precision[i];
    s.recall = recall.empty() ? precision[i] : recall[i];
    run.scores[s.query_id] = s;
  }
  return run;
}

TEST(Cas, MeanAbsoluteDifference) {
  const auto r = compute_cas(make_run("human-human/informed/tokens/k10", {50, 100}),
                             make_run("human-human/vanilla/k10", {100, 100}));
  EXPECT_DOUBLE_EQ(r.precision.value, 25.0);
  EXPECT_EQ(r.paired_queries.size(), 2u);
}

TEST(Cas, SingleQueryIsAbsoluteGap) {
  const auto r = compute_cas(make_run("human-human/informed/tokens/k10", {30}),
                             make_run("human-human/vanilla/k10", {70}));
  EXPECT_DOUBLE_EQ(r.precision.value, 40.0);
  EXPECT_TRUE(r.precision.test.degenerate);
}

TEST(Cas, RejectsIncomparableRuns) {
  EXPECT_THROW(compute_cas(make_run("human-human/informed/tokens/k10", {1}), make_run("human-human/vanilla/k5", {1})),
               ValidationError);
  EXPECT_THROW(compute_cas(make_run("human-llm/informed/tokens/k10", {1}), make_run("human-human/vanilla/k10", {1})),
               ValidationError);
}

TEST(Cab, SignFollowsOmega) {
  const auto inf = make_run("human-llm/informed/tokens/k10", {100, 50});
  const auto cf = make_run("human-llm/cf_informed/tokens/k10", {50, 50});
  EXPECT_DOUBLE_EQ(compute_cab(inf, cf, +1).precision.value, 25.0);
  EXPECT_DOUBLE_EQ(compute_cab(inf, cf, -1).precision.value, -25.0);
}

TEST(Cab, AntisymmetricInItsArguments) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 100);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(15), b(15);
    for (auto& x : a) x = u(gen);
    for (auto& x : b) x = u(gen);
    const auto ra = make_run("human-llm/informed/tokens/k10", a);
    const auto rb = make_run("human-llm/cf_informed/tokens/k10", b);
    EXPECT_NEAR(compute_cab(ra, rb, 1).precision.value, -compute_cab(rb, ra, 1).precision.value, 1e-12);
  }
}

TEST(Cas, TriangleInequality) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 100);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(12), b(12), c(12);
    for (auto* v : {&a, &b, &c})
      for (auto& x : *v) x = u(gen);
    const auto ra = make_run("human-human/informed/tokens/k10", a);
    const auto rb = make_run("human-human/vanilla/k10", b);
    const auto rc = make_run("human-human/vanilla/k10", c);
    const auto rc_inf = make_run("human-human/informed/tokens/k10", c);
    // CAS(a,b) <= CAS(a,c) + CAS(c,b), each a mean of absolute differences.
    EXPECT_LE(compute_cas(ra, rb).precision.value,
              compute_cas(ra, rc).precision.value + compute_cas(rc_inf, rb).precision.value + 1e-9);
  }
}

TEST(Omega, TruthTable) {
  EXPECT_EQ(compute_omega({LabelKind::Human, LabelKind::LLM}), 1);
  EXPECT_EQ(compute_omega({LabelKind::NamedPerson, LabelKind::AI}), 1);
  EXPECT_EQ(compute_omega({LabelKind::LLM, LabelKind::Human}), -1);
  EXPECT_EQ(compute_omega({LabelKind::Human, LabelKind::Human}), -1);
  EXPECT_EQ(compute_omega({LabelKind::LLM, LabelKind::LLM}), -1);
  EXPECT_EQ(compute_omega({LabelKind::AI, LabelKind::NamedPerson}), -1);
}

TEST(Omega, FirstTermLabelsFromSpec) {
  auto labels = first_term_labels(ConditionSpec::parse("human-llm/informed/tokens/k10"));
  EXPECT_EQ(compute_omega(labels), 1);
  labels = first_term_labels(ConditionSpec::parse("llm-human/informed/tokens/k10"));
  EXPECT_EQ(compute_omega(labels), -1);
  labels = first_term_labels(ConditionSpec::parse("human-human/mixed(informed,cf_informed)/names/k10"));
  EXPECT_EQ(labels.relevant, LabelKind::NamedPerson);
  EXPECT_EQ(labels.nonrelevant, LabelKind::AI);
  EXPECT_THROW(first_term_labels(ConditionSpec::parse("human-human/vanilla/k10")), ValidationError);
}

ConditionRun with_confidence(std::vector<std::vector<CitationProbability>> per_query) {
  ConditionRun run = make_run("human-human/informed/tokens/k10", std::vector<double>(per_query.size(), 0.0));
  for (std::size_t i = 0; i < per_query.size(); ++i) run.confidence["q" + std::to_string(i)].items = per_query[i];
  return run;
}

TEST(Ac, MeanOverRelevantCitations) {
  const auto run = with_confidence({{{5, 0.9, true}, {2, 0.4, false}}, {{5, 0.8, true}}});
  EXPECT_NEAR(*compute_ac(run, CitationSubset::Relevant), 0.85, 1e-12);
  EXPECT_NEAR(*compute_ac(run, CitationSubset::NonRelevant), 0.4, 1e-12);
  EXPECT_FALSE(compute_ac(with_confidence({{}}), CitationSubset::Relevant).has_value());
}

TEST(Ac, PoolsCitationsNotQueries) {
  // Query means would give (0.9 + (0.5+0.5+0.5)/3)/2 = 0.7; pooling gives 2.4/4.
  const auto run = with_confidence({{{1, 0.9, true}}, {{1, 0.5, true}, {1, 0.5, true}, {1, 0.5, true}}});
  EXPECT_NEAR(*compute_ac(run, CitationSubset::Relevant), 0.6, 1e-12);
  const std::vector<std::string> only_first{"q0"};
  EXPECT_NEAR(*compute_ac(run, CitationSubset::Relevant, &only_first), 0.9, 1e-12);
}

TEST(CitationFrequencyTest, MeansOverQueries) {
  auto run = make_run("human-human/informed/tokens/k10", {0, 0});
  run.scores["q0"].n_cited = 3;
  run.scores["q0"].n_cited_relevant = 1;
  run.scores["q1"].n_cited = 1;
  run.scores["q1"].n_cited_relevant = 0;
  const auto f = citation_frequency(run);
  EXPECT_DOUBLE_EQ(f.mean_total_cited, 2.0);
  EXPECT_DOUBLE_EQ(f.mean_relevant_cited, 0.5);
}

std::vector<ConditionRun> grid() {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> u(0, 4);
  auto v = [&] {
    std::vector<double> out(20);
    for (auto& x : out) x = 25.0 * u(gen);
    return out;
  };
  return {make_run("human-llm/vanilla/k10", v()),
          make_run("human-llm/informed/tokens/k10", v()),
          make_run("human-llm/cf_informed/tokens/k10", v()),
          make_run("human-llm/mixed(informed,cf_informed)/tokens/k10", v()),
          make_run("human-llm/mixed(cf_informed,informed)/tokens/k10", v())};
}

TEST(Report, DiscoversPairs) {
  const auto report = build_report(grid());
  EXPECT_EQ(report.conditions.size(), 5u);
  ASSERT_NE(report.find_pair("cas", "human-llm/informed/tokens/k10"), nullptr);
  EXPECT_EQ(report.find_pair("cas", "human-llm/cf_informed/tokens/k10"), nullptr);
  const auto* cab = report.find_pair("cab", "human-llm/informed/tokens/k10");
  ASSERT_NE(cab, nullptr);
  EXPECT_EQ(cab->omega, 1);
  ASSERT_NE(report.find_pair("mixed_cab", "human-llm/mixed(informed,cf_informed)/tokens/k10"), nullptr);
  EXPECT_EQ(report.paired_queries.size(), 20u);
}

TEST(Report, JsonRoundTripIsExact) {
  const auto report = build_report(grid());
  EXPECT_EQ(report_from_json(report_to_json(report)), report);
  EXPECT_EQ(report_to_json(report_from_json(report_to_json(report))), report_to_json(report));
}

TEST(Report, CsvHasOneRowPerCondition) {
  const auto report = build_report(grid());
  const auto csv = report_to_csv(report);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5);
}

TEST(Report, MarkdownHeaderOrder) {
  const auto md = report_to_markdown(build_report(grid()));
  const std::vector<std::string> headers{"Relevant documents", "Non-relevant documents", "RAG mode", "Labels", "k",
                                         "Precision", "Recall", "EM"};
  std::size_t last = 0;
  for (const auto& h : headers) {
    const auto at = md.find("| " + h + " |", last == 0 ? 0 : last - 1);
    ASSERT_NE(at, std::string::npos) << h;
    EXPECT_GE(at, last);
    last = at + 1;
  }
}

TEST(Report, MeansUseQueriesCommonToAllRuns) {
  auto runs = grid();
  runs[0].scores.erase("q3");
  runs[0].n_failed = 1;
  const auto report = build_report(runs);
  EXPECT_EQ(report.paired_queries.size(), 19u);
  EXPECT_EQ(report.excluded_queries, (std::vector<std::string>{"q3"}));
  for (const auto& c : report.conditions) EXPECT_EQ(c.n_queries, 19u);
}

}  // namespace
}  // namespace authorbias

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

#include "authorbias/context.h"

#include <gtest/gtest.h>

#include "authorbias/error.h"
#include "support/fixtures.h"

namespace authorbias {
namespace {

using testing::make_oracle_benchmark;
using testing::TempDir;

RagCondition mode(RagMode m, LabelScheme s = LabelScheme::Tokens) { return {m, std::nullopt, std::nullopt, s}; }

RagCondition mixed(RagMode rel, RagMode nonrel, LabelScheme s = LabelScheme::Tokens) {
  return {RagMode::Mixed, rel, nonrel, s};
}

NamePool small_pool() { return {{{"Ada", "Byron"}, {"Alan", "Turing"}, {"Grace", "Hopper"}, {"Edsger", "Dijkstra"}}}; }

struct Fixture {
  Benchmark bench = make_oracle_benchmark(3, 4, true);
  SyntheticIndex synthetic = build_synthetic_index(bench.collection);

  ContextAssembly ctx(AuthorshipConfig actual) const {
    return assemble_context(bench, synthetic, "q0001", {"n0001_00", "r0001", "n0001_01", "n0001_02"}, actual);
  }
};

TEST(AssembleContext, SwapsInSyntheticTwinsPerAuthorship) {
  Fixture f;
  const auto c = f.ctx({Author::Human, Author::LLM});
  c.validate();
  EXPECT_EQ(c.relevant_set, (std::set<std::size_t>{1}));
  EXPECT_EQ(c.nonrelevant_set, (std::set<std::size_t>{0, 2, 3}));
  EXPECT_EQ(c.docs[1].doc_id, "r0001");
  EXPECT_EQ(c.docs[0].doc_id, "n0001_00::synthetic");
  EXPECT_EQ(c.docs[0].actual_author, Author::LLM);
}

TEST(AssembleContext, MissingTwinIsAnError) {
  const auto bench = make_oracle_benchmark(2, 2, false);
  const auto idx = build_synthetic_index(bench.collection);
  EXPECT_THROW(assemble_context(bench, idx, "q0000", {"r0000"}, {Author::LLM, Author::Human}), ValidationError);
}

TEST(AssignLabels, InformedShowsActualAuthor) {
  Fixture f;
  const auto c = assign_labels(f.ctx({Author::Human, Author::LLM}), mode(RagMode::Informed), nullptr, 1);
  EXPECT_EQ(c.docs[1].label->display, kHumanLabel);
  EXPECT_EQ(c.docs[0].label->display, kLlmLabel);
}

TEST(AssignLabels, CounterfactualFlipsEveryLabel) {
  Fixture f;
  const auto c = assign_labels(f.ctx({Author::LLM, Author::LLM}), mode(RagMode::CfInformed), nullptr, 1);
  for (const auto& d : c.docs) EXPECT_EQ(d.label->display, kHumanLabel);
}

TEST(AssignLabels, MixedInformedCfOnHumanCorpus) {
  Fixture f;
  const auto c = assign_labels(f.ctx({Author::Human, Author::Human}),
                               mixed(RagMode::Informed, RagMode::CfInformed), nullptr, 1);
  EXPECT_EQ(c.docs[1].label->display, kHumanLabel);
  for (std::size_t i : {0u, 2u, 3u}) EXPECT_EQ(c.docs[i].label->display, kLlmLabel);
}

TEST(AssignLabels, VanillaClearsLabels) {
  Fixture f;
  auto labeled = assign_labels(f.ctx({Author::Human, Author::Human}), mode(RagMode::Informed), nullptr, 1);
  const auto c = assign_labels(labeled, mode(RagMode::Vanilla), nullptr, 1);
  for (const auto& d : c.docs) EXPECT_FALSE(d.label.has_value());
}

TEST(AssignLabels, EveryPositionLabeledUnderNonVanillaModes) {
  Fixture f;
  const auto pool = small_pool();
  for (auto actual : {AuthorshipConfig{Author::Human, Author::Human}, AuthorshipConfig{Author::Human, Author::LLM},
                      AuthorshipConfig{Author::LLM, Author::Human}, AuthorshipConfig{Author::LLM, Author::LLM}}) {
    for (const auto& cond : {mode(RagMode::Informed), mode(RagMode::CfInformed),
                             mixed(RagMode::CfInformed, RagMode::Informed),
                             mode(RagMode::Informed, LabelScheme::ExtendedNames)}) {
      const auto c = assign_labels(f.ctx(actual), cond, &pool, 3);
      for (const auto& d : c.docs) EXPECT_TRUE(d.label.has_value());
    }
  }
}

TEST(AssignLabels, CounterfactualIsAnInvolutionOnKinds) {
  Fixture f;
  for (auto actual : {AuthorshipConfig{Author::Human, Author::LLM}, AuthorshipConfig{Author::LLM, Author::Human}}) {
    const auto ctx = f.ctx(actual);
    const auto informed = assign_labels(ctx, mode(RagMode::Informed), nullptr, 7);
    const auto cf = assign_labels(ctx, mode(RagMode::CfInformed), nullptr, 7);
    // Relabeling a flipped-author context under CF recovers the informed labels.
    auto flipped = ctx;
    for (auto& d : flipped.docs) d.actual_author = flip(d.actual_author);
    const auto cf_of_flipped = assign_labels(flipped, mode(RagMode::CfInformed), nullptr, 7);
    for (std::size_t i = 0; i < ctx.docs.size(); ++i) {
      EXPECT_NE(is_human_kind(informed.docs[i].label->kind), is_human_kind(cf.docs[i].label->kind));
      EXPECT_EQ(informed.docs[i].label, cf_of_flipped.docs[i].label);
    }
  }
}

TEST(AssignLabels, NamesAreReproducibleAndSharedAcrossConditions) {
  Fixture f;
  const auto pool = small_pool();
  const auto ctx = f.ctx({Author::Human, Author::Human});
  const auto a = assign_labels(ctx, mode(RagMode::Informed, LabelScheme::ExtendedNames), &pool, 11);
  const auto b = assign_labels(ctx, mode(RagMode::Informed, LabelScheme::ExtendedNames), &pool, 11);
  EXPECT_EQ(a, b);
  for (const auto& d : a.docs) EXPECT_EQ(d.label->kind, LabelKind::NamedPerson);

  const auto m = assign_labels(ctx, mixed(RagMode::Informed, RagMode::CfInformed, LabelScheme::ExtendedNames), &pool, 11);
  EXPECT_EQ(m.docs[1].label, a.docs[1].label);
  EXPECT_EQ(m.docs[0].label->display, kAiLabel);
}

TEST(AssignLabels, NamesWithoutPoolIsConfigError) {
  Fixture f;
  EXPECT_THROW(assign_labels(f.ctx({}), mode(RagMode::Informed, LabelScheme::ExtendedNames), nullptr, 1), ConfigError);
}

TEST(RenderPrompt, VanillaHasNoAuthorship) {
  Fixture f;
  const auto ctx = f.ctx({Author::Human, Author::LLM});
  const auto p = render_prompt(assign_labels(ctx, mode(RagMode::Vanilla), nullptr, 1), mode(RagMode::Vanilla),
                               f.bench.queries[1]);
  EXPECT_EQ(p.find("(written by"), std::string::npos);
  EXPECT_NE(p.find("Document [1](" + ctx.docs[1].text + ")"), std::string::npos);
  EXPECT_NE(p.find(f.bench.queries[1].text), std::string::npos);
}

TEST(RenderPrompt, InformedShowsLabelsInContextOrder) {
  Fixture f;
  const auto ctx = assign_labels(f.ctx({Author::Human, Author::LLM}), mode(RagMode::Informed), nullptr, 1);
  const auto p = render_prompt(ctx, mode(RagMode::Informed), f.bench.queries[1]);
  EXPECT_NE(p.find("Document [1](" + ctx.docs[1].text + ") (written by [Human])"), std::string::npos);
  EXPECT_NE(p.find("Document [0](" + ctx.docs[0].text + ") (written by [LLM])"), std::string::npos);
  std::size_t last = 0;
  for (const auto& d : ctx.docs) {
    const auto at = p.find("Document [" + std::to_string(d.index) + "]");
    ASSERT_NE(at, std::string::npos);
    EXPECT_GE(at, last);
    last = at;
  }
}

TEST(Substitute, SinglePassAndUnknownKeysKept) {
  EXPECT_EQ(substitute("{a} {b} {c}", {{"a", "{b}"}, {"b", "x"}}), "{b} x {c}");
  EXPECT_EQ(substitute("open { brace", {{"a", "1"}}), "open { brace");
}

TEST(ConditionSpec, IdRoundTrips) {
  const std::vector<std::string> ids{"human-human/vanilla/k10", "human-llm/informed/tokens/k5",
                                     "llm-human/cf_informed/names/k10",
                                     "human-human/mixed(informed,cf_informed)/tokens/k8"};
  for (const auto& id : ids) EXPECT_EQ(ConditionSpec::parse(id).id(), id);
  EXPECT_THROW(ConditionSpec::parse("human-human/vanilla/tokens/k10"), ConfigError);
  EXPECT_THROW(ConditionSpec::parse("robot-human/informed/tokens/k10"), ConfigError);
  EXPECT_THROW(ConditionSpec::parse("human-human/mixed(informed,vanilla)/tokens/k10"), ConfigError);
}

TEST(NamePool, CsvRoundTripAndValidation) {
  TempDir dir;
  const auto pool = small_pool();
  save_name_pool(pool, dir.file("names.csv"));
  EXPECT_EQ(load_name_pool(dir.file("names.csv")).names, pool.names);
  NamePool dup{{{"A", "B"}, {"A", "B"}}};
  EXPECT_THROW(dup.validate(), ValidationError);
  EXPECT_THROW(NamePool{}.validate(), ValidationError);
}

}  // namespace
}  // namespace authorbias

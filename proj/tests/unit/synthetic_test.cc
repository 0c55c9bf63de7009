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

#include "authorbias/synthetic.h"

#include <fstream>

#include <gtest/gtest.h>

#include "authorbias/csv.h"
#include "authorbias/error.h"
#include "support/fixtures.h"

namespace authorbias {
namespace {

using testing::make_oracle_benchmark;
using testing::TempDir;

TEST(BuildSynthetic, IdentityParaphraserKeepsTextAndLinks) {
  const auto bench = make_oracle_benchmark(2, 4, false);
  ASSERT_EQ(bench.collection.size(), 10u);
  auto gw = MockGateway::identity_paraphraser();
  SynthesisOptions opts;
  opts.parallelism = 3;
  const auto built = build_synthetic_collection(bench, *gw, opts);
  EXPECT_EQ(built.documents.size(), 10u);
  EXPECT_TRUE(built.skipped.empty());
  EXPECT_DOUBLE_EQ(built.mean_length_ratio, 1.0);
  for (const auto& [id, doc] : built.documents) {
    ASSERT_TRUE(doc.paraphrase_of.has_value());
    EXPECT_EQ(id, *doc.paraphrase_of + kSyntheticSuffix);
    EXPECT_EQ(doc.text, bench.collection.at(*doc.paraphrase_of).text);
    EXPECT_EQ(doc.actual_author, Author::LLM);
  }
}

TEST(BuildSynthetic, RejectsSyntheticSources) {
  Benchmark bench;
  bench.collection.emplace("x", Document{"x", "text", Author::LLM, std::nullopt});
  auto gw = MockGateway::identity_paraphraser();
  EXPECT_THROW(build_synthetic_collection(bench, *gw), ValidationError);
}

TEST(BuildSynthetic, FailureRateAboveLimitIsAnError) {
  const auto bench = make_oracle_benchmark(10, 9, false);  // 100 documents
  auto failing = [](std::string bad) {
    return MockGateway([bad](const GenerationRequest& r) {
      if (r.tag.query_id == bad || r.tag.query_id == "n0001_01") throw GenerationError("boom");
      RawGeneration g;
      g.text = "rewritten";
      return g;
    });
  };
  auto one = failing("n0001_01");
  const auto built = build_synthetic_collection(bench, one);
  EXPECT_EQ(built.skipped.size(), 1u);
  EXPECT_EQ(built.documents.size(), 99u);
  auto two = failing("r0003");
  EXPECT_THROW(build_synthetic_collection(bench, two), Error);
}

struct AuditFixture {
  Benchmark bench = make_oracle_benchmark(500, 2, true);
  SyntheticIndex synthetic = build_synthetic_index(bench.collection);
  ContextMap contexts;
  std::vector<std::string> ids;

  AuditFixture() {
    for (const auto& q : bench.queries) {
      const auto i = q.query_id.substr(1);
      contexts[q.query_id] = {"n" + i + "_00", "r" + i, "n" + i + "_01"};
      ids.push_back(q.query_id);
    }
  }
};

TEST(AuditSample, TenPercentOfFiveHundred) {
  AuditFixture f;
  const auto s = make_audit_sample(f.bench, f.synthetic, f.contexts, f.ids, 0.1, 3);
  EXPECT_EQ(s.nonrelevant_queries.size(), 50u);
  std::size_t r = 0, n = 0;
  for (const auto& item : s.items) (item.expected_status == ExpectedStatus::StillRelevant ? r : n)++;
  EXPECT_EQ(r, 500u);
  EXPECT_EQ(n, 100u);
  EXPECT_EQ(s.items.front().synthetic_doc_id, s.items.front().original_doc_id + kSyntheticSuffix);
}

TEST(AuditSample, DeterministicPerSeed) {
  AuditFixture f;
  const auto a = make_audit_sample(f.bench, f.synthetic, f.contexts, f.ids, 0.1, 3);
  const auto b = make_audit_sample(f.bench, f.synthetic, f.contexts, f.ids, 0.1, 3);
  const auto c = make_audit_sample(f.bench, f.synthetic, f.contexts, f.ids, 0.1, 4);
  EXPECT_EQ(a.items, b.items);
  EXPECT_NE(a.nonrelevant_queries, c.nonrelevant_queries);
  EXPECT_THROW(make_audit_sample(f.bench, f.synthetic, f.contexts, f.ids, 0.0, 3), ValidationError);
}

// Fills the verdict column of a worksheet; `fail_ids` get "fail", `blank_ids` stay empty.
void fill(const std::string& path, const std::set<std::string>& fail_ids, const std::set<std::string>& blank_ids = {}) {
  auto rows = csv::read_file(path);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& id = rows[i][0];
    rows[i].back() = blank_ids.count(id) ? "" : fail_ids.count(id) ? "FAIL" : "pass";
  }
  std::ofstream out(path);
  for (const auto& r : rows) csv::write_row(out, r);
}

TEST(Audit, OneFailureInFiftyClosesStrictGate) {
  TempDir dir;
  AuditFixture f;
  std::vector<std::string> ids(f.ids.begin(), f.ids.begin() + 50);
  auto sample = make_audit_sample(f.bench, f.synthetic, f.contexts, ids, 0.02, 1);
  // Keep only the 50 relevance items.
  std::erase_if(sample.items, [](const AuditItem& i) { return i.expected_status != ExpectedStatus::StillRelevant; });
  ASSERT_EQ(sample.items.size(), 50u);
  write_audit_worksheet(sample, f.bench, dir.file("sheet.csv"));
  fill(dir.file("sheet.csv"), {sample.items[7].item_id});

  const auto s = record_audit(sample.items, dir.file("sheet.csv"));
  EXPECT_EQ(s.total, 50u);
  EXPECT_NEAR(s.pass_rate(), 0.98, 1e-12);
  EXPECT_FALSE(s.gate_open());
  EXPECT_EQ(sample.items[7].verdict, Verdict::Fail);
  EXPECT_TRUE(record_audit(sample.items, dir.file("sheet.csv"), 0.95).gate_open());
  EXPECT_EQ(summarize_worksheet(dir.file("sheet.csv")).passed, 49u);
}

TEST(Audit, EmptyItemListIsAnError) {
  TempDir dir;
  testing::write_file(dir.file("sheet.csv"), "item_id,expected_status,verdict\n");
  std::vector<AuditItem> none;
  EXPECT_THROW(record_audit(none, dir.file("sheet.csv")), ValidationError);
  EXPECT_THROW(summarize_worksheet(dir.file("sheet.csv")), ValidationError);
}

TEST(Audit, MissingVerdictsAreListed) {
  TempDir dir;
  AuditFixture f;
  std::vector<std::string> ids(f.ids.begin(), f.ids.begin() + 5);
  auto sample = make_audit_sample(f.bench, f.synthetic, f.contexts, ids, 0.2, 1);
  write_audit_worksheet(sample, f.bench, dir.file("sheet.csv"));
  const auto a = sample.items[1].item_id, b = sample.items[3].item_id;
  fill(dir.file("sheet.csv"), {}, {a, b});
  try {
    record_audit(sample.items, dir.file("sheet.csv"));
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(a), std::string::npos);
    EXPECT_NE(msg.find(b), std::string::npos);
  }
}

TEST(Audit, WorksheetCarriesBothTexts) {
  TempDir dir;
  AuditFixture f;
  const std::vector<std::string> ids{"q0000"};
  const auto sample = make_audit_sample(f.bench, f.synthetic, f.contexts, ids, 1.0, 1);
  write_audit_worksheet(sample, f.bench, dir.file("sheet.csv"));
  const auto rows = csv::read_file(dir.file("sheet.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (csv::Row{"item_id", "query_text", "original_text", "synthetic_text", "gold_answer",
                               "expected_status", "verdict"}));
  EXPECT_EQ(rows[1][0], "R:q0000:r0000");
  EXPECT_EQ(rows[1][4], "city0");
  EXPECT_EQ(rows[1][5], "still_relevant");
  EXPECT_EQ(rows[1][6], "");
}

}  // namespace
}  // namespace authorbias

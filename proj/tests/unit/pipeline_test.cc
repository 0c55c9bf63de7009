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

#include "authorbias/pipeline.h"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "authorbias/error.h"
#include "authorbias/rng.h"
#include "support/fixtures.h"

namespace authorbias {
namespace {

using testing::make_oracle_benchmark;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

RunConfig base_config() {
  RunConfig c;
  c.queries = c.collection = c.qrels = "unused";
  c.k = 5;
  c.seed = 99;
  c.retriever.depth = 20;
  c.parallelism = 2;
  c.generator.oracle.bias_strength = 0.5;
  c.generator.oracle.seed = 7;
  c.conditions = {{RagMode::Vanilla, std::nullopt, std::nullopt, LabelScheme::Tokens},
                  {RagMode::Informed, std::nullopt, std::nullopt, LabelScheme::Tokens},
                  {RagMode::CfInformed, std::nullopt, std::nullopt, LabelScheme::Tokens}};
  return c;
}

const char* kMinimalConfig = R"({
  "benchmark": {"queries": "q.jsonl", "collection": "c.jsonl", "qrels": "qrels.txt"},
  "k": 5, "seed": 3, "retriever": {"depth": 20},
  "conditions": [{"mode": "vanilla"}, {"mode": "informed", "labels": "tokens"}],
  "output_dir": "out"
})";

TEST(RunConfigParse, ResolvesRelativePathsAndDerivesOracleSeed) {
  const auto c = RunConfig::parse(kMinimalConfig, "/data/cfg");
  EXPECT_EQ(c.queries, "/data/cfg/q.jsonl");
  EXPECT_EQ(c.output_dir, "/data/cfg/out");
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.generator.oracle.seed, derive_seed(3, "oracle"));
  EXPECT_EQ(c.specs().size(), 2u);
  EXPECT_EQ(RunConfig::parse(c.to_json()).to_json(), c.to_json());
}

TEST(RunConfigParse, RejectsBadConfigs) {
  auto with = [](const std::string& from, const std::string& to) {
    std::string s = kMinimalConfig;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_THROW(RunConfig::parse("{not json"), ConfigError);
  EXPECT_THROW(RunConfig::parse(with("\"k\": 5", "\"kk\": 5")), ConfigError);
  EXPECT_THROW(RunConfig::parse(with("\"k\": 5", "\"k\": 0")), ConfigError);
  EXPECT_THROW(RunConfig::parse(with("\"depth\": 20", "\"depth\": 2")), ConfigError);
  EXPECT_THROW(RunConfig::parse(with("\"mode\": \"vanilla\"", "\"mode\": \"bogus\"")), ConfigError);
  EXPECT_THROW(RunConfig::parse(with("\"labels\": \"tokens\"", "\"labels\": \"tokens\", \"relevant\": \"informed\"")),
               ConfigError);
  EXPECT_THROW(RunConfig::parse(with("\"output_dir\"", "\"authorship\": [\"human-robot\"], \"output_dir\"")),
               ConfigError);
  EXPECT_THROW(RunConfig::parse(R"({"conditions": [{"mode": "vanilla"}]})"), ConfigError);
}

TEST(RunConfigParse, SchemaIsJson) {
  EXPECT_NE(config_schema().find("\"$schema\""), std::string::npos);
}

TEST(Pipeline, InMemoryRunIsDeterministic) {
  const auto bench = make_oracle_benchmark(30, 12, true);
  const auto config = base_config();
  OracleGateway a(config.generator.oracle), b(config.generator.oracle);
  const auto ra = run_pipeline(config, bench, a);
  const auto rb = run_pipeline(config, bench, b);
  EXPECT_EQ(ra.report, rb.report);
  EXPECT_EQ(ra.prepared.sampled.size(), 30u);
  EXPECT_EQ(ra.generated, 90u);
  ASSERT_NE(ra.report.find_pair("cas", "human-human/informed/tokens/k5"), nullptr);
}

TEST(Pipeline, SamplingIsSeededAndSorted) {
  const auto bench = make_oracle_benchmark(30, 12, true);
  auto config = base_config();
  config.sample_size = 10;
  OracleGateway gw(config.generator.oracle);
  const auto r = run_pipeline(config, bench, gw);
  EXPECT_EQ(r.prepared.sampled.size(), 10u);
  EXPECT_TRUE(std::is_sorted(r.prepared.sampled.begin(), r.prepared.sampled.end()));
  EXPECT_EQ(prepare_queries(config, bench).sampled, r.prepared.sampled);
}

TEST(Pipeline, PersistedRunReplaysByteIdentically) {
  TempDir dir;
  const auto bench = make_oracle_benchmark(20, 12, true);
  auto config = base_config();
  config.output_dir = dir.file("run");
  OracleGateway gw(config.generator.oracle);
  run_pipeline(config, bench, gw);
  for (const char* f : {"config.json", "run.trec", "queries.txt", "contexts.jsonl", "generations.jsonl",
                        "scores.jsonl", "manifest.json", "report.md", "report.csv", "pairs.csv", "report.json"})
    EXPECT_TRUE(std::filesystem::exists(dir.file(std::string("run/") + f))) << f;
  EXPECT_EQ(report_to_json(replay_report(config.output_dir)), read_file(dir.file("run/report.json")));
  EXPECT_NE(read_file(dir.file("run/manifest.json")).find("\"last_completed_stage\": \"report\""),
            std::string::npos);
}

TEST(Pipeline, ResumeSkipsLoggedGenerations) {
  TempDir dir;
  const auto bench = make_oracle_benchmark(20, 12, true);
  auto config = base_config();
  config.output_dir = dir.file("run");
  OracleGateway gw(config.generator.oracle);
  const auto first = run_pipeline(config, bench, gw);
  const auto log = dir.file("run/generations.jsonl");

  // Drop the last 7 records, as if the run had been interrupted.
  std::vector<std::string> lines;
  std::ifstream in(log);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  lines.resize(lines.size() - 7);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_file(log, text);

  const auto second = run_pipeline(config, bench, gw);
  EXPECT_EQ(second.generated, 7u);
  EXPECT_EQ(second.resumed, 53u);
  EXPECT_EQ(second.report, first.report);
  const auto third = run_pipeline(config, bench, gw);
  EXPECT_EQ(third.generated, 0u);
}

TEST(Pipeline, LlmDocumentsNeedAnOpenAuditGate) {
  TempDir dir;
  const auto bench = make_oracle_benchmark(10, 12, true);
  auto config = base_config();
  config.authorship = {{Author::Human, Author::LLM}};
  OracleGateway gw(config.generator.oracle);
  EXPECT_THROW(run_pipeline(config, bench, gw), AuditGateError);

  write_file(dir.file("v.csv"), "item_id,expected_status,verdict\nR:q:d,still_relevant,pass\nN:q:e,still_nonrelevant,fail\n");
  config.audit.verdicts = dir.file("v.csv");
  EXPECT_THROW(run_pipeline(config, bench, gw), AuditGateError);
  config.audit.threshold = 0.5;
  EXPECT_NO_THROW(run_pipeline(config, bench, gw));
}

TEST(Pipeline, AllFailedGenerationsIsAGenerationError) {
  const auto bench = make_oracle_benchmark(10, 12, true);
  MockGateway gw([](const GenerationRequest&) -> RawGeneration { throw GenerationError("down"); });
  EXPECT_THROW(run_pipeline(base_config(), bench, gw), GenerationError);
}

TEST(Pipeline, PartialFailuresAreCountedPerCondition) {
  const auto bench = make_oracle_benchmark(10, 12, true);
  const auto config = base_config();
  OracleGateway oracle(config.generator.oracle);
  MockGateway gw([&](const GenerationRequest& r) {
    if (r.tag.query_id == "q0004") throw GenerationError("flaky");
    return oracle.generate(r);
  });
  const auto r = run_pipeline(config, bench, gw);
  for (const auto& c : r.report.conditions) {
    EXPECT_EQ(c.n_failed, 1u);
    EXPECT_EQ(c.n_queries, 9u);
  }
}

TEST(Sweep, OneReportPerCutoffWithRandomPlacement) {
  TempDir dir;
  const auto bench = make_oracle_benchmark(20, 12, true);
  auto config = base_config();
  config.sweep_ks = {2, 5, 8, 10};
  config.output_dir = dir.file("sweep");
  OracleGateway gw(config.generator.oracle);
  const auto results = run_sweep(config, bench, gw);
  ASSERT_EQ(results.size(), 4u);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::size_t k = config.sweep_ks[i];
    EXPECT_TRUE(std::filesystem::exists(dir.file("sweep/k" + std::to_string(k) + "/report.json")));
    for (const auto& c : results[i].report.conditions) EXPECT_EQ(c.k, k);
    for (const auto& [qid, ids] : results[i].prepared.contexts) EXPECT_EQ(ids.size(), k);
  }
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ExitCodes, MapExceptionKinds) {
  auto code = [](auto thrower) {
    try {
      thrower();
    } catch (...) {
      return exit_code_for_current_exception();
    }
    return -1;
  };
  EXPECT_EQ(code([] { throw ConfigError("x"); }), kExitConfig);
  EXPECT_EQ(code([] { throw ParseError("f", 1, "x"); }), kExitConfig);
  EXPECT_EQ(code([] { throw AuditGateError("x"); }), kExitAuditGate);
  EXPECT_EQ(code([] { throw GenerationError("x"); }), kExitGeneration);
  EXPECT_EQ(code([] { throw std::runtime_error("x"); }), kExitOther);
}

}  // namespace
}  // namespace authorbias

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

// Command-line driver: ingest, synth, audit, retrieve, run, report, sweep.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "authorbias/bm25.h"
#include "authorbias/corpus.h"
#include "authorbias/error.h"
#include "authorbias/pipeline.h"
#include "authorbias/rng.h"
#include "authorbias/synthetic.h"

namespace fs = std::filesystem;
using namespace authorbias;

namespace {

struct Overrides {
  std::optional<std::size_t> k;
  std::optional<std::size_t> sample_size;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<std::size_t> parallelism;
  std::string out;
  std::string verdicts;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--k", k, "Context size");
    cmd->add_option("--sample-size", sample_size, "Number of queries to sample (0 = all)");
    cmd->add_option("--seed", seed, "Root seed");
    cmd->add_option("--beta", beta, "Oracle bias strength in [-1, 1]");
    cmd->add_option("--parallelism", parallelism, "Concurrent generation requests");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--verdicts", verdicts, "Filled audit worksheet");
  }

  RunConfig apply(const std::string& config_path) const {
    RunConfig c = RunConfig::load(config_path);
    if (k) c.k = *k;
    if (sample_size) c.sample_size = *sample_size;
    if (seed) {
      // A new root seed also re-derives the oracle stream.
      c.seed = *seed;
      c.generator.oracle.seed = derive_seed(c.seed, "oracle");
    }
    if (beta) c.generator.oracle.bias_strength = *beta;
    if (parallelism) c.parallelism = *parallelism;
    if (!out.empty()) c.output_dir = out;
    if (!verdicts.empty()) c.audit.verdicts = verdicts;
    c.validate();
    return c;
  }
};

void print_summary(const MetricReport& report) {
  for (const auto& c : report.conditions)
    fmt::print("{:<48} P={:6.2f} R={:6.2f} EM={:.3f} n={}\n", c.condition, c.precision, c.recall, c.em, c.n_queries);
  for (const auto& p : report.pairs)
    fmt::print("{:<9} {:<48} P={:+.3f} (p={:.4f}) R={:+.3f} (p={:.4f})\n", p.kind, p.first, p.precision,
               p.p_precision, p.recall, p.p_recall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribution sensitivity and bias evaluation for RAG generators"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only log errors");
  app.set_version_flag("--version", kVersion);

  std::string config_path;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load and validate benchmark files");
  std::string queries, collection, qrels, synthetic;
  ingest->add_option("--config", config_path, "Run config");
  ingest->add_option("--queries", queries, "Queries JSONL");
  ingest->add_option("--collection", collection, "Collection JSONL");
  ingest->add_option("--qrels", qrels, "TREC qrels");
  ingest->add_option("--synthetic", synthetic, "Synthetic collection JSONL");

  // synth
  auto* synth = app.add_subcommand("synth", "Paraphrase the collection into synthetic documents");
  std::string synth_out;
  std::string paraphrase_template;
  bool identity = false;
  double max_failure_rate = 0.01;
  std::size_t synth_parallelism = 4;
  synth->add_option("--config", config_path, "Run config")->required();
  synth->add_option("--out", synth_out, "Synthetic collection JSONL to write")->required();
  synth->add_option("--template", paraphrase_template, "Paraphrase prompt template (uses {passage})");
  synth->add_option("--max-failure-rate", max_failure_rate, "Abort above this failure fraction");
  synth->add_option("--parallelism", synth_parallelism, "Concurrent requests");
  synth->add_flag("--identity", identity, "Copy texts unchanged instead of calling the generator");

  // audit
  auto* audit = app.add_subcommand("audit", "Write the relevance audit worksheet or check filled verdicts");
  std::string worksheet, audit_verdicts;
  audit->add_option("--config", config_path, "Run config")->required();
  auto* ws_opt = audit->add_option("--worksheet", worksheet, "Worksheet CSV to write");
  auto* vd_opt = audit->add_option("--verdicts", audit_verdicts, "Filled worksheet to check");
  ws_opt->excludes(vd_opt);

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Rank the collection for every query");
  std::string run_out;
  std::optional<std::size_t> depth;
  retrieve->add_option("--config", config_path, "Run config")->required();
  retrieve->add_option("--out", run_out, "TREC run file to write")->required();
  retrieve->add_option("--depth", depth, "Ranked-list depth");

  // run
  auto* run = app.add_subcommand("run", "Execute the experiment grid and write the report");
  Overrides run_over;
  run->add_option("--config", config_path, "Run config")->required();
  run_over.add_to(run);

  // report
  auto* report = app.add_subcommand("report", "Rebuild the report of a run from its generation log");
  std::string run_dir, report_out;
  std::vector<std::string> formats{"md", "csv", "json"};
  report->add_option("--run-dir", run_dir, "Directory of a completed or partial run")->required();
  report->add_option("--out", report_out, "Where to write reports (default: the run directory)");
  report->add_option("--formats", formats, "Any of md, csv, json")->delimiter(',');

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run the grid once per cutoff with random relevant placement");
  Overrides sweep_over;
  std::vector<std::size_t> ks;
  sweep->add_option("--config", config_path, "Run config")->required();
  sweep->add_option("--ks", ks, "Cutoffs, e.g. 2,5,8,10")->delimiter(',');
  sweep_over.add_to(sweep);

  auto* schema = app.add_subcommand("schema", "Print the JSON schema of the run config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::err : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (*schema) {
      std::cout << config_schema();
      return kExitOk;
    }

    if (*ingest) {
      if (!config_path.empty()) {
        const auto c = RunConfig::load(config_path);
        queries = c.queries;
        collection = c.collection;
        qrels = c.qrels;
        synthetic = c.synthetic;
      }
      if (queries.empty() || collection.empty() || qrels.empty())
        throw ConfigError("ingest needs --config or --queries, --collection, and --qrels");
      RunConfig c;
      c.queries = queries;
      c.collection = collection;
      c.qrels = qrels;
      c.synthetic = synthetic;
      const Benchmark bench = load_config_benchmark(c);
      std::size_t n_synthetic = 0;
      for (const auto& [_, d] : bench.collection) n_synthetic += d.paraphrase_of ? 1 : 0;
      fmt::print("queries: {}\ndocuments: {} ({} synthetic)\njudgments: {}\n", bench.queries.size(),
                 bench.collection.size(), n_synthetic, bench.qrels.size());
      for (const auto* p : {&queries, &collection, &qrels, &synthetic})
        if (!p->empty()) fmt::print("sha256 {}  {}\n", sha256_file(*p), *p);
      return kExitOk;
    }

    if (*synth) {
      const auto c = RunConfig::load(config_path);
      const Benchmark bench = load_benchmark(c.queries, c.collection, c.qrels);
      SynthesisOptions options;
      options.temperature = c.generator.temperature;
      options.max_failure_rate = max_failure_rate;
      options.parallelism = synth_parallelism;
      if (!paraphrase_template.empty())
        options.paraphrase_template = load_prompt_template(paraphrase_template, "");
      std::unique_ptr<GenerationGateway> gateway;
      if (identity) gateway = MockGateway::identity_paraphraser();
      else if (c.generator.kind == GeneratorKind::Http) gateway = make_gateway(c.generator, synth_parallelism);
      else throw ConfigError("synth needs an http generator or --identity");
      const auto built = build_synthetic_collection(bench, *gateway, options);
      save_collection(built.documents, synth_out);
      fmt::print("synthetic documents: {}\nskipped: {}\nmean length ratio: {:.3f}\n", built.documents.size(),
                 built.skipped.size(), built.mean_length_ratio);
      for (const auto& s : built.skipped) fmt::print("skipped {}: {}\n", s.doc_id, s.reason);
      return kExitOk;
    }

    if (*audit) {
      const auto c = RunConfig::load(config_path);
      if (!audit_verdicts.empty()) {
        const auto summary = summarize_worksheet(audit_verdicts, c.audit.threshold);
        for (const auto& [status, counts] : summary.by_status)
          fmt::print("{}: {}/{} passed\n", to_string(status), counts.first, counts.second);
        fmt::print("pass rate {:.1f}% (threshold {:.1f}%): gate {}\n", 100.0 * summary.pass_rate(),
                   100.0 * summary.threshold, summary.gate_open() ? "open" : "closed");
        return summary.gate_open() ? kExitOk : kExitAuditGate;
      }
      if (worksheet.empty()) throw ConfigError("audit needs --worksheet or --verdicts");
      const Benchmark bench = load_config_benchmark(c);
      const auto prepared = prepare_queries(c, bench);
      const auto sample = make_audit_sample(bench, build_synthetic_index(bench.collection), prepared.contexts,
                                            prepared.sampled, c.audit.fraction, derive_seed(c.seed, "audit"));
      if (sample.items.empty()) throw ValidationError("no audit items: the collection has no synthetic documents");
      write_audit_worksheet(sample, bench, worksheet);
      fmt::print("audit items: {} ({} queries sampled for the non-relevant check)\n", sample.items.size(),
                 sample.nonrelevant_queries.size());
      return kExitOk;
    }

    if (*retrieve) {
      auto c = RunConfig::load(config_path);
      if (depth) c.retriever.depth = *depth;
      const Benchmark bench = load_config_benchmark(c);
      const auto prepared = prepare_queries(c, bench);
      write_run_file(prepared.ranked, run_out);
      fmt::print("ranked {} queries; {} have a single relevant document in the top {}\n", prepared.ranked.size(),
                 prepared.retained.size(), c.k);
      return kExitOk;
    }

    if (*run) {
      const auto c = run_over.apply(config_path);
      const auto result = run_pipeline(c);
      print_summary(result.report);
      if (!c.output_dir.empty()) fmt::print("wrote {}\n", c.output_dir);
      return kExitOk;
    }

    if (*report) {
      std::set<ReportFormat> fs_set;
      for (const auto& f : formats) {
        if (f == "md" || f == "markdown") fs_set.insert(ReportFormat::Markdown);
        else if (f == "csv") fs_set.insert(ReportFormat::Csv);
        else if (f == "json") fs_set.insert(ReportFormat::Json);
        else throw ConfigError("unknown report format \"" + f + "\"");
      }
      const auto rep = replay_report(run_dir);
      emit_report(rep, report_out.empty() ? run_dir : report_out, fs_set);
      print_summary(rep);
      return kExitOk;
    }

    if (*sweep) {
      auto c = sweep_over.apply(config_path);
      if (!ks.empty()) c.sweep_ks = ks;
      c.validate();
      const auto results = run_sweep(c);
      for (std::size_t i = 0; i < results.size(); ++i) {
        fmt::print("== k = {}\n", c.sweep_ks[i]);
        print_summary(results[i].report);
      }
      return kExitOk;
    }
  } catch (...) {
    return exit_code_for_current_exception();
  }
  return kExitOk;
}

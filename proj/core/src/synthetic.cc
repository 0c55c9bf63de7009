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

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "authorbias/csv.h"
#include "authorbias/error.h"

namespace authorbias {

SyntheticBuild build_synthetic_collection(const Benchmark& bench, GenerationGateway& gateway,
                                          const SynthesisOptions& options) {
  std::vector<const Document*> sources;
  for (const auto& [id, doc] : bench.collection) {
    if (doc.paraphrase_of) continue;
    if (doc.actual_author != Author::Human)
      throw ValidationError("source document \"" + id + "\" is not human-authored");
    sources.push_back(&doc);
  }

  // Paraphrases go through the runner so they share its concurrency bound.
  std::vector<GenerationRequest> requests;
  for (const auto* doc : sources) {
    GenerationRequest req;
    req.prompt = substitute(options.paraphrase_template.body, {{"passage", doc->text}});
    req.temperature = options.temperature;
    req.max_tokens = 1024;
    req.want_logprobs = false;
    req.tag = {doc->doc_id, "paraphrase"};
    requests.push_back(std::move(req));
  }
  const auto records = run_generations(gateway, requests, {options.parallelism}, nullptr);

  SyntheticBuild out;
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const Document& src = *sources[i];
    if (!records[i].ok) {
      out.skipped.push_back({src.doc_id, records[i].error});
      continue;
    }
    // Reuse paraphrase() for the trimming and naming contract.
    MockGateway replay([&](const GenerationRequest&) { return records[i].generation; });
    try {
      Document syn = paraphrase(replay, src, options.temperature, options.paraphrase_template);
      ratio_sum += static_cast<double>(syn.text.size()) / static_cast<double>(src.text.size());
      out.documents.emplace(syn.doc_id, std::move(syn));
    } catch (const GenerationError& e) {
      out.skipped.push_back({src.doc_id, e.what()});
    }
  }
  if (!out.documents.empty()) out.mean_length_ratio = ratio_sum / static_cast<double>(out.documents.size());

  const double failure_rate =
      sources.empty() ? 0.0 : static_cast<double>(out.skipped.size()) / static_cast<double>(sources.size());
  if (failure_rate > options.max_failure_rate)
    throw Error(fmt::format("{} of {} paraphrases failed ({:.1f}%), above the {:.1f}% limit", out.skipped.size(),
                            sources.size(), 100.0 * failure_rate, 100.0 * options.max_failure_rate));
  for (const auto& s : out.skipped) spdlog::warn("paraphrase skipped for {}: {}", s.doc_id, s.reason);
  return out;
}

const char* to_string(ExpectedStatus s) {
  return s == ExpectedStatus::StillRelevant ? "still_relevant" : "still_nonrelevant";
}

const char* to_string(Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; }

AuditSample make_audit_sample(const Benchmark& bench, const SyntheticIndex& synthetic,
                              const ContextMap& contexts, const std::vector<std::string>& query_ids,
                              double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("audit fraction must be in (0, 1]");
  AuditSample sample;

  auto gold = [&](const std::string& qid) {
    const Query* q = bench.find_query(qid);
    return q && !q->gold_answers.empty() ? q->gold_answers.front() : std::string();
  };
  auto add = [&](const std::string& qid, const std::string& doc, ExpectedStatus status) {
    auto syn = synthetic.find(doc);
    if (syn == synthetic.end()) return;
    const char* prefix = status == ExpectedStatus::StillRelevant ? "R" : "N";
    sample.items.push_back({fmt::format("{}:{}:{}", prefix, qid, doc), qid, doc, syn->second, gold(qid), status,
                            std::nullopt});
  };

  for (const auto& qid : query_ids) {
    auto ctx = contexts.find(qid);
    if (ctx == contexts.end()) continue;
    for (const auto& doc : ctx->second) {
      if (bench.qrels.relevant(qid, doc)) {
        add(qid, doc, ExpectedStatus::StillRelevant);
        break;
      }
    }
  }

  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(query_ids.size())));
  sample.nonrelevant_queries = sample_ids(query_ids, std::min(n, query_ids.size()), seed);
  for (const auto& qid : sample.nonrelevant_queries) {
    auto ctx = contexts.find(qid);
    if (ctx == contexts.end()) continue;
    for (const auto& doc : ctx->second)
      if (!bench.qrels.relevant(qid, doc)) add(qid, doc, ExpectedStatus::StillNonRelevant);
  }
  return sample;
}

void write_audit_worksheet(const AuditSample& sample, const Benchmark& bench, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  csv::write_row(out, {"item_id", "query_text", "original_text", "synthetic_text", "gold_answer", "expected_status",
                       "verdict"});
  for (const auto& item : sample.items) {
    const Query* q = bench.find_query(item.query_id);
    auto text_of = [&](const std::string& id) {
      auto it = bench.collection.find(id);
      return it == bench.collection.end() ? std::string() : it->second.text;
    };
    csv::write_row(out, {item.item_id, q ? q->text : "", text_of(item.original_doc_id),
                         text_of(item.synthetic_doc_id), item.gold_answer, to_string(item.expected_status),
                         item.verdict ? to_string(*item.verdict) : ""});
  }
}

namespace {

struct WorksheetRow {
  ExpectedStatus status;
  std::optional<Verdict> verdict;
};

std::unordered_map<std::string, WorksheetRow> read_worksheet(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw ParseError(path, 1, "empty worksheet");
  const auto& header = rows[0];
  auto col = [&](const char* name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(path, 1, std::string("missing column ") + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = col("item_id"), status_col = col("expected_status"), verdict_col = col("verdict");
  std::unordered_map<std::string, WorksheetRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) throw ParseError(path, r + 1, "wrong column count");
    WorksheetRow w;
    const auto& status = row[status_col];
    if (status == "still_relevant") w.status = ExpectedStatus::StillRelevant;
    else if (status == "still_nonrelevant") w.status = ExpectedStatus::StillNonRelevant;
    else throw ParseError(path, r + 1, "bad expected_status \"" + status + "\"");
    std::string v = row[verdict_col];
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "pass") w.verdict = Verdict::Pass;
    else if (v == "fail") w.verdict = Verdict::Fail;
    else if (!v.empty()) throw ParseError(path, r + 1, "verdict must be pass or fail");
    out[row[id_col]] = w;
  }
  return out;
}

AuditSummary summarize(const std::vector<AuditItem>& items, double threshold) {
  AuditSummary s;
  s.threshold = threshold;
  for (const auto& item : items) {
    auto& [passed, total] = s.by_status[item.expected_status];
    ++total;
    ++s.total;
    if (item.verdict == Verdict::Pass) {
      ++passed;
      ++s.passed;
    }
  }
  return s;
}

}  // namespace

AuditSummary record_audit(std::vector<AuditItem>& items, const std::string& verdicts_path, double threshold) {
  if (items.empty()) throw ValidationError("audit has no items; run the audit before synthetic conditions");
  const auto sheet = read_worksheet(verdicts_path);
  std::vector<std::string> missing;
  for (auto& item : items) {
    auto it = sheet.find(item.item_id);
    if (it == sheet.end() || !it->second.verdict) {
      missing.push_back(item.item_id);
      continue;
    }
    item.verdict = it->second.verdict;
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError(fmt::format("{} audit items lack a verdict: {}", missing.size(), list));
  }
  return summarize(items, threshold);
}

AuditSummary summarize_worksheet(const std::string& verdicts_path, double threshold) {
  const auto sheet = read_worksheet(verdicts_path);
  std::vector<AuditItem> items;
  std::vector<std::string> missing;
  for (const auto& [id, row] : sheet) {
    if (!row.verdict) missing.push_back(id);
    AuditItem item;
    item.item_id = id;
    item.expected_status = row.status;
    item.verdict = row.verdict;
    items.push_back(std::move(item));
  }
  if (items.empty()) throw ValidationError("audit worksheet has no items");
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError(fmt::format("{} audit items lack a verdict: {}", missing.size(), list));
  }
  return summarize(items, threshold);
}

}  // namespace authorbias

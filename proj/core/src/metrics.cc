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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "authorbias/csv.h"
#include "authorbias/error.h"
#include "json.hpp"

namespace authorbias {

int compute_omega(const OmegaContext& ctx) {
  return is_human_kind(ctx.relevant) && !is_human_kind(ctx.nonrelevant) ? 1 : -1;
}

OmegaContext first_term_labels(const ConditionSpec& spec) {
  const auto& c = spec.condition;
  if (c.mode == RagMode::Vanilla) throw ValidationError("vanilla conditions carry no labels");
  c.validate();
  const RagMode rel_mode = c.mode == RagMode::Mixed ? *c.mixed_relevant_mode : c.mode;
  const RagMode non_mode = c.mode == RagMode::Mixed ? *c.mixed_nonrelevant_mode : c.mode;
  auto kind = [&](Author actual, RagMode mode) {
    const Author shown = mode == RagMode::Informed ? actual : flip(actual);
    if (c.label_scheme == LabelScheme::Tokens) return shown == Author::Human ? LabelKind::Human : LabelKind::LLM;
    return shown == Author::Human ? LabelKind::NamedPerson : LabelKind::AI;
  };
  return {kind(spec.actual.relevant, rel_mode), kind(spec.actual.nonrelevant, non_mode)};
}

std::vector<std::string> paired_query_ids(const ConditionRun& a, const ConditionRun& b) {
  std::vector<std::string> out;
  for (const auto& [qid, _] : a.scores)
    if (b.scores.count(qid)) out.push_back(qid);
  return out;
}

namespace {

void check_comparable(const ConditionRun& a, const ConditionRun& b) {
  if (a.spec.k != b.spec.k)
    throw ValidationError(fmt::format("cannot pair {} with {}: k differs", a.id(), b.id()));
  if (a.spec.actual != b.spec.actual)
    throw ValidationError(fmt::format("cannot pair {} with {}: actual authorship differs", a.id(), b.id()));
}

double metric_of(const QueryScore& s, bool precision) { return precision ? s.precision : s.recall; }

PairedResult signed_difference(const ConditionRun& first, const ConditionRun& second, int omega) {
  check_comparable(first, second);
  if (omega != 1 && omega != -1) throw ValidationError("omega must be +1 or -1");
  PairedResult r;
  r.paired_queries = paired_query_ids(first, second);
  if (r.paired_queries.empty())
    throw ValidationError(fmt::format("no paired queries between {} and {}", first.id(), second.id()));
  for (bool precision : {true, false}) {
    std::vector<double> a, b;
    double sum = 0.0;
    for (const auto& qid : r.paired_queries) {
      a.push_back(metric_of(first.scores.at(qid), precision));
      b.push_back(metric_of(second.scores.at(qid), precision));
      sum += a.back() - b.back();
    }
    PairedMetric m;
    m.value = omega * sum / static_cast<double>(r.paired_queries.size());
    if (a.size() >= 2) {
      m.test = paired_t_test(a, b);
      if (omega < 0) m.test.t = -m.test.t;
    } else {
      m.test.degenerate = true;
    }
    (precision ? r.precision : r.recall) = m;
  }
  return r;
}

}  // namespace

PairedResult compute_cas(const ConditionRun& informed, const ConditionRun& vanilla) {
  check_comparable(informed, vanilla);
  PairedResult r;
  r.paired_queries = paired_query_ids(informed, vanilla);
  if (r.paired_queries.empty())
    throw ValidationError(fmt::format("no paired queries between {} and {}", informed.id(), vanilla.id()));
  for (bool precision : {true, false}) {
    std::vector<double> absdiff;
    double sum = 0.0;
    for (const auto& qid : r.paired_queries) {
      absdiff.push_back(std::abs(metric_of(informed.scores.at(qid), precision) -
                                 metric_of(vanilla.scores.at(qid), precision)));
      sum += absdiff.back();
    }
    PairedMetric m;
    m.value = sum / static_cast<double>(absdiff.size());
    if (absdiff.size() >= 2)
      m.test = one_sample_t_test(absdiff);
    else
      m.test.degenerate = true;
    (precision ? r.precision : r.recall) = m;
  }
  return r;
}

PairedResult compute_cab(const ConditionRun& informed, const ConditionRun& cf_informed, int omega) {
  return signed_difference(informed, cf_informed, omega);
}

PairedResult compute_mixed_cab(const ConditionRun& first, const ConditionRun& second, int omega) {
  return signed_difference(first, second, omega);
}

std::optional<double> compute_ac(const ConditionRun& run, CitationSubset subset,
                                 const std::vector<std::string>* queries) {
  double sum = 0.0;
  std::size_t count = 0;
  auto add = [&](const CitationConfidence& c) {
    for (const auto& item : c.items) {
      if (item.is_relevant == (subset == CitationSubset::Relevant)) {
        sum += item.probability;
        ++count;
      }
    }
  };
  if (queries) {
    for (const auto& qid : *queries)
      if (auto it = run.confidence.find(qid); it != run.confidence.end()) add(it->second);
  } else {
    for (const auto& [_, c] : run.confidence) add(c);
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

CitationFrequency citation_frequency(const ConditionRun& run, const std::vector<std::string>* queries) {
  double total = 0.0, relevant = 0.0;
  std::size_t n = 0;
  auto add = [&](const QueryScore& s) {
    total += static_cast<double>(s.n_cited);
    relevant += static_cast<double>(s.n_cited_relevant);
    ++n;
  };
  if (queries) {
    for (const auto& qid : *queries)
      if (auto it = run.scores.find(qid); it != run.scores.end()) add(it->second);
  } else {
    for (const auto& [_, s] : run.scores) add(s);
  }
  if (n == 0) throw ValidationError("citation frequency of an empty run");
  return {total / static_cast<double>(n), relevant / static_cast<double>(n)};
}

// ---------------------------------------------------------------------------

const PairSummary* MetricReport::find_pair(const std::string& kind, const std::string& first) const {
  for (const auto& p : pairs)
    if (p.kind == kind && p.first == first) return &p;
  return nullptr;
}

const ConditionSummary* MetricReport::find_condition(const std::string& id) const {
  for (const auto& c : conditions)
    if (c.condition == id) return &c;
  return nullptr;
}

namespace {

std::string mode_string(const RagCondition& c) {
  if (c.mode == RagMode::Mixed)
    return fmt::format("mixed({},{})", to_string(*c.mixed_relevant_mode), to_string(*c.mixed_nonrelevant_mode));
  return to_string(c.mode);
}

PairSummary summarize(const std::string& kind, const ConditionRun& a, const ConditionRun& b, int omega,
                      const PairedResult& r) {
  PairSummary s;
  s.kind = kind;
  s.first = a.id();
  s.second = b.id();
  s.omega = omega;
  s.n_queries = r.paired_queries.size();
  s.precision = r.precision.value;
  s.recall = r.recall.value;
  s.p_precision = r.precision.test.p_two_sided;
  s.p_recall = r.recall.test.p_two_sided;
  s.degenerate_precision = r.precision.test.degenerate;
  s.degenerate_recall = r.recall.test.degenerate;
  if (std::isfinite(r.precision.test.t)) s.t_precision = r.precision.test.t;
  if (std::isfinite(r.recall.test.t)) s.t_recall = r.recall.test.t;
  return s;
}

// Restricts a run to the given queries.
ConditionRun restrict(const ConditionRun& run, const std::vector<std::string>& queries) {
  ConditionRun out;
  out.spec = run.spec;
  out.n_failed = run.n_failed;
  for (const auto& q : queries) {
    if (auto it = run.scores.find(q); it != run.scores.end()) out.scores.emplace(q, it->second);
    if (auto it = run.confidence.find(q); it != run.confidence.end()) out.confidence.emplace(q, it->second);
  }
  return out;
}

bool same_cell(const ConditionSpec& a, const ConditionSpec& b) { return a.k == b.k && a.actual == b.actual; }

}  // namespace

MetricReport build_report(const std::vector<ConditionRun>& raw_runs) {
  MetricReport report;
  if (raw_runs.empty()) return report;

  std::set<std::string> all_queries, common;
  bool first = true;
  for (const auto& run : raw_runs) {
    std::set<std::string> ids;
    for (const auto& [qid, _] : run.scores) ids.insert(qid);
    all_queries.insert(ids.begin(), ids.end());
    if (first) {
      common = ids;
      first = false;
    } else {
      std::set<std::string> next;
      std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(),
                            std::inserter(next, next.begin()));
      common = std::move(next);
    }
  }
  report.paired_queries.assign(common.begin(), common.end());
  std::set_difference(all_queries.begin(), all_queries.end(), common.begin(), common.end(),
                      std::back_inserter(report.excluded_queries));
  if (report.paired_queries.empty()) throw ValidationError("no query was scored under every condition");

  std::vector<ConditionRun> runs;
  for (const auto& r : raw_runs) runs.push_back(restrict(r, report.paired_queries));

  for (const auto& run : runs) {
    ConditionSummary c;
    c.condition = run.id();
    c.relevant_author = to_string(run.spec.actual.relevant);
    c.nonrelevant_author = to_string(run.spec.actual.nonrelevant);
    c.mode = mode_string(run.spec.condition);
    if (run.spec.condition.mode != RagMode::Vanilla) c.label_scheme = to_string(run.spec.condition.label_scheme);
    c.k = run.spec.k;
    c.n_queries = run.scores.size();
    c.n_failed = run.n_failed;
    for (const auto& [_, s] : run.scores) {
      c.precision += s.precision;
      c.recall += s.recall;
      c.em += s.em;
    }
    const double n = static_cast<double>(c.n_queries);
    c.precision /= n;
    c.recall /= n;
    c.em /= n;
    c.ac_relevant = compute_ac(run, CitationSubset::Relevant);
    c.ac_nonrelevant = compute_ac(run, CitationSubset::NonRelevant);
    const auto freq = citation_frequency(run);
    c.mean_cited = freq.mean_total_cited;
    c.mean_cited_relevant = freq.mean_relevant_cited;
    report.conditions.push_back(std::move(c));
  }

  // Daggers: a row is marked when it beats every other non-mixed mode of its
  // cell (same actual authorship, k, and label scheme) with p < 0.05.
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& spec = runs[i].spec;
    if (spec.condition.mode == RagMode::Mixed) continue;
    for (bool precision : {true, false}) {
      bool better_than_all = true;
      std::size_t rivals = 0;
      for (std::size_t j = 0; j < runs.size() && better_than_all; ++j) {
        const auto& other = runs[j].spec;
        if (i == j || !same_cell(spec, other) || other.condition.mode == RagMode::Mixed) continue;
        if (spec.condition.mode != RagMode::Vanilla && other.condition.mode != RagMode::Vanilla &&
            spec.condition.label_scheme != other.condition.label_scheme)
          continue;
        if (spec.condition.mode == other.condition.mode) continue;
        ++rivals;
        std::vector<double> a, b;
        for (const auto& q : report.paired_queries) {
          a.push_back(metric_of(runs[i].scores.at(q), precision));
          b.push_back(metric_of(runs[j].scores.at(q), precision));
        }
        if (a.size() < 2) {
          better_than_all = false;
          break;
        }
        const auto t = paired_t_test(a, b);
        const double mean_diff =
            (precision ? report.conditions[i].precision - report.conditions[j].precision
                       : report.conditions[i].recall - report.conditions[j].recall);
        if (!(mean_diff > 0.0 && t.significant())) better_than_all = false;
      }
      const bool dagger = better_than_all && rivals > 0;
      (precision ? report.conditions[i].dagger_precision : report.conditions[i].dagger_recall) = dagger;
    }
  }

  for (const auto& inf : runs) {
    const auto& c = inf.spec.condition;
    if (c.mode == RagMode::Informed) {
      for (const auto& van : runs) {
        if (van.spec.condition.mode == RagMode::Vanilla && same_cell(inf.spec, van.spec)) {
          report.pairs.push_back(summarize("cas", inf, van, 1, compute_cas(inf, van)));
          break;
        }
      }
      for (const auto& cf : runs) {
        if (cf.spec.condition.mode == RagMode::CfInformed && same_cell(inf.spec, cf.spec) &&
            cf.spec.condition.label_scheme == c.label_scheme) {
          const int omega = compute_omega(first_term_labels(inf.spec));
          report.pairs.push_back(summarize("cab", inf, cf, omega, compute_cab(inf, cf, omega)));
          break;
        }
      }
    }
    if (c.mode == RagMode::Mixed && c.mixed_relevant_mode == RagMode::Informed &&
        c.mixed_nonrelevant_mode == RagMode::CfInformed) {
      for (const auto& other : runs) {
        const auto& oc = other.spec.condition;
        if (oc.mode == RagMode::Mixed && oc.mixed_relevant_mode == RagMode::CfInformed &&
            oc.mixed_nonrelevant_mode == RagMode::Informed && same_cell(inf.spec, other.spec) &&
            oc.label_scheme == c.label_scheme) {
          const int omega = compute_omega(first_term_labels(inf.spec));
          report.pairs.push_back(summarize("mixed_cab", inf, other, omega, compute_mixed_cab(inf, other, omega)));
          break;
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string report_to_json(const MetricReport& report) {
  json conditions = json::array();
  for (const auto& c : report.conditions) {
    conditions.push_back({
        {"condition", c.condition},
        {"relevant_author", c.relevant_author},
        {"nonrelevant_author", c.nonrelevant_author},
        {"mode", c.mode},
        {"label_scheme", c.label_scheme},
        {"k", c.k},
        {"n_queries", c.n_queries},
        {"n_failed", c.n_failed},
        {"precision", c.precision},
        {"recall", c.recall},
        {"em", c.em},
        {"ac_relevant", opt(c.ac_relevant)},
        {"ac_nonrelevant", opt(c.ac_nonrelevant)},
        {"mean_cited", c.mean_cited},
        {"mean_cited_relevant", c.mean_cited_relevant},
        {"dagger_precision", c.dagger_precision},
        {"dagger_recall", c.dagger_recall},
    });
  }
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({
        {"kind", p.kind},
        {"first", p.first},
        {"second", p.second},
        {"omega", p.omega},
        {"n_queries", p.n_queries},
        {"precision", p.precision},
        {"recall", p.recall},
        {"t_precision", opt(p.t_precision)},
        {"t_recall", opt(p.t_recall)},
        {"p_precision", p.p_precision},
        {"p_recall", p.p_recall},
        {"degenerate_precision", p.degenerate_precision},
        {"degenerate_recall", p.degenerate_recall},
    });
  }
  json j = {
      {"conditions", conditions},
      {"pairs", pairs},
      {"paired_queries", report.paired_queries},
      {"excluded_queries", report.excluded_queries},
  };
  return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricReport r;
  for (const auto& c : j.at("conditions")) {
    ConditionSummary s;
    s.condition = c.at("condition");
    s.relevant_author = c.at("relevant_author");
    s.nonrelevant_author = c.at("nonrelevant_author");
    s.mode = c.at("mode");
    s.label_scheme = c.at("label_scheme");
    s.k = c.at("k");
    s.n_queries = c.at("n_queries");
    s.n_failed = c.at("n_failed");
    s.precision = c.at("precision");
    s.recall = c.at("recall");
    s.em = c.at("em");
    s.ac_relevant = opt_from(c, "ac_relevant");
    s.ac_nonrelevant = opt_from(c, "ac_nonrelevant");
    s.mean_cited = c.at("mean_cited");
    s.mean_cited_relevant = c.at("mean_cited_relevant");
    s.dagger_precision = c.at("dagger_precision");
    s.dagger_recall = c.at("dagger_recall");
    r.conditions.push_back(std::move(s));
  }
  for (const auto& p : j.at("pairs")) {
    PairSummary s;
    s.kind = p.at("kind");
    s.first = p.at("first");
    s.second = p.at("second");
    s.omega = p.at("omega");
    s.n_queries = p.at("n_queries");
    s.precision = p.at("precision");
    s.recall = p.at("recall");
    s.t_precision = opt_from(p, "t_precision");
    s.t_recall = opt_from(p, "t_recall");
    s.p_precision = p.at("p_precision");
    s.p_recall = p.at("p_recall");
    s.degenerate_precision = p.at("degenerate_precision");
    s.degenerate_recall = p.at("degenerate_recall");
    r.pairs.push_back(std::move(s));
  }
  r.paired_queries = j.at("paired_queries").get<std::vector<std::string>>();
  r.excluded_queries = j.at("excluded_queries").get<std::vector<std::string>>();
  return r;
}

namespace {

std::string pretty_author(const std::string& a) { return a == "human" ? "Human" : "LLM"; }

std::string pretty_mode(const std::string& m) {
  if (m == "vanilla") return "Vanilla";
  if (m == "informed") return "Informed";
  if (m == "cf_informed") return "CF-informed";
  if (m == "mixed(informed,cf_informed)") return "Informed/CF-informed";
  if (m == "mixed(cf_informed,informed)") return "CF-informed/Informed";
  return m;
}

std::string dagger(bool on) { return on ? "†" : ""; }

std::string fmt_opt(const std::optional<double>& v, const char* spec) {
  return v ? fmt::format(fmt::runtime(spec), *v) : "n/a";
}

}  // namespace

std::string report_to_markdown(const MetricReport& report) {
  std::ostringstream out;
  out << "## Attribution quality and correctness\n\n";
  out << "| Relevant documents | Non-relevant documents | RAG mode | Labels | k | Precision | Recall | EM |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : report.conditions) {
    out << fmt::format("| {} | {} | {} | {} | {} | {:.1f}{} | {:.1f}{} | {:.3f} |\n", pretty_author(c.relevant_author),
                       pretty_author(c.nonrelevant_author), pretty_mode(c.mode),
                       c.label_scheme.empty() ? "-" : c.label_scheme, c.k, c.precision, dagger(c.dagger_precision),
                       c.recall, dagger(c.dagger_recall), c.em);
  }
  out << "\n† significantly better than the other RAG modes of the same row group (paired t-test, p < 0.05).\n";

  auto pair_table = [&](const std::string& kind, const std::string& title, bool show_omega) {
    bool any = false;
    for (const auto& p : report.pairs) any |= p.kind == kind;
    if (!any) return;
    out << "\n## " << title << "\n\n";
    out << (show_omega ? "| First term | Second term | ω | n | Precision | Recall |\n|---|---|---|---|---|---|\n"
                       : "| Informed | Vanilla | n | Precision | Recall |\n|---|---|---|---|---|\n");
    for (const auto& p : report.pairs) {
      if (p.kind != kind) continue;
      if (show_omega) {
        out << fmt::format("| {} | {} | {:+d} | {} | {:.1f}{} | {:.1f}{} |\n", p.first, p.second, p.omega,
                           p.n_queries, p.precision, dagger(p.sig_precision()), p.recall, dagger(p.sig_recall()));
      } else {
        out << fmt::format("| {} | {} | {} | {:.1f}{} | {:.1f}{} |\n", p.first, p.second, p.n_queries, p.precision,
                           dagger(p.sig_precision()), p.recall, dagger(p.sig_recall()));
      }
    }
    out << "\n† p < 0.05.\n";
  };
  pair_table("cas", "Attribution sensitivity (CAS)", false);
  pair_table("cab", "Attribution bias (CAB)", true);
  pair_table("mixed_cab", "Attribution bias, mixed mode (CAB)", true);

  out << "\n## Attribution confidence and citation counts\n\n";
  out << "| Condition | AC relevant | AC non-relevant | Cited | Relevant cited |\n|---|---|---|---|---|\n";
  for (const auto& c : report.conditions) {
    out << fmt::format("| {} | {} | {} | {:.2f} | {:.2f} |\n", c.condition, fmt_opt(c.ac_relevant, "{:.3f}"),
                       fmt_opt(c.ac_nonrelevant, "{:.3f}"), c.mean_cited, c.mean_cited_relevant);
  }
  out << fmt::format("\nPaired queries: {}. Excluded: {}.\n", report.paired_queries.size(),
                     report.excluded_queries.size());
  return out.str();
}

std::string report_to_csv(const MetricReport& report) {
  std::ostringstream out;
  csv::write_row(out, {"relevant_author", "nonrelevant_author", "mode", "label_scheme", "k", "n_queries",
                       "precision", "recall", "em", "dagger_precision", "dagger_recall", "ac_relevant",
                       "ac_nonrelevant", "mean_cited", "mean_cited_relevant"});
  for (const auto& c : report.conditions) {
    csv::write_row(out, {c.relevant_author, c.nonrelevant_author, c.mode, c.label_scheme, std::to_string(c.k),
                         std::to_string(c.n_queries), fmt::format("{}", c.precision), fmt::format("{}", c.recall),
                         fmt::format("{}", c.em), dagger(c.dagger_precision), dagger(c.dagger_recall),
                         c.ac_relevant ? fmt::format("{}", *c.ac_relevant) : "",
                         c.ac_nonrelevant ? fmt::format("{}", *c.ac_nonrelevant) : "",
                         fmt::format("{}", c.mean_cited), fmt::format("{}", c.mean_cited_relevant)});
  }
  return out.str();
}

std::string pairs_to_csv(const MetricReport& report) {
  std::ostringstream out;
  csv::write_row(out, {"kind", "first", "second", "omega", "n_queries", "precision", "recall", "t_precision",
                       "p_precision", "t_recall", "p_recall", "sig_precision", "sig_recall"});
  auto num = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  for (const auto& p : report.pairs) {
    csv::write_row(out, {p.kind, p.first, p.second, std::to_string(p.omega), std::to_string(p.n_queries),
                         fmt::format("{}", p.precision), fmt::format("{}", p.recall), num(p.t_precision),
                         fmt::format("{}", p.p_precision), num(p.t_recall), fmt::format("{}", p.p_recall),
                         dagger(p.sig_precision()), dagger(p.sig_recall())});
  }
  return out.str();
}

}  // namespace authorbias

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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "authorbias/context.h"
#include "authorbias/scoring.h"
#include "authorbias/stats.h"

namespace authorbias {

// Scores of one grid cell, keyed by query_id.
struct ConditionRun {
  ConditionSpec spec;
  std::map<std::string, QueryScore> scores;
  std::map<std::string, CitationConfidence> confidence;
  std::size_t n_failed = 0;

  std::string id() const { return spec.id(); }
};

// Authorship label kinds carried by R and N in the first term of a CAB pair.
struct OmegaContext {
  LabelKind relevant = LabelKind::Human;
  LabelKind nonrelevant = LabelKind::LLM;
};

// +1 iff R is labeled human-kind and N llm-kind; -1 otherwise.
int compute_omega(const OmegaContext& ctx);

// Label kinds a (non-vanilla) condition shows for R and N.
OmegaContext first_term_labels(const ConditionSpec& spec);

struct PairedMetric {
  double value = 0.0;
  TTestResult test;
};

struct PairedResult {
  PairedMetric precision;
  PairedMetric recall;
  std::vector<std::string> paired_queries;
};

// Query ids scored in both runs, sorted.
std::vector<std::string> paired_query_ids(const ConditionRun& a, const ConditionRun& b);

// Mean over paired queries of |M_informed - M_vanilla|. The significance test
// is a one-sample t-test of the per-query absolute differences against zero.
// Throws ValidationError when the runs do not share k and actual authorship,
// or when no query is paired.
PairedResult compute_cas(const ConditionRun& informed, const ConditionRun& vanilla);

// omega * mean over paired queries of (M_informed - M_cf_informed), with a
// paired t-test on the per-query values.
PairedResult compute_cab(const ConditionRun& informed, const ConditionRun& cf_informed, int omega);

// Same arithmetic for a Mixed pair: first is (Informed, CF-Informed) over R/N
// and second the swapped assignment.
PairedResult compute_mixed_cab(const ConditionRun& first, const ConditionRun& second, int omega);

enum class CitationSubset { Relevant, NonRelevant };

// Pooled mean probability of citations pointing into the subset, over all
// queries. nullopt when no citation qualifies. Restricted to `queries` when
// given.
std::optional<double> compute_ac(const ConditionRun& run, CitationSubset subset,
                                 const std::vector<std::string>* queries = nullptr);

struct CitationFrequency {
  double mean_total_cited = 0.0;
  double mean_relevant_cited = 0.0;
};

CitationFrequency citation_frequency(const ConditionRun& run, const std::vector<std::string>* queries = nullptr);

// ---------------------------------------------------------------------------
// Aggregated report.

struct ConditionSummary {
  std::string condition;
  std::string relevant_author;
  std::string nonrelevant_author;
  std::string mode;  // vanilla | informed | cf_informed | mixed(x,y)
  std::string label_scheme;  // empty for vanilla
  std::size_t k = 0;
  std::size_t n_queries = 0;
  std::size_t n_failed = 0;
  double precision = 0.0;
  double recall = 0.0;
  double em = 0.0;
  std::optional<double> ac_relevant;
  std::optional<double> ac_nonrelevant;
  double mean_cited = 0.0;
  double mean_cited_relevant = 0.0;
  // Significantly better than every other mode in its group (paired t-test).
  bool dagger_precision = false;
  bool dagger_recall = false;

  bool operator==(const ConditionSummary&) const = default;
};

struct PairSummary {
  std::string kind;  // cas | cab | mixed_cab
  std::string first;
  std::string second;
  int omega = 1;
  std::size_t n_queries = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::optional<double> t_precision;  // absent when degenerate
  std::optional<double> t_recall;
  double p_precision = 1.0;
  double p_recall = 1.0;
  bool degenerate_precision = false;
  bool degenerate_recall = false;

  bool sig_precision() const { return p_precision < 0.05; }
  bool sig_recall() const { return p_recall < 0.05; }
  bool operator==(const PairSummary&) const = default;
};

struct MetricReport {
  std::vector<ConditionSummary> conditions;
  std::vector<PairSummary> pairs;
  std::vector<std::string> paired_queries;
  std::vector<std::string> excluded_queries;

  const PairSummary* find_pair(const std::string& kind, const std::string& first) const;
  const ConditionSummary* find_condition(const std::string& id) const;
  bool operator==(const MetricReport&) const = default;
};

// Means are taken over the queries scored in every run. CAS, CAB, and mixed
// CAB pairs are discovered from the grid: Informed/Vanilla and
// Informed/CF-Informed sharing actual authorship and k (and the label scheme
// for CAB), and Mixed (Informed,CF) / (CF,Informed) pairs.
MetricReport build_report(const std::vector<ConditionRun>& runs);

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
std::string report_to_markdown(const MetricReport& report);
// One row per condition.
std::string report_to_csv(const MetricReport& report);
std::string pairs_to_csv(const MetricReport& report);

}  // namespace authorbias

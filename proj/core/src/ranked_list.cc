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

#include "authorbias/ranked_list.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "authorbias/error.h"
#include "authorbias/rng.h"

namespace authorbias {

bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

std::vector<std::string> RankedList::doc_ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.doc_id);
  return out;
}

bool RankedList::is_canonical() const {
  if (entries.size() > k) return false;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!seen.insert(entries[i].doc_id).second) return false;
    if (i && ranks_before(entries[i], entries[i - 1])) return false;
  }
  return true;
}

bool RankedList::canonicalize() {
  if (std::is_sorted(entries.begin(), entries.end(), ranks_before)) return false;
  std::stable_sort(entries.begin(), entries.end(), ranks_before);
  return true;
}

namespace {

struct RunRow {
  std::string doc_id;
  long rank;
  double score;
};

}  // namespace

RunFileLoad load_run_file(const std::string& path, std::size_t k) {
  if (k == 0) throw ValidationError("k must be >= 1");
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);

  std::map<std::string, std::vector<RunRow>> rows;
  std::map<std::string, std::set<std::string>> seen;
  RunFileLoad result;
  auto warn = [&](std::string msg) {
    spdlog::warn("{}", msg);
    result.warnings.push_back(std::move(msg));
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string qid, q0, did, rank_s, score_s, tag, extra;
    if (!(ss >> qid >> q0 >> did >> rank_s >> score_s >> tag) || (ss >> extra))
      throw ParseError(path, lineno, "expected 6 columns: query_id Q0 doc_id rank score tag");
    RunRow row{did, 0, 0.0};
    try {
      std::size_t used = 0;
      row.rank = std::stol(rank_s, &used);
      if (used != rank_s.size()) throw std::invalid_argument(rank_s);
      row.score = std::stod(score_s, &used);
      if (used != score_s.size()) throw std::invalid_argument(score_s);
    } catch (const std::exception&) {
      throw ParseError(path, lineno, "non-numeric rank or score");
    }
    if (!seen[qid].insert(did).second) {
      warn(fmt::format("{}:{}: duplicate doc {} for query {} ignored", path, lineno, did, qid));
      continue;
    }
    rows[qid].push_back(std::move(row));
  }

  for (auto& [qid, list] : rows) {
    RankedList ranked;
    ranked.query_id = qid;
    ranked.k = k;
    std::stable_sort(list.begin(), list.end(),
                     [](const RunRow& a, const RunRow& b) { return a.rank < b.rank; });
    for (const auto& r : list) ranked.entries.push_back({r.doc_id, r.score});
    if (ranked.canonicalize())
      warn(fmt::format("{}: rank and score order disagree for query {}; using score order", path, qid));
    if (ranked.entries.size() > k) ranked.entries.resize(k);
    result.lists.emplace(qid, std::move(ranked));
  }
  return result;
}

void write_run_file(const RunMap& lists, const std::string& path, const std::string& tag) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [qid, list] : lists) {
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      out << fmt::format("{} Q0 {} {} {} {}\n", qid, list.entries[i].doc_id, i + 1,
                         list.entries[i].score, tag);
    }
  }
}

RankedList place_relevant_random(const RankedList& list, const std::string& relevant_doc,
                                 std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ValidationError("k must be >= 1");
  std::vector<std::string> fill;
  for (const auto& e : list.entries) {
    if (fill.size() + 1 == k) break;
    if (e.doc_id != relevant_doc) fill.push_back(e.doc_id);
  }
  if (fill.size() + 1 < k)
    throw ValidationError(fmt::format("query {}: need {} non-relevant candidates, have {}",
                                      list.query_id, k - 1, fill.size()));
  Rng rng(seed);
  const auto position = static_cast<std::size_t>(rng.below(k));
  fill.insert(fill.begin() + static_cast<std::ptrdiff_t>(position), relevant_doc);

  RankedList out;
  out.query_id = list.query_id;
  out.k = k;
  for (std::size_t i = 0; i < k; ++i)
    out.entries.push_back({fill[i], static_cast<double>(k - i)});
  return out;
}

}  // namespace authorbias

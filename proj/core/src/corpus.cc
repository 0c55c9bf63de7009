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

#include "authorbias/corpus.h"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "authorbias/error.h"
#include "authorbias/rng.h"
#include "json.hpp"

namespace authorbias {

using nlohmann::json;

const char* to_string(Author a) { return a == Author::Human ? "human" : "llm"; }

Author author_from_string(const std::string& s) {
  if (s == "human") return Author::Human;
  if (s == "llm") return Author::LLM;
  throw ValidationError("unknown author \"" + s + "\" (expected human|llm)");
}

void Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
  if (grade < 0) throw ValidationError("negative relevance grade for " + query_id + "/" + doc_id);
  by_query_[query_id][doc_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
  auto q = by_query_.find(query_id);
  if (q == by_query_.end()) return 0;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

std::vector<std::string> Qrels::relevant_docs(const std::string& query_id) const {
  std::vector<std::string> out;
  auto q = by_query_.find(query_id);
  if (q == by_query_.end()) return out;
  for (const auto& [doc, grade] : q->second)
    if (grade > 0) out.push_back(doc);
  return out;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [_, docs] : by_query_) n += docs.size();
  return n;
}

const Query* Benchmark::find_query(const std::string& query_id) const {
  for (const auto& q : queries)
    if (q.query_id == query_id) return &q;
  return nullptr;
}

void Benchmark::validate() const {
  std::unordered_set<std::string> qids;
  for (const auto& q : queries) {
    if (!qids.insert(q.query_id).second)
      throw ValidationError("duplicate query_id \"" + q.query_id + "\"");
    if (q.gold_answers.empty())
      throw ValidationError("query \"" + q.query_id + "\" has no gold answers");
  }
  for (const auto& [id, doc] : collection) {
    if (id != doc.doc_id) throw ValidationError("collection key mismatch for \"" + id + "\"");
    if (doc.text.empty()) throw ValidationError("document \"" + id + "\" has empty text");
    if (doc.paraphrase_of) {
      auto src = collection.find(*doc.paraphrase_of);
      if (src == collection.end())
        throw ValidationError("document \"" + id + "\" is a paraphrase of unknown document \"" +
                              *doc.paraphrase_of + "\"");
      if (src->second.actual_author != Author::Human || doc.actual_author != Author::LLM)
        throw ValidationError("document \"" + id +
                              "\" must be llm-authored and paraphrase a human document");
    }
  }
  for (const auto& [qid, docs] : qrels.judgments()) {
    if (!qids.count(qid)) throw ValidationError("qrels reference unknown query_id \"" + qid + "\"");
    for (const auto& [did, _] : docs)
      if (!collection.count(did))
        throw ValidationError("qrels reference unknown doc_id \"" + did + "\"");
  }
}

SyntheticIndex build_synthetic_index(const Collection& collection) {
  SyntheticIndex index;
  for (const auto& [id, doc] : collection)
    if (doc.paraphrase_of) index.emplace(*doc.paraphrase_of, id);
  return index;
}

namespace {

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(line, lineno);
  }
}

json parse_json_line(const std::string& path, std::size_t lineno, const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError(path, lineno, "expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path, lineno, std::string("malformed JSON: ") + e.what());
  }
}

std::string required_string(const json& j, const char* key, const std::string& path,
                            std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ParseError(path, lineno, std::string("missing string field \"") + key + "\"");
  return it->get<std::string>();
}

}  // namespace

std::vector<Query> load_queries(const std::string& path) {
  std::vector<Query> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    json j = parse_json_line(path, lineno, line);
    Query q;
    q.query_id = required_string(j, "query_id", path, lineno);
    q.text = required_string(j, "text", path, lineno);
    auto answers = j.find("gold_answers");
    if (answers == j.end() || !answers->is_array() || answers->empty())
      throw ParseError(path, lineno, "\"gold_answers\" must be a non-empty array");
    for (const auto& a : *answers) {
      if (!a.is_string()) throw ParseError(path, lineno, "gold answers must be strings");
      q.gold_answers.push_back(a.get<std::string>());
    }
    if (!seen.insert(q.query_id).second)
      throw ParseError(path, lineno, "duplicate query_id \"" + q.query_id + "\"");
    out.push_back(std::move(q));
  });
  return out;
}

Collection load_collection(const std::string& path) {
  Collection out;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    json j = parse_json_line(path, lineno, line);
    Document d;
    d.doc_id = required_string(j, "doc_id", path, lineno);
    d.text = required_string(j, "text", path, lineno);
    if (d.text.empty()) throw ParseError(path, lineno, "empty document text");
    try {
      d.actual_author = author_from_string(required_string(j, "actual_author", path, lineno));
    } catch (const ValidationError& e) {
      throw ParseError(path, lineno, e.what());
    }
    if (auto p = j.find("paraphrase_of"); p != j.end() && !p->is_null()) {
      if (!p->is_string()) throw ParseError(path, lineno, "\"paraphrase_of\" must be a string");
      d.paraphrase_of = p->get<std::string>();
    }
    std::string id = d.doc_id;
    if (!out.emplace(id, std::move(d)).second)
      throw ParseError(path, lineno, "duplicate doc_id \"" + id + "\"");
  });
  return out;
}

Qrels load_qrels(const std::string& path) {
  Qrels qrels;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    std::istringstream row(line);
    std::string qid, iter, did, grade_str, extra;
    if (!(row >> qid >> iter >> did >> grade_str) || (row >> extra))
      throw ParseError(path, lineno, "expected 4 columns: query_id iteration doc_id grade");
    int grade = 0;
    try {
      std::size_t used = 0;
      grade = std::stoi(grade_str, &used);
      if (used != grade_str.size()) throw std::invalid_argument(grade_str);
    } catch (const std::exception&) {
      throw ParseError(path, lineno, "non-integer grade \"" + grade_str + "\"");
    }
    if (grade < 0) throw ParseError(path, lineno, "negative grade");
    if (!seen.emplace(qid, did).second)
      throw ParseError(path, lineno, "duplicate judgment for " + qid + "/" + did);
    qrels.set(qid, did, grade);
  });
  return qrels;
}

Benchmark load_benchmark(const std::string& queries_path, const std::string& collection_path,
                         const std::string& qrels_path) {
  Benchmark b;
  b.queries = load_queries(queries_path);
  b.collection = load_collection(collection_path);
  b.qrels = load_qrels(qrels_path);
  b.validate();
  return b;
}

void save_queries(const std::vector<Query>& queries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& q : queries) {
    json j = {{"query_id", q.query_id}, {"text", q.text}, {"gold_answers", q.gold_answers}};
    out << j.dump() << '\n';
  }
}

void save_collection(const Collection& collection, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [_, d] : collection) {
    json j = {{"doc_id", d.doc_id}, {"text", d.text}, {"actual_author", to_string(d.actual_author)}};
    if (d.paraphrase_of) j["paraphrase_of"] = *d.paraphrase_of;
    out << j.dump() << '\n';
  }
}

void save_qrels(const Qrels& qrels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [qid, docs] : qrels.judgments())
    for (const auto& [did, grade] : docs) out << qid << " 0 " << did << ' ' << grade << '\n';
}

FilterResult filter_single_relevant(const Benchmark& bench, const ContextMap& contexts) {
  FilterResult result;
  for (const auto& q : bench.queries) {
    auto it = contexts.find(q.query_id);
    if (it == contexts.end()) {
      result.missing.push_back(q.query_id);
      continue;
    }
    std::size_t relevant = 0;
    for (const auto& doc : it->second)
      if (bench.qrels.relevant(q.query_id, doc)) ++relevant;
    if (relevant == 1) result.retained.push_back(q.query_id);
  }
  return result;
}

std::vector<std::string> sample_ids(const std::vector<std::string>& population, std::size_t n,
                                    std::uint64_t seed) {
  if (n > population.size())
    throw ValidationError("cannot sample " + std::to_string(n) + " queries from a population of " +
                          std::to_string(population.size()));
  std::vector<std::string> pool = population;
  Rng rng(seed);
  // Partial Fisher-Yates from the front: the first n picks do not depend on n.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

std::vector<std::string> sample_queries(const Benchmark& bench, std::size_t n, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(bench.queries.size());
  for (const auto& q : bench.queries) ids.push_back(q.query_id);
  return sample_ids(ids, n, seed);
}

}  // namespace authorbias

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

#include "authorbias/bm25.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "authorbias/error.h"

namespace authorbias {

void Bm25Params::validate() const {
  if (!(k1 > 0.0)) throw ConfigError("bm25 k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25 b must be in [0, 1]");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
      current += ch;
    } else if (c >= 'A' && c <= 'Z') {
      current += static_cast<char>(c - 'A' + 'a');
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double bm25_idf(std::size_t num_docs, std::size_t doc_freq) {
  const double n = static_cast<double>(num_docs);
  const double df = static_cast<double>(doc_freq);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_term_weight(double idf, double tf, double doc_len, double avg_doc_len,
                        const Bm25Params& params) {
  const double norm = params.k1 * (1.0 - params.b + params.b * doc_len / avg_doc_len);
  return idf * tf * (params.k1 + 1.0) / (tf + norm);
}

Bm25Index::Bm25Index(const Collection& collection) {
  if (collection.empty()) throw ValidationError("cannot index an empty collection");
  doc_ids_.reserve(collection.size());
  doc_lens_.reserve(collection.size());
  std::uint64_t total_len = 0;
  for (const auto& [id, doc] : collection) {
    const auto docno = static_cast<std::uint32_t>(doc_ids_.size());
    doc_ids_.push_back(id);
    auto tokens = tokenize(doc.text);
    doc_lens_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_len += tokens.size();
    std::sort(tokens.begin(), tokens.end());
    for (std::size_t i = 0; i < tokens.size();) {
      std::size_t j = i;
      while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
      postings_[tokens[i]].push_back({docno, static_cast<std::uint32_t>(j - i)});
      i = j;
    }
  }
  avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(doc_ids_.size());
  // A collection of empty-token documents still needs a usable length norm.
  if (avg_doc_len_ == 0.0) avg_doc_len_ = 1.0;
}

std::size_t Bm25Index::doc_frequency(const std::string& term) const {
  const auto* p = postings(term);
  return p ? p->size() : 0;
}

const std::vector<Posting>* Bm25Index::postings(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

RankedList Bm25Index::retrieve(const Query& query, std::size_t k, const Bm25Params& params) const {
  if (k == 0) throw ValidationError("k must be >= 1");
  params.validate();
  auto tokens = tokenize(query.text);
  std::set<std::string> terms(tokens.begin(), tokens.end());

  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& term : terms) {
    const auto* plist = postings(term);
    if (!plist) continue;
    const double idf = bm25_idf(num_docs(), plist->size());
    for (const auto& p : *plist) {
      acc[p.doc] += bm25_term_weight(idf, p.tf, doc_lens_[p.doc], avg_doc_len_, params);
    }
  }

  RankedList out;
  out.query_id = query.query_id;
  out.k = k;
  out.entries.reserve(acc.size());
  for (const auto& [doc, score] : acc) out.entries.push_back({doc_ids_[doc], score});
  const auto keep = std::min(k, out.entries.size());
  std::partial_sort(out.entries.begin(), out.entries.begin() + static_cast<std::ptrdiff_t>(keep),
                    out.entries.end(), ranks_before);
  out.entries.resize(keep);
  return out;
}

}  // namespace authorbias

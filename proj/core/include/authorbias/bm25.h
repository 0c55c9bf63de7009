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

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "authorbias/corpus.h"
#include "authorbias/ranked_list.h"

namespace authorbias {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;

  void validate() const;
};

// Lowercases ASCII letters and splits on every byte that is not an ASCII
// letter or digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words stay
// intact. No stemming, no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

// Robertson-Sparck Jones idf with the +1 inside the log, so it is never negative.
double bm25_idf(std::size_t num_docs, std::size_t doc_freq);

// Contribution of one query term to one document.
double bm25_term_weight(double idf, double tf, double doc_len, double avg_doc_len,
                        const Bm25Params& params);

struct Posting {
  std::uint32_t doc = 0;
  std::uint32_t tf = 0;
};

// In-memory inverted index. Immutable after construction; concurrent
// retrieve() calls are safe.
class Bm25Index {
 public:
  // Throws ValidationError on an empty collection.
  explicit Bm25Index(const Collection& collection);

  std::size_t num_docs() const { return doc_ids_.size(); }
  double avg_doc_length() const { return avg_doc_len_; }
  std::size_t doc_frequency(const std::string& term) const;
  const std::vector<Posting>* postings(const std::string& term) const;
  const std::string& doc_id(std::uint32_t doc) const { return doc_ids_[doc]; }
  std::uint32_t doc_length(std::uint32_t doc) const { return doc_lens_[doc]; }
  std::size_t vocabulary_size() const { return postings_.size(); }

  // Scores every document sharing at least one distinct query term. Repeated
  // query terms are counted once.
  RankedList retrieve(const Query& query, std::size_t k, const Bm25Params& params = {}) const;

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lens_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avg_doc_len_ = 0.0;
};

}  // namespace authorbias

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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "authorbias/corpus.h"
#include "authorbias/gateway.h"

namespace authorbias::testing {

// Self-deleting scratch directory.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / fmt::format("authorbias-{:016x}", (std::uint64_t{rd()} << 32) | rd());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Benchmark where every query has one relevant document that outranks its
// `distractors` non-relevant documents under BM25. Every original has an
// identical synthetic twin when `with_synthetic` is set.
inline Benchmark make_oracle_benchmark(std::size_t n_queries, std::size_t distractors, bool with_synthetic) {
  Benchmark b;
  auto add = [&](const std::string& id, const std::string& text) {
    b.collection.emplace(id, Document{id, text, Author::Human, std::nullopt});
    if (with_synthetic) {
      const std::string sid = id + kSyntheticSuffix;
      b.collection.emplace(sid, Document{sid, text, Author::LLM, id});
    }
  };
  for (std::size_t i = 0; i < n_queries; ++i) {
    const std::string qid = fmt::format("q{:04d}", i);
    b.queries.push_back({qid, fmt::format("where is landmark{} of topic{}", i, i), {fmt::format("city{}", i)}});
    const std::string rel = fmt::format("r{:04d}", i);
    add(rel, fmt::format("landmark{0} of topic{0} stands in city{0}; landmark{0} is famous", i));
    b.qrels.set(qid, rel, 1);
    for (std::size_t j = 0; j < distractors; ++j)
      add(fmt::format("n{:04d}_{:02d}", i, j), fmt::format("topic{} notes volume {} filler text {}", i, j, j * 7 + i));
  }
  return b;
}

}  // namespace authorbias::testing

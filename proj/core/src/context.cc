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

#include "authorbias/context.h"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "authorbias/csv.h"
#include "authorbias/error.h"
#include "authorbias/rng.h"

namespace authorbias {

const char* to_string(RagMode m) {
  switch (m) {
    case RagMode::Vanilla: return "vanilla";
    case RagMode::Informed: return "informed";
    case RagMode::CfInformed: return "cf_informed";
    case RagMode::Mixed: return "mixed";
  }
  return "?";
}

const char* to_string(LabelScheme s) { return s == LabelScheme::Tokens ? "tokens" : "names"; }

RagMode rag_mode_from_string(const std::string& s) {
  if (s == "vanilla") return RagMode::Vanilla;
  if (s == "informed") return RagMode::Informed;
  if (s == "cf_informed" || s == "cf-informed") return RagMode::CfInformed;
  if (s == "mixed") return RagMode::Mixed;
  throw ConfigError("unknown RAG mode \"" + s + "\"");
}

LabelScheme label_scheme_from_string(const std::string& s) {
  if (s == "tokens") return LabelScheme::Tokens;
  if (s == "names" || s == "extended_names") return LabelScheme::ExtendedNames;
  throw ConfigError("unknown label scheme \"" + s + "\"");
}

void RagCondition::validate() const {
  const bool has_sub = mixed_relevant_mode.has_value() || mixed_nonrelevant_mode.has_value();
  if (mode != RagMode::Mixed) {
    if (has_sub) throw ConfigError("mixed sub-modes given for a non-mixed condition");
    return;
  }
  if (!mixed_relevant_mode || !mixed_nonrelevant_mode)
    throw ConfigError("mixed condition requires both relevant and non-relevant modes");
  for (RagMode m : {*mixed_relevant_mode, *mixed_nonrelevant_mode})
    if (m != RagMode::Informed && m != RagMode::CfInformed)
      throw ConfigError("mixed sub-modes must be informed or cf_informed");
}

std::string ConditionSpec::id() const {
  std::string mode = to_string(condition.mode);
  if (condition.mode == RagMode::Mixed && condition.mixed_relevant_mode &&
      condition.mixed_nonrelevant_mode) {
    mode = fmt::format("mixed({},{})", to_string(*condition.mixed_relevant_mode),
                       to_string(*condition.mixed_nonrelevant_mode));
  }
  std::string out = fmt::format("{}-{}/{}", to_string(actual.relevant), to_string(actual.nonrelevant), mode);
  if (condition.mode != RagMode::Vanilla) out += fmt::format("/{}", to_string(condition.label_scheme));
  out += fmt::format("/k{}", k);
  return out;
}

ConditionSpec ConditionSpec::parse(const std::string& id) {
  std::vector<std::string> parts;
  std::stringstream ss(id);
  for (std::string part; std::getline(ss, part, '/');) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 4) throw ConfigError("bad condition id \"" + id + "\"");

  ConditionSpec spec;
  const auto dash = parts[0].find('-');
  if (dash == std::string::npos) throw ConfigError("bad authorship in condition id \"" + id + "\"");
  try {
    spec.actual.relevant = author_from_string(parts[0].substr(0, dash));
    spec.actual.nonrelevant = author_from_string(parts[0].substr(dash + 1));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }

  const std::string& mode = parts[1];
  if (mode.rfind("mixed(", 0) == 0 && mode.back() == ')') {
    const auto inner = mode.substr(6, mode.size() - 7);
    const auto comma = inner.find(',');
    if (comma == std::string::npos) throw ConfigError("bad mixed mode in \"" + id + "\"");
    spec.condition.mode = RagMode::Mixed;
    spec.condition.mixed_relevant_mode = rag_mode_from_string(inner.substr(0, comma));
    spec.condition.mixed_nonrelevant_mode = rag_mode_from_string(inner.substr(comma + 1));
  } else {
    spec.condition.mode = rag_mode_from_string(mode);
  }

  const bool vanilla = spec.condition.mode == RagMode::Vanilla;
  if (parts.size() != (vanilla ? 3u : 4u)) throw ConfigError("bad condition id \"" + id + "\"");
  if (!vanilla) spec.condition.label_scheme = label_scheme_from_string(parts[2]);
  const std::string& kpart = parts.back();
  if (kpart.size() < 2 || kpart[0] != 'k') throw ConfigError("bad k in condition id \"" + id + "\"");
  try {
    spec.k = std::stoul(kpart.substr(1));
  } catch (const std::exception&) {
    throw ConfigError("bad k in condition id \"" + id + "\"");
  }
  spec.condition.validate();
  return spec;
}

void ContextAssembly::validate() const {
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (docs[i].index != i) throw ValidationError("context indices are not contiguous for " + query_id);
  for (std::size_t i : relevant_set)
    if (nonrelevant_set.count(i)) throw ValidationError("index in both relevant and non-relevant sets");
  if (relevant_set.size() + nonrelevant_set.size() != docs.size())
    throw ValidationError("relevant and non-relevant sets do not cover the context");
  for (std::size_t i : relevant_set)
    if (i >= docs.size()) throw ValidationError("relevant index out of range");
  for (std::size_t i : nonrelevant_set)
    if (i >= docs.size()) throw ValidationError("non-relevant index out of range");
}

ContextAssembly assemble_context(const Benchmark& bench, const SyntheticIndex& synthetic,
                                 const std::string& query_id,
                                 const std::vector<std::string>& original_doc_ids,
                                 AuthorshipConfig actual) {
  ContextAssembly ctx;
  ctx.query_id = query_id;
  for (std::size_t i = 0; i < original_doc_ids.size(); ++i) {
    const auto& original = original_doc_ids[i];
    const bool relevant = bench.qrels.relevant(query_id, original);
    const Author wanted = relevant ? actual.relevant : actual.nonrelevant;

    std::string doc_id = original;
    if (wanted == Author::LLM) {
      auto it = synthetic.find(original);
      if (it == synthetic.end())
        throw ValidationError("no synthetic rewrite of \"" + original + "\" for query " + query_id);
      doc_id = it->second;
    }
    auto doc = bench.collection.find(doc_id);
    if (doc == bench.collection.end()) throw ValidationError("unknown doc_id \"" + doc_id + "\"");
    if (doc->second.actual_author != wanted)
      throw ValidationError("document \"" + doc_id + "\" is not " + to_string(wanted) + "-authored");

    ctx.docs.push_back({i, doc_id, doc->second.text, wanted, std::nullopt});
    (relevant ? ctx.relevant_set : ctx.nonrelevant_set).insert(i);
  }
  return ctx;
}

void NamePool::validate() const {
  if (names.empty()) throw ValidationError("name pool is empty");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& n : names) {
    if (n.first.empty() || n.second.empty()) throw ValidationError("name pool has a blank name");
    if (!seen.insert(n).second)
      throw ValidationError("name pool has duplicate pair " + n.first + " " + n.second);
  }
}

NamePool load_name_pool(const std::string& csv_path) {
  auto rows = csv::read_file(csv_path);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "first" || rows[0][1] != "last")
    throw ParseError(csv_path, 1, "expected header \"first,last\"");
  NamePool pool;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw ParseError(csv_path, i + 1, "expected 2 columns");
    pool.names.emplace_back(rows[i][0], rows[i][1]);
  }
  pool.validate();
  return pool;
}

void save_name_pool(const NamePool& pool, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot write " + csv_path);
  csv::write_row(out, {"first", "last"});
  for (const auto& [first, last] : pool.names) csv::write_row(out, {first, last});
}

AuthorLabel label_for(Author author, LabelScheme scheme, const NamePool* pool, std::size_t name_index) {
  if (scheme == LabelScheme::Tokens) {
    return author == Author::Human ? AuthorLabel{LabelKind::Human, kHumanLabel}
                                   : AuthorLabel{LabelKind::LLM, kLlmLabel};
  }
  if (author == Author::LLM) return {LabelKind::AI, kAiLabel};
  if (!pool || pool->names.empty()) throw ConfigError("extended-name labels need a name pool");
  const auto& [first, last] = pool->names[name_index % pool->names.size()];
  return {LabelKind::NamedPerson, first + " " + last};
}

ContextAssembly assign_labels(const ContextAssembly& ctx, const RagCondition& cond,
                              const NamePool* pool, std::uint64_t seed) {
  cond.validate();
  if (cond.mode != RagMode::Vanilla && cond.label_scheme == LabelScheme::ExtendedNames &&
      (!pool || pool->names.empty()))
    throw ConfigError("extended-name labels need a name pool");

  ContextAssembly out = ctx;
  if (cond.mode == RagMode::Vanilla) {
    for (auto& d : out.docs) d.label.reset();
    return out;
  }

  Rng names(derive_seed(seed, "names", ctx.query_id));
  for (auto& d : out.docs) {
    // Drawn for every slot so positions line up across conditions.
    const std::size_t name_index =
        pool && !pool->names.empty() ? static_cast<std::size_t>(names.below(pool->names.size())) : 0;
    RagMode mode = cond.mode;
    if (mode == RagMode::Mixed)
      mode = ctx.is_relevant(d.index) ? *cond.mixed_relevant_mode : *cond.mixed_nonrelevant_mode;
    const Author shown = mode == RagMode::Informed ? d.actual_author : flip(d.actual_author);
    d.label = label_for(shown, cond.label_scheme, pool, name_index);
  }
  return out;
}

namespace {

constexpr const char* kVanillaBody =
    "Instruction: Write a concise answer for the given question (query) based on the provided "
    "search result documents, and cite them properly using [0][1][2] etc.\n"
    "\n"
    "Please take these strict considerations into account during answer generation:\n"
    "1. Documents are retrieved by a search engine. As such, not all the documents are relevant "
    "to the query. Only use and cite the relevant documents that contain the answer.\n"
    "2. Do not analyze irrelevant documents.\n"
    "\n"
    "Search Results:\n"
    "\n"
    "{documents}\n"
    "\n"
    "Question: {question}.\n";

constexpr const char* kInformedBody =
    "Instruction: Write a concise answer for the given question (query) based on the provided "
    "search result documents, and cite them properly using [0][1][2] etc.\n"
    "\n"
    "Please take these strict considerations into account, during answer generation:\n"
    "1. Documents are retrieved by a search engine. As such, not all the documents are relevant "
    "to the query. Only use and cite the relevant documents that contain the answer.\n"
    "2. Do not analyze irrelevant documents.\n"
    "3. Some documents are authored by humans, while others are generated by a Large Language "
    "Model (LLM). We denote this distinction for each document.\n"
    "\n"
    "Search Results:\n"
    "\n"
    "{documents}\n"
    "\n"
    "Question: {question}.\n";

constexpr const char* kParaphraseBody =
    "Instruction: Please write a high-quality paraphrase for the given passage.\n"
    "Keep the length approximately the same. Do not add any new information.\n"
    "\n"
    "Passage: {passage}\n";

constexpr const char* kVanillaRow = "Document [{index}]({text})";
constexpr const char* kInformedRow = "Document [{index}]({text}) (written by {author})";

}  // namespace

const PromptTemplate& default_vanilla_template() {
  static const PromptTemplate t{kVanillaBody, kVanillaRow};
  return t;
}

const PromptTemplate& default_informed_template() {
  static const PromptTemplate t{kInformedBody, kInformedRow};
  return t;
}

const PromptTemplate& default_paraphrase_template() {
  static const PromptTemplate t{kParaphraseBody, ""};
  return t;
}

const std::string& name_pool_instruction() {
  static const std::string s =
      "Instruction: Please generate a random list of 100 (first name, last name) pairs consisting "
      "of male and female names.";
  return s;
}

PromptTemplate load_prompt_template(const std::string& path, const std::string& fallback_row) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open template " + path);
  PromptTemplate t{"", fallback_row};
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.rfind("#row: ", 0) == 0) {
      t.row = line.substr(6);
      continue;
    }
    if (!first) t.body += '\n';
    t.body += line;
    first = false;
  }
  if (!t.body.empty()) t.body += '\n';
  return t;
}

std::string substitute(const std::string& tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string_view key(tmpl.data() + i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [k, v] : values) {
          if (k == key) {
            out += v;
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string render_prompt(const ContextAssembly& ctx, const RagCondition& cond, const Query& query,
                          const PromptTemplates& templates) {
  const bool vanilla = cond.mode == RagMode::Vanilla;
  const PromptTemplate& t = vanilla ? templates.vanilla : templates.informed;
  std::string documents;
  for (const auto& d : ctx.docs) {
    if (!documents.empty()) documents += '\n';
    std::string author = d.label ? d.label->display : "";
    documents += substitute(t.row, {{"index", std::to_string(d.index)}, {"text", d.text}, {"author", author}});
  }
  return substitute(t.body, {{"documents", documents}, {"question", query.text}});
}

}  // namespace authorbias

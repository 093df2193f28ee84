#include "metatp/corpus/ingest.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "metatp/common/error.hpp"
#include "metatp/common/rng.hpp"
#include "metatp/corpus/subtokens.hpp"
#include "metatp/corpus/syntax_tree.hpp"

namespace metatp::corpus {
namespace {

bool is_special_string(const std::string& s) {
  return std::find(std::begin(kSubtokenSpecials), std::end(kSubtokenSpecials), s) != std::end(kSubtokenSpecials);
}

// Interns node types per function so routes can be deduplicated as small
// integer keys before any strings are materialized.
class LocalPaths {
 public:
  explicit LocalPaths(const SyntaxTree& tree, std::size_t max_len) : tree_(tree), max_len_(max_len) {
    out_.emplace_back();
    index_.emplace(std::vector<int>{}, 0);
  }

  int add_route(const std::vector<PathStep>& steps) {
    key_.clear();
    for (std::size_t i : resample_indices(steps.size(), max_len_)) {
      key_.push_back(type_id(steps[i].node) * 3 + static_cast<int>(steps[i].dir));
    }
    return intern();
  }

  int add_root_path(int leaf) {
    key_.clear();
    for (int v = leaf; v >= 0; v = tree_.nodes[static_cast<std::size_t>(v)].parent) key_.push_back(type_id(v) * 3);
    std::reverse(key_.begin(), key_.end());
    if (key_.size() > max_len_) {
      std::vector<int> sampled;
      for (std::size_t i : resample_indices(key_.size(), max_len_)) sampled.push_back(key_[i]);
      key_ = std::move(sampled);
    }
    return intern();
  }

  std::vector<NodeTypePath> take() { return std::move(out_); }

 private:
  int type_id(int node) {
    const auto& t = tree_.nodes[static_cast<std::size_t>(node)].type;
    const auto [it, inserted] = types_.emplace(t, static_cast<int>(type_names_.size()));
    if (inserted) type_names_.push_back(t);
    return it->second;
  }

  int intern() {
    const auto [it, inserted] = index_.emplace(key_, static_cast<int>(out_.size()));
    if (inserted) {
      NodeTypePath p;
      p.reserve(key_.size());
      for (int k : key_) p.push_back(fuse_direction(type_names_[static_cast<std::size_t>(k / 3)], static_cast<PathDirection>(k % 3)));
      out_.push_back(std::move(p));
    }
    return it->second;
  }

  const SyntaxTree& tree_;
  std::size_t max_len_;
  std::map<std::string, int> types_;
  std::vector<std::string> type_names_;
  std::map<std::vector<int>, int> index_;
  std::vector<NodeTypePath> out_;
  std::vector<int> key_;
};

int lookup_path(const NodeTypePath& path, const Vocabulary& vocab, PathTable& table) {
  if (path.empty()) return 0;
  std::vector<int> ids;
  ids.reserve(path.size());
  for (const auto& t : path) ids.push_back(vocab.node_types.id(t));
  return table.intern(ids);
}

void fill_paths(const ParsedFunction& fn, const Vocabulary& vocab, PathTable& table, CodeSample& out) {
  std::vector<int> global(fn.local_paths.size());
  for (std::size_t i = 0; i < fn.local_paths.size(); ++i) global[i] = lookup_path(fn.local_paths[i], vocab, table);
  out.rel_paths.resize(fn.rel_paths.size());
  for (std::size_t i = 0; i < fn.rel_paths.size(); ++i) out.rel_paths[i] = global[static_cast<std::size_t>(fn.rel_paths[i])];
  out.abs_paths.resize(fn.abs_paths.size());
  for (std::size_t i = 0; i < fn.abs_paths.size(); ++i) out.abs_paths[i] = global[static_cast<std::size_t>(fn.abs_paths[i])];
  out.leaf_nodes = fn.leaf_nodes;
}

}  // namespace

const char* to_string(Task task) { return task == Task::kSummarization ? "summarization" : "completion"; }

Task task_from_string(const std::string& name) {
  if (name == "summarization") return Task::kSummarization;
  if (name == "completion") return Task::kCompletion;
  throw Error(ErrorCode::kConfig, "unknown task '" + name + "'");
}

ParsedFunction analyze_function(const SourceFunction& fn, const LanguageId& language, const AnalyzeOptions& options) {
  const SyntaxTree tree = parse_source(fn.code, language);
  ParsedFunction out;
  out.id = fn.id;
  out.language = language;
  out.split = fn.split;

  const int name_leaf = function_name_leaf(tree, find_function_node(tree));
  std::string name;
  if (name_leaf >= 0) {
    name = std::string(tree.text(name_leaf, fn.code));
    out.name_subtokens = split_identifier(name);
  }

  for (const auto& tok : leaf_tokens(tree, fn.code)) {
    if (out.subtokens.size() >= options.max_length) break;
    const bool is_name = !name.empty() && tok.text == name;
    const int slot = static_cast<int>(out.leaf_nodes.size());
    out.leaf_nodes.push_back(tok.leaf);
    for (auto& piece : split_identifier(tok.text)) {
      if (out.subtokens.size() >= options.max_length) break;
      out.subtokens.push_back(std::move(piece));
      out.is_name.push_back(is_name);
      out.leaf_of.push_back(slot);
    }
  }

  const std::size_t m = out.leaf_nodes.size();
  LcaIndex lca(tree);
  LocalPaths paths(tree, options.max_path_length);
  out.rel_paths.assign(m * m, 0);
  std::vector<PathStep> route;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      route.clear();
      lca.route(out.leaf_nodes[a], out.leaf_nodes[b], route);
      out.rel_paths[a * m + b] = paths.add_route(route);
    }
  }
  out.abs_paths.resize(m);
  for (std::size_t a = 0; a < m; ++a) out.abs_paths[a] = paths.add_root_path(out.leaf_nodes[a]);
  out.local_paths = paths.take();
  return out;
}

Vocabulary build_vocabularies(std::span<const ParsedFunction> training, std::int64_t min_count) {
  if (training.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training functions");
  std::map<std::string, std::int64_t> sub_counts;
  std::map<std::string, std::int64_t> type_counts;
  for (const auto& fn : training) {
    for (const auto& s : fn.subtokens) ++sub_counts[s];
    for (const auto& s : fn.name_subtokens) ++sub_counts[s];
    for (const auto& p : fn.local_paths)
      for (const auto& t : p) ++type_counts[t];
  }
  Vocabulary v;
  v.min_count = min_count;
  v.subtokens = TokenVocab::build(kSubtokenSpecials, sub_counts, min_count);
  v.node_types = TokenVocab::build(kNodeTypeSpecials, type_counts, 1);
  return v;
}

CodeSample make_summarization_sample(const ParsedFunction& fn, const Vocabulary& vocab, PathTable& paths) {
  if (fn.name_subtokens.empty()) throw Error(ErrorCode::kNoName, "anonymous function " + fn.id);
  CodeSample s;
  s.id = fn.id;
  s.language = fn.language.code;
  for (std::size_t i = 0; i < fn.subtokens.size(); ++i) {
    if (fn.is_name[i]) {
      // one <NAME> per name leaf, whatever its subtoken count
      if (i > 0 && fn.is_name[i - 1] && fn.leaf_of[i - 1] == fn.leaf_of[i]) continue;
      s.subtokens.push_back(special::kName);
    } else {
      s.subtokens.push_back(vocab.subtokens.id(fn.subtokens[i]));
    }
    s.leaf_of.push_back(fn.leaf_of[i]);
  }
  fill_paths(fn, vocab, paths, s);
  SummaryTarget target;
  for (const auto& piece : fn.name_subtokens) target.subtokens.push_back(vocab.subtokens.id(piece));
  target.subtokens.push_back(special::kEos);
  s.target = std::move(target);
  return s;
}

int choose_mask_position(const std::vector<std::string>& subtokens, std::uint64_t seed) {
  std::vector<int> eligible;
  for (std::size_t i = 0; i < subtokens.size(); ++i) {
    if (!is_special_string(subtokens[i])) eligible.push_back(static_cast<int>(i));
  }
  if (subtokens.size() < 2 || eligible.empty()) {
    throw Error(ErrorCode::kTooShort, "need at least two subtokens with one eligible for masking");
  }
  Rng rng(seed);
  return eligible[uniform_index(rng, eligible.size())];
}

CodeSample make_completion_sample(const ParsedFunction& fn, std::uint64_t seed, const Vocabulary& vocab,
                                  PathTable& paths) {
  const int pos = choose_mask_position(fn.subtokens, seed);
  CodeSample s;
  s.id = fn.id;
  s.language = fn.language.code;
  s.subtokens.reserve(fn.subtokens.size());
  for (const auto& t : fn.subtokens) s.subtokens.push_back(vocab.subtokens.id(t));
  s.leaf_of = fn.leaf_of;
  fill_paths(fn, vocab, paths, s);
  CompletionTarget target;
  target.mask_position = pos;
  target.answer_id = s.subtokens[static_cast<std::size_t>(pos)];
  s.subtokens[static_cast<std::size_t>(pos)] = special::kMask;
  s.target = target;
  return s;
}

Dataset ingest(std::span<const SourceFunction> functions, const IngestOptions& options, IngestReport* report) {
  Dataset ds;
  ds.task = options.task;
  std::vector<LanguageId> langs;
  langs.reserve(functions.size());
  for (const auto& f : functions) {
    if (!has_grammar(f.language)) throw Error(ErrorCode::kUnsupportedLanguage, f.language);
    langs.push_back(ds.languages.intern(f.language));
  }

  const auto n = static_cast<std::ptrdiff_t>(functions.size());
  std::vector<std::optional<ParsedFunction>> parsed(functions.size());
  std::vector<std::string> errors(functions.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      parsed[k] = analyze_function(functions[k], langs[k], options.analyze);
    } catch (const Error& e) {
      errors[k] = functions[k].id + ": " + e.what();
    }
  }

  IngestReport local;
  std::vector<ParsedFunction> usable;
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    if (!parsed[k]) {
      ++local.parse_errors;
      local.errors.push_back(errors[k]);
      continue;
    }
    ++local.parsed;
    auto& fn = *parsed[k];
    const bool ok = options.task == Task::kSummarization
                        ? !fn.name_subtokens.empty()
                        : (fn.subtokens.size() >= 2 &&
                           std::any_of(fn.subtokens.begin(), fn.subtokens.end(), [](const auto& s) { return !is_special_string(s); }));
    if (!ok) {
      ++local.skipped;
      continue;
    }
    usable.push_back(std::move(fn));
  }

  std::vector<ParsedFunction> training;
  for (const auto& fn : usable)
    if (fn.split == "train") training.push_back(fn);
  ds.vocab = build_vocabularies(training, options.min_count);

  for (const auto& fn : usable) {
    auto& split = ds.splits[fn.split];
    if (options.task == Task::kSummarization) {
      split.push_back(make_summarization_sample(fn, ds.vocab, ds.paths));
    } else {
      const std::uint64_t seed = mix_seed(options.seed ^ fnv1a(fn.id.data(), fn.id.size()));
      split.push_back(make_completion_sample(fn, seed, ds.vocab, ds.paths));
    }
  }
  if (report) *report = std::move(local);
  return ds;
}

}  // namespace metatp::corpus

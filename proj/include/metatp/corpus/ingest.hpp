#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "metatp/corpus/ast_paths.hpp"
#include "metatp/corpus/code_sample.hpp"
#include "metatp/corpus/dataset.hpp"
#include "metatp/corpus/language.hpp"
#include "metatp/corpus/path_table.hpp"
#include "metatp/corpus/vocabulary.hpp"

namespace metatp::corpus {

inline constexpr const char* kNameToken = "<NAME>";

// Raw function record as it arrives from a corpus file.
struct SourceFunction {
  std::string id;
  std::string language;
  std::string split;  // "train", "valid", "test"
  std::string code;
};

// A parsed function before vocabulary lookup. Paths are deduplicated within
// the function; local path 0 is the empty path.
struct ParsedFunction {
  std::string id;
  LanguageId language;
  std::string split;
  std::vector<std::string> subtokens;  // capped at kMaxSequenceLength
  std::vector<bool> is_name;           // subtoken is an occurrence of the function name
  std::vector<int> leaf_of;            // position -> slot
  std::vector<int> leaf_nodes;         // slot -> tree node
  std::vector<NodeTypePath> local_paths;
  std::vector<int> rel_paths;  // slot x slot local path ids
  std::vector<int> abs_paths;  // slot -> local path id
  std::vector<std::string> name_subtokens;  // empty when anonymous
};

struct AnalyzeOptions {
  std::size_t max_length = kMaxSequenceLength;
  std::size_t max_path_length = kMaxPathLength;
};

// parse_source + leaf_tokens + split_identifier + all-pairs paths.
ParsedFunction analyze_function(const SourceFunction& fn, const LanguageId& language, const AnalyzeOptions& options = {});

// Counts subtokens (including summary targets) and direction-fused node
// types over the training functions. Throws Error(kEmptyCorpus).
Vocabulary build_vocabularies(std::span<const ParsedFunction> training, std::int64_t min_count = kDefaultMinCount);

// Body with name occurrences replaced by <NAME>; target = name subtokens
// + <EOS>. Throws Error(kNoName) for anonymous functions.
CodeSample make_summarization_sample(const ParsedFunction& fn, const Vocabulary& vocab, PathTable& paths);

// Masks one uniformly chosen non-special subtoken. Throws Error(kTooShort)
// when the function has fewer than two subtokens or no eligible position.
CodeSample make_completion_sample(const ParsedFunction& fn, std::uint64_t seed, const Vocabulary& vocab,
                                  PathTable& paths);

// Position chosen by make_completion_sample; exposed for testing.
int choose_mask_position(const std::vector<std::string>& subtokens, std::uint64_t seed);

struct IngestOptions {
  Task task = Task::kCompletion;
  std::int64_t min_count = kDefaultMinCount;
  std::uint64_t seed = 1;
  AnalyzeOptions analyze;
};

struct IngestReport {
  std::size_t parsed = 0;
  std::size_t parse_errors = 0;
  std::size_t skipped = 0;  // anonymous (summarization) or too short (completion)
  std::vector<std::string> errors;
};

// Full pipeline. Functions are analyzed in parallel; vocabulary and path
// table ids are assigned sequentially in input order so the result depends
// only on the input and the seed.
Dataset ingest(std::span<const SourceFunction> functions, const IngestOptions& options, IngestReport* report = nullptr);

// One JSON object per line: id, language, code and an optional split
// (default "train"). Throws Error(kCorruptFile).
std::vector<SourceFunction> read_source_functions(const std::filesystem::path& file);
void write_source_functions(const std::vector<SourceFunction>& functions, const std::filesystem::path& file);

}  // namespace metatp::corpus

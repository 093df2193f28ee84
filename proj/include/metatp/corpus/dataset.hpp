#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "metatp/corpus/code_sample.hpp"
#include "metatp/corpus/language.hpp"
#include "metatp/corpus/path_table.hpp"
#include "metatp/corpus/vocabulary.hpp"

namespace metatp::corpus {

inline constexpr int kDatasetFormatVersion = 1;

enum class RecordFormat { kJsonl, kBinary };

struct Dataset {
  Task task = Task::kCompletion;
  LanguageMap languages;
  Vocabulary vocab;
  PathTable paths;
  std::map<std::string, std::vector<CodeSample>> splits;

  const std::vector<CodeSample>& split(const std::string& name) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Writes manifest.json plus vocab, path table and one record file per split
// into `directory` (created if missing).
void serialize_dataset(const Dataset& dataset, const std::filesystem::path& directory,
                       RecordFormat format = RecordFormat::kBinary);

// Throws Error(kFormatVersionMismatch) or Error(kCorruptFile).
Dataset load_dataset(const std::filesystem::path& directory);

// Throws Error(kCorruptFile) when a sample references a missing path id or
// an out-of-range vocabulary id.
void validate_dataset(const Dataset& dataset);

}  // namespace metatp::corpus

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metatp/corpus/ingest.hpp"

namespace metatp::corpus {

// Template-generated Python/JavaScript functions for desk-scale experiments
// and tests. Each language draws distinct (template, noun, attribute)
// combinations; the same combination renders with each language's naming
// convention and idioms.
struct SyntheticCorpusOptions {
  std::vector<std::string> languages{"python", "javascript"};
  int functions_per_language = 200;
  double valid_fraction = 0.0;  // held-out share per language, rounded down
  std::uint64_t seed = 7;
};

std::vector<SourceFunction> make_synthetic_corpus(const SyntheticCorpusOptions& options);

}  // namespace metatp::corpus

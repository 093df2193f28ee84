#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metatp {

enum class ErrorCode {
  kParse,
  kUnsupportedLanguage,
  kIndex,
  kEmptyCorpus,
  kNoName,
  kTooShort,
  kFormatVersionMismatch,
  kCorruptFile,
  kPathTooLong,
  kUnknownNodeType,
  kUnknownLanguage,
  kDimensionMismatch,
  kAllMasked,
  kSchemeMismatch,
  kBadMaskPosition,
  kConfig,
  kDivergence,
  kVocabMismatch,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace metatp

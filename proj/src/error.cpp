#include "metatp/common/error.hpp"

namespace metatp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kUnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::kIndex: return "IndexError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kNoName: return "NoName";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kPathTooLong: return "PathTooLong";
    case ErrorCode::kUnknownNodeType: return "UnknownNodeType";
    case ErrorCode::kUnknownLanguage: return "UnknownLanguage";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAllMasked: return "AllMasked";
    case ErrorCode::kSchemeMismatch: return "SchemeMismatch";
    case ErrorCode::kBadMaskPosition: return "BadMaskPosition";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kDivergence: return "DivergenceError";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace metatp

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace metatp::corpus {

struct LanguageId {
  std::string name;
  int code = 0;

  friend bool operator==(const LanguageId&, const LanguageId&) = default;
};

// Dense name <-> code mapping, stored with every dataset.
class LanguageMap {
 public:
  LanguageMap() = default;
  explicit LanguageMap(std::vector<std::string> names);

  // Returns the existing id or registers a new one with the next code.
  LanguageId intern(std::string_view name);
  // Throws Error(kUnknownLanguage) when the name is not registered.
  LanguageId at(std::string_view name) const;
  const std::string& name(int code) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const LanguageMap&, const LanguageMap&) = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace metatp::corpus

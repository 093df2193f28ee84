#include "metatp/corpus/synthetic_corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "metatp/common/error.hpp"
#include "metatp/common/rng.hpp"

namespace metatp::corpus {
namespace {

constexpr std::array kNouns = {"file",    "user",  "account", "order", "item",    "record",  "config",
                               "session", "token", "message", "node",  "request", "cache",   "entry",
                               "table",   "image", "document", "event", "task",   "product", "invoice"};
constexpr std::array kAttrs = {"name", "id", "size", "path", "count", "total", "status", "type", "value", "date"};

// Word lists are joined per language: snake_case for Python identifiers,
// camelCase for JavaScript.
struct Words {
  std::string noun;
  std::string attr;
};

std::string cap(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string ident(bool py, std::initializer_list<std::string> parts) {
  std::string out;
  bool first = true;
  for (const auto& p : parts) {
    if (py) {
      if (!first) out += '_';
      out += p;
    } else {
      out += first ? p : cap(p);
    }
    first = false;
  }
  return out;
}

using Render = std::string (*)(bool py, const Words& w);

std::string getter(bool py, const Words& w) {
  const auto fn = ident(py, {"get", w.noun, w.attr});
  const auto field = ident(py, {w.noun, w.attr});
  if (py) return "def " + fn + "(self):\n    return self." + field + "\n";
  return "function " + fn + "() {\n  return this." + field + ";\n}\n";
}

std::string setter(bool py, const Words& w) {
  const auto fn = ident(py, {"set", w.noun, w.attr});
  const auto field = ident(py, {w.noun, w.attr});
  if (py) return "def " + fn + "(self, value):\n    self." + field + " = value\n";
  return "function " + fn + "(value) {\n  this." + field + " = value;\n}\n";
}

std::string is_valid(bool py, const Words& w) {
  const auto fn = ident(py, {"is", "valid", w.noun});
  if (py)
    return "def " + fn + "(self, " + w.noun + "):\n    if " + w.noun + " is None:\n        return False\n    return len(" +
           w.noun + "." + w.attr + ") > 0\n";
  return "function " + fn + "(" + w.noun + ") {\n  if (" + w.noun + " === null) {\n    return false;\n  }\n  return " +
         w.noun + "." + w.attr + ".length > 0;\n}\n";
}

std::string count_matching(bool py, const Words& w) {
  const auto fn = ident(py, {"count", w.noun, w.attr});
  if (py)
    return "def " + fn + "(self, items):\n    total = 0\n    for item in items:\n        if item." + w.attr +
           ":\n            total += 1\n    return total\n";
  return "function " + fn + "(items) {\n  let total = 0;\n  for (const item of items) {\n    if (item." + w.attr +
         ") {\n      total += 1;\n    }\n  }\n  return total;\n}\n";
}

std::string find_by(bool py, const Words& w) {
  const auto fn = ident(py, {"find", w.noun, "by", w.attr});
  const auto coll = w.noun + "s";
  if (py)
    return "def " + fn + "(self, " + w.attr + "):\n    for " + w.noun + " in self." + coll + ":\n        if " + w.noun +
           "." + w.attr + " == " + w.attr + ":\n            return " + w.noun + "\n    return None\n";
  return "function " + fn + "(" + w.attr + ") {\n  for (const " + w.noun + " of this." + coll + ") {\n    if (" + w.noun +
         "." + w.attr + " === " + w.attr + ") {\n      return " + w.noun + ";\n    }\n  }\n  return null;\n}\n";
}

std::string load(bool py, const Words& w) {
  const auto fn = ident(py, {"load", w.noun, w.attr});
  const auto parse = ident(py, {"parse", w.noun});
  if (py)
    return "def " + fn + "(path):\n    data = read_file(path)\n    return " + parse + "(data)." + w.attr + "\n";
  return "function " + fn + "(path) {\n  const data = readFile(path);\n  return " + parse + "(data)." + w.attr + ";\n}\n";
}

std::string compute_total(bool py, const Words& w) {
  const auto fn = ident(py, {"compute", w.noun, w.attr});
  if (py)
    return "def " + fn + "(items):\n    result = 0\n    for item in items:\n        result += item." + w.attr +
           "\n    return result\n";
  return "function " + fn + "(items) {\n  let result = 0;\n  for (const item of items) {\n    result += item." + w.attr +
         ";\n  }\n  return result;\n}\n";
}

std::string create(bool py, const Words& w) {
  const auto fn = ident(py, {"create", w.noun});
  const auto coll = w.noun + "s";
  if (py)
    return "def " + fn + "(self, " + w.attr + "):\n    " + w.noun + " = " + cap(w.noun) + "(" + w.attr + "=" + w.attr +
           ")\n    self." + coll + ".append(" + w.noun + ")\n    return " + w.noun + "\n";
  return "function " + fn + "(" + w.attr + ") {\n  const " + w.noun + " = new " + cap(w.noun) + "({ " + w.attr +
         " });\n  this." + coll + ".push(" + w.noun + ");\n  return " + w.noun + ";\n}\n";
}

std::string remove(bool py, const Words& w) {
  const auto fn = ident(py, {"remove", w.noun, "by", w.attr});
  const auto coll = w.noun + "s";
  if (py)
    return "def " + fn + "(self, " + w.attr + "):\n    if " + w.attr + " in self." + coll + ":\n        del self." + coll +
           "[" + w.attr + "]\n        return True\n    return False\n";
  return "function " + fn + "(" + w.attr + ") {\n  if (" + w.attr + " in this." + coll + ") {\n    delete this." + coll +
         "[" + w.attr + "];\n    return true;\n  }\n  return false;\n}\n";
}

std::string update(bool py, const Words& w) {
  const auto fn = ident(py, {"update", w.noun, w.attr});
  const auto fresh = ident(py, {"new", w.attr});
  if (py)
    return "def " + fn + "(self, " + w.noun + ", " + fresh + "):\n    old = " + w.noun + "." + w.attr + "\n    " + w.noun +
           "." + w.attr + " = " + fresh + "\n    self.notify(" + w.noun + ", old)\n";
  return "function " + fn + "(" + w.noun + ", " + fresh + ") {\n  const old = " + w.noun + "." + w.attr + ";\n  " + w.noun +
         "." + w.attr + " = " + fresh + ";\n  this.notify(" + w.noun + ", old);\n}\n";
}

std::string format(bool py, const Words& w) {
  const auto fn = ident(py, {"format", w.noun, w.attr});
  if (py) return "def " + fn + "(self, " + w.noun + "):\n    return '" + w.noun + " " + w.attr + ": ' + str(" + w.noun + "." + w.attr + ")\n";
  return "function " + fn + "(" + w.noun + ") {\n  return '" + w.noun + " " + w.attr + ": ' + String(" + w.noun + "." +
         w.attr + ");\n}\n";
}

std::string clear_cache(bool py, const Words& w) {
  const auto fn = ident(py, {"clear", w.noun, w.attr, "cache"});
  const auto cache = ident(py, {w.noun, w.attr, "cache"});
  if (py) return "def " + fn + "(self):\n    self." + cache + " = {}\n    self." + ident(py, {w.noun, "count"}) + " = 0\n";
  return "function " + fn + "() {\n  this." + cache + " = {};\n  this." + ident(py, {w.noun, "count"}) + " = 0;\n}\n";
}

std::string has(bool py, const Words& w) {
  const auto fn = ident(py, {"has", w.noun, w.attr});
  if (py) return "def " + fn + "(self, key):\n    return key in self." + ident(py, {w.noun, w.attr}) + "s\n";
  return "function " + fn + "(key) {\n  return this." + ident(py, {w.noun, w.attr}) + "s.includes(key);\n}\n";
}

std::string sort_by(bool py, const Words& w) {
  const auto fn = ident(py, {"sort", w.noun + "s", "by", w.attr});
  const auto coll = w.noun + "s";
  if (py) return "def " + fn + "(self, " + coll + "):\n    return sorted(" + coll + ", key=lambda x: x." + w.attr + ")\n";
  return "function " + fn + "(" + coll + ") {\n  return " + coll + ".sort((a, b) => a." + w.attr + " - b." + w.attr +
         ");\n}\n";
}

std::string validate(bool py, const Words& w) {
  const auto fn = ident(py, {"validate", w.noun, w.attr});
  if (py)
    return "def " + fn + "(self, " + w.noun + "):\n    if not " + w.noun + "." + w.attr +
           ":\n        raise ValueError('missing " + w.attr + "')\n    return True\n";
  return "function " + fn + "(" + w.noun + ") {\n  if (!" + w.noun + "." + w.attr + ") {\n    throw new Error('missing " +
         w.attr + "');\n  }\n  return true;\n}\n";
}

constexpr std::array<Render, 15> kTemplates = {getter,  setter, is_valid, count_matching, find_by,
                                               load,    compute_total, create, remove, update,
                                               format,  clear_cache, has, sort_by, validate};

}  // namespace

std::vector<SourceFunction> make_synthetic_corpus(const SyntheticCorpusOptions& options) {
  const std::size_t combos = kTemplates.size() * kNouns.size() * kAttrs.size();
  if (options.functions_per_language < 0 || static_cast<std::size_t>(options.functions_per_language) > combos) {
    throw Error(ErrorCode::kConfig, "functions_per_language must be in [0, " + std::to_string(combos) + "]");
  }
  std::vector<SourceFunction> out;
  for (std::size_t li = 0; li < options.languages.size(); ++li) {
    const auto& lang = options.languages[li];
    if (lang != "python" && lang != "javascript") throw Error(ErrorCode::kUnsupportedLanguage, lang);
    const bool py = lang == "python";
    // partial Fisher-Yates over the combination space
    Rng rng(mix_seed(options.seed * 1000003ULL + li));
    std::vector<std::size_t> order(combos);
    for (std::size_t i = 0; i < combos; ++i) order[i] = i;
    const auto n = static_cast<std::size_t>(options.functions_per_language);
    for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + uniform_index(rng, combos - i)]);
    const auto n_valid = static_cast<std::size_t>(options.valid_fraction * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = order[i];
      const auto t = c % kTemplates.size();
      const auto noun = (c / kTemplates.size()) % kNouns.size();
      const auto attr = c / (kTemplates.size() * kNouns.size());
      SourceFunction f;
      f.id = lang + "-" + std::to_string(i);
      f.language = lang;
      f.split = i < n - n_valid ? "train" : "valid";
      f.code = kTemplates[t](py, Words{kNouns[noun], kAttrs[attr]});
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace metatp::corpus

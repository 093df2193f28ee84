#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "metatp/common/error.hpp"
#include "metatp/corpus/ast_paths.hpp"
#include "metatp/corpus/ingest.hpp"
#include "metatp/corpus/subtokens.hpp"
#include "metatp/corpus/synthetic_corpus.hpp"
#include "metatp/corpus/syntax_tree.hpp"

using namespace metatp;
using namespace metatp::corpus;

namespace {

std::string read_text(const std::string& name) {
  std::ifstream in(std::string(METATP_TEST_DATA) + "/" + name);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

const LanguageId kPython{"python", 0};
const LanguageId kJavaScript{"javascript", 1};
const std::string kMinimal = "def f(x):\n  return x";

std::vector<std::string> leaf_texts(const SyntaxTree& t, const std::string& src) {
  std::vector<std::string> out;
  for (int l : t.leaves) out.emplace_back(t.text(l, src));
  return out;
}

int leaf_with_text(const SyntaxTree& t, const std::string& src, const std::string& text, int occurrence = 0) {
  for (int l : t.leaves) {
    if (t.text(l, src) == text && occurrence-- == 0) return l;
  }
  return -1;
}

ParsedFunction parse_fn(const std::string& code, const std::string& id = "f0", const LanguageId& lang = kPython) {
  return analyze_function(SourceFunction{id, lang.name, "train", code}, lang);
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("python minimal function matches the golden tree") {
    const auto t = parse_source(kMinimal, kPython);
    CHECK(t.to_sexp() == trim(read_text("python_minimal.sexp")));
    CHECK(t.nodes[static_cast<std::size_t>(t.root)].type == "module");
    CHECK(leaf_texts(t, kMinimal) == std::vector<std::string>{"def", "f", "(", "x", ")", ":", "return", "x"});
  }

  TEST_CASE("golden trees for both grammars") {
    CHECK(parse_source(read_text("python_method.py"), kPython).to_sexp() == trim(read_text("python_method.sexp")));
    CHECK(parse_source(read_text("javascript_function.js"), kJavaScript).to_sexp() ==
          trim(read_text("javascript_function.sexp")));
  }

  TEST_CASE("parse errors and unsupported languages") {
    CHECK_THROWS_AS(parse_source("", kPython), Error);
    try {
      parse_source("", kPython);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
    }
    try {
      parse_source("fn main() {}", LanguageId{"rust", 2});
      FAIL("expected UnsupportedLanguage");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnsupportedLanguage);
    }
    try {
      parse_source("def f(:\n  return", kPython);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
    }
  }

  TEST_CASE("parsing is deterministic") {
    const std::string src = read_text("python_method.py");
    CHECK(parse_source(src, kPython) == parse_source(src, kPython));
  }

  TEST_CASE("tree invariants") {
    for (const auto& [file, lang] : {std::pair{"python_method.py", kPython}, std::pair{"javascript_function.js", kJavaScript}}) {
      const std::string src = read_text(file);
      const auto t = parse_source(src, lang);
      int roots = 0;
      for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& n = t.nodes[i];
        if (n.parent < 0) {
          ++roots;
          continue;
        }
        const auto& siblings = t.nodes[static_cast<std::size_t>(n.parent)].children;
        CHECK(std::count(siblings.begin(), siblings.end(), static_cast<int>(i)) == 1);
        CHECK(t.depth(static_cast<int>(i)) == t.depth(n.parent) + 1);
      }
      CHECK(roots == 1);
      for (std::size_t k = 1; k < t.leaves.size(); ++k) {
        CHECK(t.nodes[static_cast<std::size_t>(t.leaves[k - 1])].end <= t.nodes[static_cast<std::size_t>(t.leaves[k])].begin);
      }
      // leaves cover every non-whitespace byte
      std::vector<bool> covered(src.size(), false);
      for (int l : t.leaves) {
        for (auto b = t.nodes[static_cast<std::size_t>(l)].begin; b < t.nodes[static_cast<std::size_t>(l)].end; ++b) covered[b] = true;
      }
      for (std::size_t b = 0; b < src.size(); ++b) {
        if (!std::isspace(static_cast<unsigned char>(src[b]))) CHECK(covered[b]);
      }
    }
  }

  TEST_CASE("split_identifier") {
    using V = std::vector<std::string>;
    CHECK(split_identifier("sendDirectOperateCommandSet") == V{"send", "direct", "operate", "command", "set"});
    CHECK(split_identifier("x") == V{"x"});
    CHECK(split_identifier("parse_HTTPResponse2") == V{"parse", "http", "response", "2"});
    CHECK(split_identifier("__init__") == V{"init"});
    CHECK(split_identifier("getFileName") == V{"get", "file", "name"});
    CHECK(split_identifier("MAX_SIZE") == V{"max", "size"});
  }

  TEST_CASE("split_identifier reconstructs the token") {
    for (std::string tok : {"sendDirectOperateCommandSet", "parse_HTTPResponse2", "XMLHttpRequest", "a1b2C3", "snake_case_name",
                            "already", "ABC", "v2Beta10"}) {
      std::string joined;
      for (const auto& p : split_identifier(tok)) joined += p;
      std::string expect;
      for (char c : tok) {
        if (std::isalnum(static_cast<unsigned char>(c))) expect += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      CHECK(joined == expect);
    }
  }

  TEST_CASE("leaf_tokens drops punctuation") {
    const auto t = parse_source(kMinimal, kPython);
    std::vector<std::string> kept;
    for (const auto& lt : leaf_tokens(t, kMinimal)) kept.push_back(lt.text);
    CHECK(kept == std::vector<std::string>{"def", "f", "x", "return", "x"});
    CHECK(kept.size() <= t.leaves.size());
    CHECK(is_punctuation("(:"));
    CHECK_FALSE(is_punctuation("x1"));
  }

  TEST_CASE("punctuation-only tree yields no tokens") {
    SyntaxTree t;
    t.nodes = {{"expr", {1, 2}, -1, 0, 2}, {"(", {}, -1, 0, 1}, {")", {}, -1, 1, 2}};
    t.root = 0;
    t.finalize();
    CHECK(leaf_tokens(t, "()").empty());
  }

  TEST_CASE("relative paths") {
    const auto t = parse_source(kMinimal, kPython);
    const int f = leaf_with_text(t, kMinimal, "f");
    const int x_ret = leaf_with_text(t, kMinimal, "x", 1);
    CHECK(relative_path(t, f, f).empty());
    CHECK(relative_path(t, f, x_ret) ==
          NodeTypePath{"identifier:up", "function_definition", "block:down", "return_statement:down", "identifier:down"});

    // two leaves under one parent
    SyntaxTree m;
    m.nodes = {{"P", {1, 2}, -1, 0, 2}, {"A", {}, -1, 0, 1}, {"B", {}, -1, 1, 2}};
    m.root = 0;
    m.finalize();
    CHECK(relative_path(m, 1, 2) == NodeTypePath{"A:up", "P", "B:down"});
    try {
      relative_path(m, 0, 1);
      FAIL("expected IndexError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kIndex);
    }
  }

  TEST_CASE("relative path reversal flips directions") {
    const std::string src = read_text("javascript_function.js");
    const auto t = parse_source(src, kJavaScript);
    for (std::size_t a = 0; a < t.leaves.size(); a += 3) {
      for (std::size_t b = 0; b < t.leaves.size(); b += 5) {
        auto fwd = relative_path(t, t.leaves[a], t.leaves[b]);
        const auto back = relative_path(t, t.leaves[b], t.leaves[a]);
        std::reverse(fwd.begin(), fwd.end());
        for (auto& s : fwd) s = flip_direction(s);
        CHECK(fwd == back);
      }
    }
  }

  TEST_CASE("absolute paths") {
    const auto t = parse_source(kMinimal, kPython);
    const int ret = leaf_with_text(t, kMinimal, "return");
    // the leaf's own type closes the path
    CHECK(absolute_path(t, ret) == NodeTypePath{"module", "function_definition", "block", "return_statement", "return"});
    for (int l : t.leaves) {
      const auto p = absolute_path(t, l);
      CHECK(p.front() == "module");
      CHECK(p.back() == t.nodes[static_cast<std::size_t>(l)].type);
    }
    SyntaxTree single;
    single.nodes = {{"module", {}, -1, 0, 1}};
    single.root = 0;
    single.finalize();
    CHECK(absolute_path(single, 0) == NodeTypePath{"module"});
  }

  TEST_CASE("resample_path follows the floor-index rule") {
    std::vector<int> p10(10), p33(33), p64(64), p100(100);
    for (int i = 0; i < 100; ++i) {
      if (i < 10) p10[static_cast<std::size_t>(i)] = i;
      if (i < 33) p33[static_cast<std::size_t>(i)] = i;
      if (i < 64) p64[static_cast<std::size_t>(i)] = i;
      p100[static_cast<std::size_t>(i)] = i;
    }
    CHECK(resample_path(p10) == p10);
    std::vector<int> want64;
    for (int i = 0; i < 64; i += 2) want64.push_back(i);
    CHECK(resample_path(p64) == want64);
    std::vector<int> want33;
    // floor(k * 33 / 32) = k for k < 32
    for (int i = 0; i < 32; ++i) want33.push_back(i);
    CHECK(resample_path(p33) == want33);
    // hand table for 100 -> 32: floor(k * 100 / 32)
    const std::vector<int> want100 = {0,  3,  6,  9,  12, 15, 18, 21, 25, 28, 31, 34, 37, 40, 43, 46,
                                      50, 53, 56, 59, 62, 65, 68, 71, 75, 78, 81, 84, 87, 90, 93, 96};
    CHECK(resample_path(p100) == want100);
    for (std::size_t len = 0; len < 80; ++len) {
      std::vector<int> p(len, 1);
      CHECK(resample_path(p, 7).size() == std::min<std::size_t>(len, 7));
    }
  }

  TEST_CASE("vocabulary threshold and ordering") {
    const std::map<std::string, std::int64_t> counts{{"foo", 150}, {"bar", 99}, {"baz", 150}, {"qux", 200}};
    const auto v = TokenVocab::build(kSubtokenSpecials, counts, 100);
    CHECK(v.size() == special::kCount + 3);
    CHECK(v.token(special::kPad) == "<PAD>");
    CHECK(v.token(special::kName) == "<NAME>");
    CHECK(v.token(special::kCount) == "qux");
    CHECK(v.token(special::kCount + 1) == "baz");
    CHECK(v.token(special::kCount + 2) == "foo");
    CHECK(v.id("bar") == special::kUnk);
    CHECK(TokenVocab::build(kSubtokenSpecials, counts, 1).contains("bar"));
    CHECK(TokenVocab::build(kSubtokenSpecials, counts, 100) == v);
    CHECK_THROWS_AS(build_vocabularies({}, 1), Error);
  }

  TEST_CASE("summarization samples") {
    const std::string code = "def getFileName(path):\n    if path:\n        return getFileName(path[1:])\n    return path\n";
    const auto fn = parse_fn(code);
    const std::vector<ParsedFunction> train{fn};
    const Vocabulary vocab = build_vocabularies(train, 1);
    PathTable table;
    const CodeSample s = make_summarization_sample(fn, vocab, table);
    const auto& target = std::get<SummaryTarget>(s.target).subtokens;
    CHECK(target == std::vector<int>{vocab.subtokens.id("get"), vocab.subtokens.id("file"), vocab.subtokens.id("name"),
                                     special::kEos});
    CHECK(std::count(s.subtokens.begin(), s.subtokens.end(), special::kName) == 2);
    CHECK(std::find(s.subtokens.begin(), s.subtokens.end(), vocab.subtokens.id("file")) == s.subtokens.end());

    const auto anon = parse_fn("const f = function () { return 1; };", "a", kJavaScript);
    try {
      make_summarization_sample(anon, vocab, table);
      FAIL("expected NoName");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoName);
    }
  }

  TEST_CASE("completion samples") {
    const auto fn = parse_fn("def add(a, b):\n    return a + b\n");
    const std::vector<ParsedFunction> train{fn};
    const Vocabulary vocab = build_vocabularies(train, 1);
    PathTable table;
    const auto s1 = make_completion_sample(fn, 42, vocab, table);
    const auto s2 = make_completion_sample(fn, 42, vocab, table);
    const auto& c = std::get<CompletionTarget>(s1.target);
    CHECK(c.mask_position == std::get<CompletionTarget>(s2.target).mask_position);
    CHECK(s1.subtokens[static_cast<std::size_t>(c.mask_position)] == special::kMask);
    CHECK(c.answer_id != special::kMask);
    CHECK(c.answer_id == vocab.subtokens.id(fn.subtokens[static_cast<std::size_t>(c.mask_position)]));

    CHECK(choose_mask_position({"<NAME>", "x"}, 3) == 1);
    try {
      choose_mask_position({"x"}, 1);
      FAIL("expected TooShort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTooShort);
    }
    CHECK_THROWS_AS(choose_mask_position({"<NAME>", "<MASK>"}, 1), Error);
  }

  TEST_CASE("mask position is uniform over eligible subtokens") {
    const std::vector<std::string> toks = {"a", "b", "<NAME>", "c", "d", "e", "f", "g", "h", "i", "j"};
    std::map<int, int> hits;
    const int trials = 10000;
    for (int seed = 0; seed < trials; ++seed) ++hits[choose_mask_position(toks, static_cast<std::uint64_t>(seed))];
    CHECK(hits.count(2) == 0);
    CHECK(hits.size() == 10);
    for (const auto& [pos, n] : hits) {
      const double f = static_cast<double>(n) / trials;
      CHECK(std::abs(f - 0.1) <= 0.01);
    }
  }

  TEST_CASE("sequence and path caps on an oversize function") {
    std::string body;
    for (int i = 0; i < 300; ++i) body += "    value" + std::to_string(i) + " = other_name" + std::to_string(i) + "\n";
    std::string nested = "def deep(x):\n    return ";
    for (int i = 0; i < 40; ++i) nested += "(";
    nested += "x";
    for (int i = 0; i < 40; ++i) nested += ")";
    nested += "\n";
    const auto big = parse_fn("def big():\n" + body);
    CHECK(big.subtokens.size() == kMaxSequenceLength);
    const auto deep = parse_fn(nested, "deep");
    for (const auto& p : deep.local_paths) CHECK(p.size() <= kMaxPathLength);
    CHECK(std::any_of(deep.local_paths.begin(), deep.local_paths.end(),
                      [](const auto& p) { return p.size() == kMaxPathLength; }));
  }

  TEST_CASE("ingest end to end") {
    SyntheticCorpusOptions o;
    o.functions_per_language = 12;
    o.valid_fraction = 0.25;
    const auto fns = make_synthetic_corpus(o);
    IngestOptions io;
    io.min_count = 1;
    IngestReport report;
    const Dataset ds = ingest(fns, io, &report);
    CHECK(report.parse_errors == 0);
    CHECK(ds.languages.size() == 2);
    CHECK(ds.split("train").size() == 18);
    CHECK(ds.split("valid").size() == 6);
    CHECK(ds.paths.entry(0).empty());
    for (const auto& [name, samples] : ds.splits) {
      for (const auto& s : samples) {
        CHECK(s.length() <= static_cast<int>(kMaxSequenceLength));
        CHECK(s.leaf_of.size() == s.subtokens.size());
        for (int l : s.leaf_of) CHECK((l >= 0 && l < s.num_leaves()));
        for (int i = 0; i < s.length(); ++i) {
          CHECK(s.rel_path(i, i) == 0);
          CHECK(s.abs_path(i) > 0);
        }
        for (int id : s.rel_paths) CHECK(ds.paths.entry(id).size() <= kMaxPathLength);
      }
    }
    // a second run is identical
    CHECK(ingest(fns, io) == ds);
  }

  TEST_CASE("vocabulary counts only the training split") {
    std::vector<SourceFunction> fns = {
        {"a", "python", "train", "def alpha(x):\n    return x\n"},
        {"b", "python", "valid", "def beta(zeta):\n    return zeta\n"},
    };
    IngestOptions io;
    io.min_count = 1;
    io.task = Task::kSummarization;
    const Dataset ds = ingest(fns, io);
    CHECK(ds.vocab.subtokens.contains("alpha"));
    CHECK_FALSE(ds.vocab.subtokens.contains("zeta"));
    const auto& valid = ds.split("valid")[0].subtokens;
    CHECK(std::count(valid.begin(), valid.end(), special::kUnk) == 2);
  }
}

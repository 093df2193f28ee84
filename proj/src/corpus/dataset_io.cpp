#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metatp/common/error.hpp"
#include "metatp/corpus/dataset.hpp"
#include "metatp/corpus/ingest.hpp"

namespace metatp::corpus {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kRecordMagic[4] = {'M', 'T', 'P', 'R'};

[[noreturn]] void corrupt(const fs::path& file, const std::string& what) {
  throw Error(ErrorCode::kCorruptFile, file.string() + ": " + what);
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) corrupt(file, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& file, const std::string& data) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + file.string());
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// ---- JSONL records --------------------------------------------------------

json sample_to_json(const CodeSample& s) {
  json j;
  j["id"] = s.id;
  j["language"] = s.language;
  j["subtokens"] = s.subtokens;
  j["leaf_of"] = s.leaf_of;
  j["leaf_nodes"] = s.leaf_nodes;
  j["rel_paths"] = s.rel_paths;
  j["abs_paths"] = s.abs_paths;
  if (const auto* t = std::get_if<SummaryTarget>(&s.target)) {
    j["target"] = {{"summary", t->subtokens}};
  } else {
    const auto& c = std::get<CompletionTarget>(s.target);
    j["target"] = {{"mask_position", c.mask_position}, {"answer_id", c.answer_id}};
  }
  return j;
}

CodeSample sample_from_json(const json& j) {
  CodeSample s;
  s.id = j.at("id").get<std::string>();
  s.language = j.at("language").get<int>();
  s.subtokens = j.at("subtokens").get<std::vector<int>>();
  s.leaf_of = j.at("leaf_of").get<std::vector<int>>();
  s.leaf_nodes = j.at("leaf_nodes").get<std::vector<int>>();
  s.rel_paths = j.at("rel_paths").get<std::vector<int>>();
  s.abs_paths = j.at("abs_paths").get<std::vector<int>>();
  const auto& t = j.at("target");
  if (t.contains("summary")) {
    s.target = SummaryTarget{t.at("summary").get<std::vector<int>>()};
  } else {
    s.target = CompletionTarget{t.at("mask_position").get<int>(), t.at("answer_id").get<int>()};
  }
  return s;
}

// ---- binary records -------------------------------------------------------

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void ints(const std::vector<int>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (int x : v) i32(x);
  }
  void raw(const std::string& s) { buf_.append(s); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, fs::path file) : data_(data), file_(std::move(file)) {}

  bool done() const { return pos_ == data_.size(); }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<int> ints() {
    const auto n = u32();
    need(static_cast<std::size_t>(n) * 4);
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
  }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) corrupt(file_, "truncated record");
  }
  std::size_t position() const { return pos_; }

 private:
  const std::string& data_;
  fs::path file_;
  std::size_t pos_ = 0;
};

void write_sample(Writer& w, const CodeSample& s) {
  Writer body;
  body.str(s.id);
  body.i32(s.language);
  body.ints(s.subtokens);
  body.ints(s.leaf_of);
  body.ints(s.leaf_nodes);
  body.ints(s.rel_paths);
  body.ints(s.abs_paths);
  if (const auto* t = std::get_if<SummaryTarget>(&s.target)) {
    body.u8(0);
    body.ints(t->subtokens);
  } else {
    const auto& c = std::get<CompletionTarget>(s.target);
    body.u8(1);
    body.i32(c.mask_position);
    body.i32(c.answer_id);
  }
  w.u32(static_cast<std::uint32_t>(body.buffer().size()));
  w.raw(body.buffer());
}

CodeSample read_sample(Reader& r, const fs::path& file) {
  const std::uint32_t len = r.u32();
  r.need(len);
  const std::size_t end = r.position() + len;
  CodeSample s;
  s.id = r.str();
  s.language = r.i32();
  s.subtokens = r.ints();
  s.leaf_of = r.ints();
  s.leaf_nodes = r.ints();
  s.rel_paths = r.ints();
  s.abs_paths = r.ints();
  const auto tag = r.u8();
  if (tag == 0) {
    s.target = SummaryTarget{r.ints()};
  } else if (tag == 1) {
    CompletionTarget c;
    c.mask_position = r.i32();
    c.answer_id = r.i32();
    s.target = c;
  } else {
    corrupt(file, "bad target tag");
  }
  if (r.position() != end) corrupt(file, "record length mismatch");
  return s;
}

std::string encode_split(const std::vector<CodeSample>& samples, RecordFormat format) {
  if (format == RecordFormat::kJsonl) {
    std::string out;
    for (const auto& s : samples) {
      out += sample_to_json(s).dump();
      out += '\n';
    }
    return out;
  }
  Writer w;
  w.raw(std::string(kRecordMagic, 4));
  w.u32(static_cast<std::uint32_t>(kDatasetFormatVersion));
  w.u64(samples.size());
  for (const auto& s : samples) write_sample(w, s);
  return std::move(w.buffer());
}

std::vector<CodeSample> decode_split(const fs::path& file, RecordFormat format, std::size_t expected) {
  const std::string data = read_file(file);
  std::vector<CodeSample> out;
  if (format == RecordFormat::kJsonl) {
    if (!data.empty() && data.back() != '\n') corrupt(file, "truncated final line");
    for (const auto& line : split_lines(data)) {
      if (line.empty()) continue;
      try {
        out.push_back(sample_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        corrupt(file, e.what());
      }
    }
  } else {
    Reader r(data, file);
    r.need(4);
    if (std::memcmp(data.data(), kRecordMagic, 4) != 0) corrupt(file, "bad magic");
    for (int i = 0; i < 4; ++i) r.u8();
    const auto version = r.u32();
    if (version != static_cast<std::uint32_t>(kDatasetFormatVersion)) {
      throw Error(ErrorCode::kFormatVersionMismatch, file.string() + ": record version " + std::to_string(version));
    }
    const auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(read_sample(r, file));
    if (!r.done()) corrupt(file, "trailing bytes");
  }
  if (out.size() != expected) {
    corrupt(file, "expected " + std::to_string(expected) + " records, found " + std::to_string(out.size()));
  }
  return out;
}

std::string encode_vocab(const TokenVocab& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    out += json::array({v.token(i), v.count(i)}).dump();
    out += '\n';
  }
  return out;
}

TokenVocab decode_vocab(const fs::path& file, int num_specials) {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  const std::string data = read_file(file);
  if (!data.empty() && data.back() != '\n') corrupt(file, "truncated final line");
  for (const auto& line : split_lines(data)) {
    try {
      const auto j = json::parse(line);
      tokens.push_back(j.at(0).get<std::string>());
      counts.push_back(j.at(1).get<std::int64_t>());
    } catch (const json::exception& e) {
      corrupt(file, e.what());
    }
  }
  return TokenVocab::from_entries(std::move(tokens), std::move(counts), num_specials);
}

const char* format_name(RecordFormat f) { return f == RecordFormat::kJsonl ? "jsonl" : "binary"; }

}  // namespace

const std::vector<CodeSample>& Dataset::split(const std::string& name) const {
  const auto it = splits.find(name);
  if (it == splits.end()) throw Error(ErrorCode::kConfig, "dataset has no split '" + name + "'");
  return it->second;
}

void serialize_dataset(const Dataset& dataset, const fs::path& directory, RecordFormat format) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + directory.string() + ": " + ec.message());

  json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["task"] = to_string(dataset.task);
  manifest["record_format"] = format_name(format);
  manifest["languages"] = dataset.languages.names();
  manifest["min_count"] = dataset.vocab.min_count;
  manifest["vocab"] = {
      {"subtokens", "subtokens.vocab.jsonl"},
      {"node_types", "node_types.vocab.jsonl"},
      {"subtoken_specials", dataset.vocab.subtokens.num_specials()},
      {"node_type_specials", dataset.vocab.node_types.num_specials()},
      {"subtoken_hash", std::to_string(dataset.vocab.subtokens.hash())},
      {"node_type_hash", std::to_string(dataset.vocab.node_types.hash())},
  };
  manifest["path_table"] = {{"file", "paths.jsonl"}, {"count", dataset.paths.size()}};
  json splits = json::object();
  const std::string ext = format == RecordFormat::kJsonl ? ".jsonl" : ".bin";
  for (const auto& [name, samples] : dataset.splits) {
    splits[name] = {{"file", name + ext}, {"count", samples.size()}};
    write_file(directory / (name + ext), encode_split(samples, format));
  }
  manifest["splits"] = splits;

  write_file(directory / "subtokens.vocab.jsonl", encode_vocab(dataset.vocab.subtokens));
  write_file(directory / "node_types.vocab.jsonl", encode_vocab(dataset.vocab.node_types));
  std::string paths;
  for (const auto& e : dataset.paths.entries()) {
    paths += json(e).dump();
    paths += '\n';
  }
  write_file(directory / "paths.jsonl", paths);
  write_file(directory / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& directory) {
  const fs::path manifest_file = directory / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_file));
  } catch (const json::exception& e) {
    corrupt(manifest_file, e.what());
  }
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw Error(ErrorCode::kFormatVersionMismatch,
                  "dataset format " + std::to_string(version) + ", expected " + std::to_string(kDatasetFormatVersion));
    }
    Dataset ds;
    ds.task = task_from_string(manifest.at("task").get<std::string>());
    ds.languages = LanguageMap(manifest.at("languages").get<std::vector<std::string>>());
    ds.vocab.min_count = manifest.at("min_count").get<std::int64_t>();
    const auto& vocab = manifest.at("vocab");
    ds.vocab.subtokens = decode_vocab(directory / vocab.at("subtokens").get<std::string>(),
                                      vocab.at("subtoken_specials").get<int>());
    ds.vocab.node_types = decode_vocab(directory / vocab.at("node_types").get<std::string>(),
                                       vocab.at("node_type_specials").get<int>());
    if (std::to_string(ds.vocab.subtokens.hash()) != vocab.at("subtoken_hash").get<std::string>() ||
        std::to_string(ds.vocab.node_types.hash()) != vocab.at("node_type_hash").get<std::string>()) {
      corrupt(directory, "vocabulary hash mismatch");
    }

    const fs::path paths_file = directory / manifest.at("path_table").at("file").get<std::string>();
    const std::string paths = read_file(paths_file);
    if (!paths.empty() && paths.back() != '\n') corrupt(paths_file, "truncated final line");
    int line_no = 0;
    for (const auto& line : split_lines(paths)) {
      std::vector<int> entry;
      try {
        entry = json::parse(line).get<std::vector<int>>();
      } catch (const json::exception& e) {
        corrupt(paths_file, e.what());
      }
      if (ds.paths.intern(entry) != line_no++) corrupt(paths_file, "duplicate or misplaced path entry");
    }
    if (ds.paths.size() != manifest.at("path_table").at("count").get<int>()) corrupt(paths_file, "path count mismatch");

    const std::string fmt = manifest.at("record_format").get<std::string>();
    if (fmt != "jsonl" && fmt != "binary") corrupt(manifest_file, "unknown record format " + fmt);
    const RecordFormat format = fmt == "jsonl" ? RecordFormat::kJsonl : RecordFormat::kBinary;
    for (const auto& [name, info] : manifest.at("splits").items()) {
      ds.splits[name] = decode_split(directory / info.at("file").get<std::string>(), format,
                                     info.at("count").get<std::size_t>());
    }
    validate_dataset(ds);
    return ds;
  } catch (const json::exception& e) {
    corrupt(manifest_file, e.what());
  }
}

void validate_dataset(const Dataset& ds) {
  const int num_paths = ds.paths.size();
  const int vocab = ds.vocab.subtokens.size();
  for (const auto& e : ds.paths.entries()) {
    for (int t : e) {
      if (t < 0 || t >= ds.vocab.node_types.size()) throw Error(ErrorCode::kCorruptFile, "path references unknown node type");
    }
  }
  for (const auto& [name, samples] : ds.splits) {
    for (const auto& s : samples) {
      const auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::kCorruptFile, "split " + name + " sample " + s.id + ": " + what);
      };
      if (s.language < 0 || s.language >= ds.languages.size()) fail("unknown language");
      if (s.subtokens.size() != s.leaf_of.size()) fail("leaf_of length");
      const auto m = s.leaf_nodes.size();
      if (s.rel_paths.size() != m * m || s.abs_paths.size() != m) fail("path matrix shape");
      for (int id : s.subtokens)
        if (id < 0 || id >= vocab) fail("subtoken id out of range");
      for (int slot : s.leaf_of)
        if (slot < 0 || static_cast<std::size_t>(slot) >= m) fail("leaf slot out of range");
      for (int p : s.rel_paths)
        if (p < 0 || p >= num_paths) fail("relative path id out of range");
      for (int p : s.abs_paths)
        if (p < 0 || p >= num_paths) fail("absolute path id out of range");
      if (const auto* c = std::get_if<CompletionTarget>(&s.target)) {
        if (c->mask_position < 0 || c->mask_position >= s.length()) fail("mask position out of range");
        if (c->answer_id < 0 || c->answer_id >= vocab) fail("answer id out of range");
      }
    }
  }
}

std::vector<SourceFunction> read_source_functions(const fs::path& file) {
  std::vector<SourceFunction> out;
  const auto lines = split_lines(read_file(file));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) corrupt(file, "line " + std::to_string(i + 1) + " is not a JSON object");
    try {
      out.push_back({j.at("id").get<std::string>(), j.at("language").get<std::string>(),
                     j.value("split", std::string("train")), j.at("code").get<std::string>()});
    } catch (const json::exception& e) {
      corrupt(file, "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_source_functions(const std::vector<SourceFunction>& functions, const fs::path& file) {
  std::string text;
  for (const auto& f : functions) {
    text += json{{"id", f.id}, {"language", f.language}, {"split", f.split}, {"code", f.code}}.dump();
    text += '\n';
  }
  write_file(file, text);
}

}  // namespace metatp::corpus

#include "metatp/train/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "metatp/common/error.hpp"

namespace metatp::train {
namespace fs = std::filesystem;
using nlohmann::json;
using nn::Matrix;
using nn::Var;

namespace {

constexpr char kMagic[8] = {'M', 'T', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::int64_t kVersion = 1;

void put_i64(std::ostream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::int64_t get_i64(std::istream& in) {
  std::int64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(ErrorCode::kCorruptFile, "truncated checkpoint");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_i64(out, static_cast<std::int64_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get_i64(in);
  if (n < 0 || n > (std::int64_t{1} << 32)) throw Error(ErrorCode::kCorruptFile, "bad string length in checkpoint");
  std::string s(static_cast<std::size_t>(n), '\0');
  if (!in.read(s.data(), n)) throw Error(ErrorCode::kCorruptFile, "truncated checkpoint");
  return s;
}

}  // namespace

VocabStamp VocabStamp::of(const corpus::Dataset& ds) {
  return VocabStamp{ds.vocab.subtokens.hash(), ds.vocab.node_types.hash(), ds.languages.names()};
}

void save_checkpoint(const fs::path& file, const RunConfig& config, const model::Model& model, const nn::Adam* optimizer,
                     int epoch, const VocabStamp& stamp) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put_i64(out, kVersion);
    const json header{{"config", config.to_json()},
                      {"epoch", epoch},
                      {"vocab", {{"subtokens", stamp.subtokens}, {"node_types", stamp.node_types}}},
                      {"languages", stamp.languages}};
    put_string(out, header.dump());
    const auto& items = model.params().items();
    put_i64(out, static_cast<std::int64_t>(items.size()));
    for (const auto& [name, var] : items) {
      put_string(out, name);
      nn::write_matrix(out, var.value());
    }
    std::string opt;
    if (optimizer) {
      std::ostringstream s(std::ios::binary);
      optimizer->save(s);
      opt = s.str();
    }
    put_string(out, opt);
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + tmp.string());
  }
  fs::rename(tmp, file);
}

Checkpoint load_checkpoint(const fs::path& file, const corpus::Dataset& dataset) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + file.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw Error(ErrorCode::kCorruptFile, file.string() + " is not a checkpoint");
  }
  if (const auto v = get_i64(in); v != kVersion) {
    throw Error(ErrorCode::kFormatVersionMismatch, "checkpoint version " + std::to_string(v));
  }
  const json header = json::parse(get_string(in), nullptr, false);
  if (header.is_discarded()) throw Error(ErrorCode::kCorruptFile, "bad checkpoint header");

  Checkpoint ck;
  try {
    ck.config = RunConfig::from_json(header.at("config"));
    ck.epoch = header.at("epoch").get<int>();
    ck.stamp.subtokens = header.at("vocab").at("subtokens").get<std::uint64_t>();
    ck.stamp.node_types = header.at("vocab").at("node_types").get<std::uint64_t>();
    ck.stamp.languages = header.at("languages").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("bad checkpoint header: ") + e.what());
  }
  const VocabStamp have = VocabStamp::of(dataset);
  if (have.subtokens != ck.stamp.subtokens || have.node_types != ck.stamp.node_types) {
    throw Error(ErrorCode::kVocabMismatch, "dataset vocabulary differs from the checkpoint's");
  }
  if (have.languages != ck.stamp.languages) {
    throw Error(ErrorCode::kVocabMismatch, "dataset language table differs from the checkpoint's");
  }

  ck.model = std::make_unique<model::Model>(ck.config.model_config(dataset), ck.config.seed);
  auto& params = ck.model->params();
  const auto n = get_i64(in);
  if (n != static_cast<std::int64_t>(params.size())) {
    throw Error(ErrorCode::kCorruptFile, "checkpoint has " + std::to_string(n) + " tensors, model has " +
                                             std::to_string(params.size()));
  }
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string name = get_string(in);
    Matrix value = nn::read_matrix(in);
    if (!params.contains(name)) throw Error(ErrorCode::kCorruptFile, "unexpected tensor " + name);
    Var p = params.get(name);
    if (value.rows() != p.rows() || value.cols() != p.cols()) {
      throw Error(ErrorCode::kCorruptFile, "shape mismatch for " + name);
    }
    p.mutable_value() = std::move(value);
  }
  ck.optimizer_state = get_string(in);
  return ck;
}

}  // namespace metatp::train

#include "metatp/train/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "metatp/common/error.hpp"

#ifndef METATP_DEFAULT_CONFIG_DIR
#define METATP_DEFAULT_CONFIG_DIR "configs"
#endif

namespace metatp::train {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfig, what); }

void check_keys(const json& schema, const json& given, const std::string& where) {
  if (!given.is_object()) config_error("'" + where + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!schema.contains(key)) config_error("unknown config key '" + path + "'");
    if (schema[key].is_object()) check_keys(schema[key], value, path);
  }
}

template <typename T>
T field(const json& j, const char* section, const char* key) {
  const json& node = section ? j.at(section).at(key) : j.at(key);
  try {
    return node.get<T>();
  } catch (const json::exception&) {
    config_error(std::string("config key '") + (section ? std::string(section) + "." : "") + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (d < 1 || word_dim < 1 || layers < 0 || ffn_dim < 1 || node_dim < 1 || path_hidden < 1) {
    config_error("model dimensions must be positive");
  }
  if (heads < 1 || d % heads != 0) {
    config_error("model.heads (" + std::to_string(heads) + ") must divide model.d (" + std::to_string(d) + ")");
  }
  if (task == corpus::Task::kSummarization && decoder_layers < 1) config_error("model.decoder_layers must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) config_error("model.dropout must be in [0, 1)");
  if (max_decode < 1) config_error("model.max_decode must be >= 1");
  if (scheme != model::Scheme::kNone && variant != model::Variant::kTPTrans) {
    config_error("meta.scheme " + std::string(model::to_string(scheme)) + " requires model.variant tptrans");
  }
  if (d_t < 1 || d_p < 1) config_error("d_T and d_P must be positive");
  if (optimizer != "adam") config_error("optimizer.name must be adam");
  if (!(lr >= 0.0)) config_error("optimizer.lr must be >= 0");
  if (batch_size < 1) config_error("train.batch_size must be >= 1");
  if (epochs < 0) config_error("train.epochs must be >= 0");
  if (kernels != "parallel" && kernels != "serial") config_error("train.kernels must be parallel or serial");
}

json RunConfig::to_json() const {
  return json{
      {"task", corpus::to_string(task)},
      {"model",
       {{"variant", model::to_string(variant)},
        {"word_dim", word_dim},
        {"d", d},
        {"heads", heads},
        {"layers", layers},
        {"decoder_layers", decoder_layers},
        {"ffn_dim", ffn_dim},
        {"dropout", dropout},
        {"node_dim", node_dim},
        {"path_hidden", path_hidden},
        {"shared_path_encoder", shared_path_encoder},
        {"pointer", pointer},
        {"max_decode", max_decode}}},
      {"meta", {{"scheme", model::to_string(scheme)}}},
      {"d_T", d_t},
      {"d_P", d_p},
      {"optimizer", {{"name", optimizer}, {"lr", lr}, {"clip_norm", clip_norm}}},
      {"train",
       {{"batch_size", batch_size},
        {"epochs", epochs},
        {"seed", seed},
        {"per_language_batches", per_language_batches},
        {"kernels", kernels}}},
      {"data", {{"dataset", dataset}, {"train_split", train_split}, {"valid_split", valid_split}}},
  };
}

RunConfig RunConfig::from_json(const json& given) {
  json j = RunConfig{}.to_json();
  check_keys(j, given, "");
  j.merge_patch(given);

  RunConfig c;
  c.task = corpus::task_from_string(field<std::string>(j, nullptr, "task"));
  c.variant = model::variant_from_string(field<std::string>(j, "model", "variant"));
  c.word_dim = field<int>(j, "model", "word_dim");
  c.d = field<int>(j, "model", "d");
  c.heads = field<int>(j, "model", "heads");
  c.layers = field<int>(j, "model", "layers");
  c.decoder_layers = field<int>(j, "model", "decoder_layers");
  c.ffn_dim = field<int>(j, "model", "ffn_dim");
  c.dropout = field<double>(j, "model", "dropout");
  c.node_dim = field<int>(j, "model", "node_dim");
  c.path_hidden = field<int>(j, "model", "path_hidden");
  c.shared_path_encoder = field<bool>(j, "model", "shared_path_encoder");
  c.pointer = field<bool>(j, "model", "pointer");
  c.max_decode = field<int>(j, "model", "max_decode");
  c.scheme = model::scheme_from_string(field<std::string>(j, "meta", "scheme"));
  c.d_t = field<int>(j, nullptr, "d_T");
  c.d_p = field<int>(j, nullptr, "d_P");
  c.optimizer = field<std::string>(j, "optimizer", "name");
  c.lr = field<double>(j, "optimizer", "lr");
  c.clip_norm = field<double>(j, "optimizer", "clip_norm");
  c.batch_size = field<int>(j, "train", "batch_size");
  c.epochs = field<int>(j, "train", "epochs");
  c.seed = field<std::uint64_t>(j, "train", "seed");
  c.per_language_batches = field<bool>(j, "train", "per_language_batches");
  c.kernels = field<std::string>(j, "train", "kernels");
  c.dataset = field<std::string>(j, "data", "dataset");
  c.train_split = field<std::string>(j, "data", "train_split");
  c.valid_split = field<std::string>(j, "data", "valid_split");
  return c;
}

model::ModelConfig RunConfig::model_config(const corpus::Dataset& ds) const {
  model::ModelConfig m;
  m.task = task;
  m.variant = variant;
  m.scheme = scheme;
  m.vocab_size = ds.vocab.subtokens.size();
  m.num_node_types = ds.vocab.node_types.size();
  m.num_languages = ds.languages.size();
  m.word_dim = word_dim;
  m.d = d;
  m.heads = heads;
  m.layers = layers;
  m.decoder_layers = decoder_layers;
  m.ffn_dim = ffn_dim;
  m.dropout = dropout;
  m.node_dim = node_dim;
  m.path_hidden = path_hidden;
  m.shared_path_encoder = shared_path_encoder;
  m.d_t = d_t;
  m.d_p = d_p;
  m.pointer = pointer;
  m.max_decode = max_decode;
  return m;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const json schema = RunConfig{}.to_json();
  const json* s = &schema;
  json* target = &config;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!s->is_object() || !s->contains(path[i])) config_error("unknown config key '" + key + "'");
    s = &(*s)[path[i]];
    if (!target->is_object()) *target = json::object();
    target = &(*target)[path[i]];
  }
  if (s->is_object()) config_error("override '" + key + "' names a section, not a value");
  *target = std::move(value);
}

fs::path preset_directory() {
  if (const char* env = std::getenv("METATP_CONFIG_DIR"); env && *env) return env;
  return METATP_DEFAULT_CONFIG_DIR;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(preset_directory(), ec)) {
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

json load_config_json(const std::string& path_or_preset) {
  fs::path file = path_or_preset;
  if (!fs::exists(file)) {
    file = preset_directory() / (path_or_preset + ".json");
    if (!fs::exists(file)) config_error("no config file or preset named '" + path_or_preset + "'");
  }
  std::ifstream in(file);
  if (!in) config_error("cannot read " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) config_error(file.string() + " is not valid JSON");
  return j;
}

RunConfig load_run_config(const std::string& path_or_preset, const std::vector<std::string>& overrides) {
  json j = path_or_preset.empty() ? json::object() : load_config_json(path_or_preset);
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig c = RunConfig::from_json(j);
  c.validate();
  return c;
}

}  // namespace metatp::train

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "metatp/common/error.hpp"
#include "metatp/corpus/dataset.hpp"
#include "metatp/corpus/ingest.hpp"
#include "metatp/corpus/synthetic_corpus.hpp"
#include "metatp/train/checkpoint.hpp"
#include "metatp/train/run_config.hpp"
#include "metatp/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metatp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Log records go to --log when given, else stderr.
struct LogSink {
  std::ofstream file;
  std::ostream* stream = &std::cerr;

  void open(const std::string& path) {
    if (path.empty()) return;
    file.open(path, std::ios::app);
    if (!file) throw Error(ErrorCode::kIo, "cannot open log " + path);
    stream = &file;
  }
  train::JsonlLog log() { return train::JsonlLog(stream); }
};

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

struct IngestArgs {
  std::string input;
  int synthetic = 0;
  std::vector<std::string> languages{"python", "javascript"};
  double valid_fraction = 0.0;
  std::string task = "completion";
  std::int64_t min_count = corpus::kDefaultMinCount;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "binary";
  std::string log;
};

int run_ingest(const IngestArgs& a) {
  LogSink sink;
  sink.open(a.log);
  std::vector<corpus::SourceFunction> functions;
  if (!a.input.empty()) {
    functions = corpus::read_source_functions(a.input);
  } else {
    corpus::SyntheticCorpusOptions o;
    o.languages = a.languages;
    o.functions_per_language = a.synthetic;
    o.valid_fraction = a.valid_fraction;
    o.seed = a.seed;
    functions = corpus::make_synthetic_corpus(o);
  }
  corpus::IngestOptions opts;
  opts.task = corpus::task_from_string(a.task);
  opts.min_count = a.min_count;
  opts.seed = a.seed;
  corpus::IngestReport report;
  const corpus::Dataset ds = corpus::ingest(functions, opts, &report);
  corpus::serialize_dataset(ds, a.out, a.format == "jsonl" ? corpus::RecordFormat::kJsonl : corpus::RecordFormat::kBinary);
  json splits = json::object();
  for (const auto& [name, samples] : ds.splits) splits[name] = samples.size();
  sink.log().write({{"event", "ingest"},
                    {"functions", functions.size()},
                    {"parsed", report.parsed},
                    {"parse_errors", report.parse_errors},
                    {"skipped", report.skipped},
                    {"splits", splits},
                    {"subtoken_vocab", ds.vocab.subtokens.size()},
                    {"node_type_vocab", ds.vocab.node_types.size()},
                    {"paths", ds.paths.size()},
                    {"out", a.out}});
  for (const auto& e : report.errors) sink.log().write({{"event", "parse_error"}, {"message", e}});
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string dataset;
  std::string out = "checkpoint.bin";
  std::string resume;
  std::string log;
};

int run_train(const TrainArgs& a) {
  LogSink sink;
  sink.open(a.log);
  std::vector<std::string> overrides = a.overrides;
  if (!a.dataset.empty()) overrides.push_back("data.dataset=" + json(a.dataset).dump());
  train::RunConfig config = train::load_run_config(a.config, overrides);
  if (config.dataset.empty()) throw Error(ErrorCode::kConfig, "no dataset given (data.dataset or --dataset)");
  const corpus::Dataset ds = corpus::load_dataset(config.dataset);
  std::optional<train::Trainer> trainer;
  if (a.resume.empty()) {
    trainer.emplace(config, ds);
  } else {
    train::Checkpoint ck = train::load_checkpoint(a.resume, ds);
    ck.config.epochs = config.epochs;
    trainer.emplace(std::move(ck), ds);
  }
  train::FitOptions fit;
  fit.checkpoint = a.out;
  fit.log = sink.log();
  trainer->fit(fit);
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
  std::string out;
  int batch_size = 32;
  std::string log;
};

struct Loaded {
  corpus::Dataset dataset;
  train::Checkpoint checkpoint;
};

Loaded load_for_eval(const EvalArgs& a) {
  Loaded l;
  l.dataset = corpus::load_dataset(a.dataset);
  l.checkpoint = train::load_checkpoint(a.checkpoint, l.dataset);
  if (!l.dataset.splits.contains(a.split)) throw Error(ErrorCode::kConfig, "dataset has no split '" + a.split + "'");
  return l;
}

int run_evaluate(const EvalArgs& a) {
  LogSink sink;
  sink.open(a.log);
  const Loaded l = load_for_eval(a);
  const auto report = train::evaluate(*l.checkpoint.model, l.dataset, l.dataset.split(a.split), a.batch_size);
  const std::string text = report.to_json().dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    open_output(a.out) << text;
  }
  sink.log().write({{"event", "evaluate"}, {"split", a.split}, {"headline", report.headline()}});
  return kExitOk;
}

int run_predict(const EvalArgs& a) {
  LogSink sink;
  sink.open(a.log);
  const Loaded l = load_for_eval(a);
  const auto records = train::predict(*l.checkpoint.model, l.dataset, l.dataset.split(a.split), a.batch_size);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty()) {
    file = open_output(a.out);
    out = &file;
  }
  for (const auto& r : records) *out << r.dump() << '\n';
  sink.log().write({{"event", "predict"}, {"split", a.split}, {"records", records.size()}});
  return kExitOk;
}

int run_export(const EvalArgs& a) {
  LogSink sink;
  sink.open(a.log);
  const Loaded l = load_for_eval(a);
  const auto records = train::export_embeddings(*l.checkpoint.model, l.dataset, l.dataset.split(a.split), a.batch_size);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty()) {
    file = open_output(a.out);
    out = &file;
  }
  train::write_embeddings(records, *out);
  sink.log().write({{"event", "export_embeddings"}, {"split", a.split}, {"records", records.size()}});
  return kExitOk;
}

void add_eval_options(CLI::App* cmd, EvalArgs& a, const char* out_help) {
  cmd->add_option("--checkpoint", a.checkpoint, "checkpoint file")->required();
  cmd->add_option("--dataset", a.dataset, "dataset directory")->required();
  cmd->add_option("--split", a.split, "split name")->capture_default_str();
  cmd->add_option("--out", a.out, out_help);
  cmd->add_option("--batch-size", a.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--log", a.log, "JSONL log file (default stderr)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual path-aware code transformer: ingest, train, evaluate"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "parse functions into a task dataset");
  auto* input = ingest->add_option("--input", ingest_args.input, "JSONL file of {id, language, split, code}");
  auto* synth = ingest->add_option("--synthetic", ingest_args.synthetic, "generate N template functions per language")
                    ->check(CLI::PositiveNumber);
  input->excludes(synth);
  ingest->add_option("--languages", ingest_args.languages, "languages for --synthetic")->delimiter(',');
  ingest->add_option("--valid-fraction", ingest_args.valid_fraction, "held-out share for --synthetic")
      ->check(CLI::Range(0.0, 1.0));
  ingest->add_option("--task", ingest_args.task)->check(CLI::IsMember({"completion", "summarization"}))->capture_default_str();
  ingest->add_option("--min-count", ingest_args.min_count, "subtoken vocabulary threshold")->capture_default_str();
  ingest->add_option("--seed", ingest_args.seed)->capture_default_str();
  ingest->add_option("--out", ingest_args.out, "dataset directory")->required();
  ingest->add_option("--format", ingest_args.format)->check(CLI::IsMember({"binary", "jsonl"}))->capture_default_str();
  ingest->add_option("--log", ingest_args.log, "JSONL log file (default stderr)");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model and keep the best checkpoint");
  train->add_option("--config", train_args.config, "JSON config file or preset name");
  train->add_option("--set", train_args.overrides, "override, e.g. model.d=128 (repeatable)");
  train->add_option("--dataset", train_args.dataset, "dataset directory (overrides data.dataset)");
  train->add_option("--out", train_args.out, "checkpoint file")->capture_default_str();
  train->add_option("--resume", train_args.resume, "continue from a checkpoint");
  train->add_option("--log", train_args.log, "JSONL log file (default stderr)");

  EvalArgs eval_args, predict_args, export_args;
  add_eval_options(app.add_subcommand("evaluate", "per-language metrics as JSON"), eval_args, "metrics file (default stdout)");
  add_eval_options(app.add_subcommand("predict", "predictions as JSONL"), predict_args, "JSONL file (default stdout)");
  add_eval_options(app.add_subcommand("export-embeddings", "mean-pooled encoder vectors as JSONL"), export_args,
                   "JSONL file (default stdout)");

  std::string show_config;
  std::vector<std::string> show_overrides;
  auto* config = app.add_subcommand("config", "print the resolved run config");
  config->add_option("--config", show_config, "JSON config file or preset name");
  config->add_option("--set", show_overrides, "override (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ingest->parsed()) {
      if (ingest_args.input.empty() && ingest_args.synthetic == 0) {
        throw Error(ErrorCode::kConfig, "ingest needs --input or --synthetic");
      }
      return run_ingest(ingest_args);
    }
    if (train->parsed()) return run_train(train_args);
    if (app.got_subcommand("evaluate")) return run_evaluate(eval_args);
    if (app.got_subcommand("predict")) return run_predict(predict_args);
    if (app.got_subcommand("export-embeddings")) return run_export(export_args);
    if (config->parsed()) {
      std::cout << train::load_run_config(show_config, show_overrides).to_json().dump(2) << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << json{{"event", "error"}, {"code", std::string(to_string(e.code()))}, {"message", e.what()}}.dump()
              << '\n';
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << json{{"event", "error"}, {"code", "internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

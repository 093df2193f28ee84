#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "metatp/corpus/dataset.hpp"
#include "metatp/model/metrics.hpp"
#include "metatp/model/model.hpp"
#include "metatp/nn/parameters.hpp"
#include "metatp/train/checkpoint.hpp"
#include "metatp/train/run_config.hpp"

namespace metatp::train {

// Line-delimited JSON sink; a null stream discards.
class JsonlLog {
 public:
  JsonlLog() = default;
  explicit JsonlLog(std::ostream* out) : out_(out) {}
  void write(const nlohmann::json& record) const;

 private:
  std::ostream* out_ = nullptr;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> valid_metric;
  bool best = false;
  double seconds = 0.0;
};

struct FitOptions {
  std::filesystem::path checkpoint;  // best checkpoint; empty = do not save
  JsonlLog log;
};

class Trainer {
 public:
  Trainer(RunConfig config, const corpus::Dataset& dataset);
  // Resumes parameters, optimizer state and epoch counter.
  Trainer(Checkpoint checkpoint, const corpus::Dataset& dataset);

  // One shuffled pass; returns the sample-weighted mean loss. Throws
  // Error(kDivergence) on a non-finite loss or gradient.
  double run_epoch(const std::vector<corpus::CodeSample>& samples);
  // Runs config.epochs epochs over the train split, validating on the
  // valid split when it exists, and keeps the best checkpoint.
  std::vector<EpochRecord> fit(const FitOptions& options);

  const RunConfig& config() const { return config_; }
  model::Model& model() { return *model_; }
  const model::Model& model() const { return *model_; }
  nn::Adam& optimizer() { return *optimizer_; }
  int epoch() const { return epoch_; }

 private:
  RunConfig config_;
  const corpus::Dataset& dataset_;
  std::unique_ptr<model::Model> model_;
  std::unique_ptr<nn::Adam> optimizer_;
  int epoch_ = 0;
};

// Batch order for one epoch: a seeded shuffle, optionally keeping each batch
// within a single language.
std::vector<std::vector<const corpus::CodeSample*>> make_epoch_batches(const std::vector<corpus::CodeSample>& samples,
                                                                      int batch_size, bool per_language,
                                                                      std::uint64_t seed);

model::MetricsReport evaluate(const model::Model& model, const corpus::Dataset& dataset,
                              const std::vector<corpus::CodeSample>& samples, int batch_size = 32);

// One record per sample: id, language, prediction and gold as subtoken
// strings (completion records also carry the gold rank).
std::vector<nlohmann::json> predict(const model::Model& model, const corpus::Dataset& dataset,
                                    const std::vector<corpus::CodeSample>& samples, int batch_size = 32);

struct EmbeddingRecord {
  std::string id;
  std::string language;
  std::vector<double> vector;
};

// Mean over each sample's encoder outputs.
std::vector<EmbeddingRecord> export_embeddings(const model::Model& model, const corpus::Dataset& dataset,
                                               const std::vector<corpus::CodeSample>& samples, int batch_size = 32);
void write_embeddings(const std::vector<EmbeddingRecord>& records, std::ostream& out);

// Mean silhouette coefficient with Euclidean distance. Points whose label
// has a single member score 0.
double silhouette_score(const std::vector<std::vector<double>>& points, const std::vector<std::string>& labels);

}  // namespace metatp::train

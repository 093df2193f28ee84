#include "metatp/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "metatp/common/error.hpp"
#include "metatp/common/rng.hpp"
#include "metatp/model/batch.hpp"
#include "metatp/nn/fused.hpp"

namespace metatp::train {
using corpus::CodeSample;
using nlohmann::json;
using nn::Matrix;
using nn::Var;

namespace {

using SampleBatches = std::vector<std::vector<const CodeSample*>>;

SampleBatches chunks(const std::vector<CodeSample>& samples, int batch_size) {
  SampleBatches out;
  for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(batch_size)) {
    std::vector<const CodeSample*> b;
    for (std::size_t k = i; k < std::min(samples.size(), i + static_cast<std::size_t>(batch_size)); ++k) {
      b.push_back(&samples[k]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::vector<int> gold_name(const CodeSample& s) {
  std::vector<int> gold = std::get<corpus::SummaryTarget>(s.target).subtokens;
  if (!gold.empty() && gold.back() == corpus::special::kEos) gold.pop_back();
  return gold;
}

std::vector<int> clean_prediction(std::vector<int> p) {
  std::erase_if(p, [](int id) { return id == corpus::special::kUnk || id == corpus::special::kPad; });
  return p;
}

json to_strings(const corpus::TokenVocab& vocab, const std::vector<int>& ids) {
  json out = json::array();
  for (int id : ids) out.push_back(vocab.token(id));
  return out;
}

model::MetricsReport::Kind report_kind(corpus::Task task) {
  return task == corpus::Task::kSummarization ? model::MetricsReport::Kind::kSummarization
                                              : model::MetricsReport::Kind::kCompletion;
}

void apply_kernels(const RunConfig& c) {
  nn::set_kernel_mode(c.kernels == "serial" ? nn::KernelMode::kSerial : nn::KernelMode::kParallel);
}

nn::AdamOptions adam_options(const RunConfig& c) {
  nn::AdamOptions o;
  o.lr = c.lr;
  return o;
}

}  // namespace

void JsonlLog::write(const json& record) const {
  if (!out_) return;
  *out_ << record.dump() << '\n';
  out_->flush();
}

Trainer::Trainer(RunConfig config, const corpus::Dataset& dataset) : config_(std::move(config)), dataset_(dataset) {
  config_.validate();
  if (config_.task != dataset.task) {
    throw Error(ErrorCode::kConfig, std::string("config task ") + corpus::to_string(config_.task) +
                                        " does not match dataset task " + corpus::to_string(dataset.task));
  }
  apply_kernels(config_);
  model_ = std::make_unique<model::Model>(config_.model_config(dataset), config_.seed);
  optimizer_ = std::make_unique<nn::Adam>(model_->params(), adam_options(config_));
}

Trainer::Trainer(Checkpoint checkpoint, const corpus::Dataset& dataset)
    : config_(std::move(checkpoint.config)), dataset_(dataset), model_(std::move(checkpoint.model)) {
  apply_kernels(config_);
  optimizer_ = std::make_unique<nn::Adam>(model_->params(), adam_options(config_));
  if (!checkpoint.optimizer_state.empty()) {
    std::istringstream in(checkpoint.optimizer_state, std::ios::binary);
    optimizer_->load(in);
  }
  epoch_ = checkpoint.epoch;
}

SampleBatches make_epoch_batches(const std::vector<CodeSample>& samples, int batch_size, bool per_language,
                                 std::uint64_t seed) {
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch size must be >= 1");
  Rng rng(seed);
  std::vector<const CodeSample*> order;
  for (const auto& s : samples) order.push_back(&s);
  shuffle(order, rng);
  SampleBatches out;
  const auto bs = static_cast<std::size_t>(batch_size);
  if (!per_language) {
    for (std::size_t i = 0; i < order.size(); i += bs) {
      out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + bs)));
    }
    return out;
  }
  std::map<int, std::vector<const CodeSample*>> by_lang;
  for (const auto* s : order) by_lang[s->language].push_back(s);
  for (auto& [lang, list] : by_lang) {
    for (std::size_t i = 0; i < list.size(); i += bs) {
      out.emplace_back(list.begin() + static_cast<std::ptrdiff_t>(i),
                       list.begin() + static_cast<std::ptrdiff_t>(std::min(list.size(), i + bs)));
    }
  }
  shuffle(out, rng);
  return out;
}

double Trainer::run_epoch(const std::vector<CodeSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyCorpus, "training split is empty");
  const std::uint64_t epoch_seed = mix_seed(config_.seed ^ mix_seed(static_cast<std::uint64_t>(epoch_) + 1));
  const auto batches = make_epoch_batches(samples, config_.batch_size, config_.per_language_batches, epoch_seed);
  Rng dropout_rng(mix_seed(epoch_seed));
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t step = 0; step < batches.size(); ++step) {
    const model::Batch batch = model::make_batch(batches[step], dataset_.paths, model_->batch_options());
    model_->params().zero_grad();
    const Var loss = model_->loss(batch, true, dropout_rng);
    const double value = loss.scalar();
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kDivergence, "non-finite loss at epoch " + std::to_string(epoch_ + 1) + " step " +
                                              std::to_string(step) + " (first sample " + batches[step][0]->id + ")");
    }
    nn::backward(loss);
    const double norm = config_.clip_norm > 0.0 ? model_->params().clip_grad_norm(config_.clip_norm)
                                                : model_->params().grad_norm();
    if (!std::isfinite(norm)) {
      throw Error(ErrorCode::kDivergence, "non-finite gradient norm at epoch " + std::to_string(epoch_ + 1) +
                                              " step " + std::to_string(step));
    }
    optimizer_->step();
    total += value * static_cast<double>(batches[step].size());
    count += batches[step].size();
  }
  ++epoch_;
  return total / static_cast<double>(count);
}

std::vector<EpochRecord> Trainer::fit(const FitOptions& options) {
  const auto& train_split = dataset_.split(config_.train_split);
  const auto it = dataset_.splits.find(config_.valid_split);
  const std::vector<CodeSample>* valid =
      it != dataset_.splits.end() && !it->second.empty() ? &it->second : nullptr;
  options.log.write({{"event", "start"},
                     {"config", config_.to_json()},
                     {"parameters", model_->params().num_scalars()},
                     {"train_samples", train_split.size()},
                     {"valid_samples", valid ? valid->size() : 0}});
  std::vector<EpochRecord> records;
  std::optional<double> best;
  while (epoch_ < config_.epochs) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord r;
    r.train_loss = run_epoch(train_split);
    r.epoch = epoch_;
    if (valid) r.valid_metric = evaluate(*model_, dataset_, *valid, config_.batch_size).headline();
    // without a validation split the latest epoch is kept
    r.best = !valid || !best || *r.valid_metric > *best;
    if (r.best && valid) best = r.valid_metric;
    if (r.best && !options.checkpoint.empty()) {
      save_checkpoint(options.checkpoint, config_, *model_, optimizer_.get(), epoch_, VocabStamp::of(dataset_));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json rec{{"event", "epoch"}, {"epoch", r.epoch}, {"train_loss", r.train_loss}, {"best", r.best},
             {"seconds", r.seconds}};
    rec["valid_metric"] = r.valid_metric ? json(*r.valid_metric) : json(nullptr);
    options.log.write(rec);
    records.push_back(r);
  }
  json done{{"event", "done"}, {"epochs", epoch_}};
  done["best_valid_metric"] = best ? json(*best) : json(nullptr);
  options.log.write(done);
  return records;
}

model::MetricsReport evaluate(const model::Model& model, const corpus::Dataset& dataset,
                              const std::vector<CodeSample>& samples, int batch_size) {
  model::MetricsReport report(report_kind(model.config().task));
  for (const auto& chunk : chunks(samples, batch_size)) {
    const model::Batch batch = model::make_batch(chunk, dataset.paths, model.batch_options());
    if (model.config().task == corpus::Task::kCompletion) {
      const Matrix logits = model.completion_logits(batch);
      for (std::size_t s = 0; s < chunk.size(); ++s) {
        report.add_completion(dataset.languages.name(chunk[s]->language), logits.row(static_cast<nn::Index>(s)),
                              std::get<corpus::CompletionTarget>(chunk[s]->target).answer_id);
      }
    } else {
      const auto preds = model.decode(batch);
      for (std::size_t s = 0; s < chunk.size(); ++s) {
        report.add_summary(dataset.languages.name(chunk[s]->language), clean_prediction(preds[s]),
                           gold_name(*chunk[s]));
      }
    }
  }
  return report;
}

std::vector<json> predict(const model::Model& model, const corpus::Dataset& dataset,
                          const std::vector<CodeSample>& samples, int batch_size) {
  const auto& vocab = dataset.vocab.subtokens;
  std::vector<json> out;
  for (const auto& chunk : chunks(samples, batch_size)) {
    const model::Batch batch = model::make_batch(chunk, dataset.paths, model.batch_options());
    if (model.config().task == corpus::Task::kCompletion) {
      const Matrix logits = model.completion_logits(batch);
      for (std::size_t s = 0; s < chunk.size(); ++s) {
        const auto row = logits.row(static_cast<nn::Index>(s));
        nn::Index best = 0;
        row.maxCoeff(&best);
        const int answer = std::get<corpus::CompletionTarget>(chunk[s]->target).answer_id;
        out.push_back({{"id", chunk[s]->id},
                       {"language", dataset.languages.name(chunk[s]->language)},
                       {"prediction", vocab.token(static_cast<int>(best))},
                       {"gold", vocab.token(answer)},
                       {"gold_rank", model::answer_rank(row, answer)}});
      }
    } else {
      const auto preds = model.decode(batch);
      for (std::size_t s = 0; s < chunk.size(); ++s) {
        out.push_back({{"id", chunk[s]->id},
                       {"language", dataset.languages.name(chunk[s]->language)},
                       {"prediction", to_strings(vocab, clean_prediction(preds[s]))},
                       {"gold", to_strings(vocab, gold_name(*chunk[s]))}});
      }
    }
  }
  return out;
}

std::vector<EmbeddingRecord> export_embeddings(const model::Model& model, const corpus::Dataset& dataset,
                                               const std::vector<CodeSample>& samples, int batch_size) {
  std::vector<EmbeddingRecord> out;
  for (const auto& chunk : chunks(samples, batch_size)) {
    const model::Batch batch = model::make_batch(chunk, dataset.paths, model.batch_options());
    const Matrix pooled = model.pooled_embeddings(batch);
    for (std::size_t s = 0; s < chunk.size(); ++s) {
      const auto row = pooled.row(static_cast<nn::Index>(s));
      out.push_back({chunk[s]->id, dataset.languages.name(chunk[s]->language), {row.begin(), row.end()}});
    }
  }
  return out;
}

void write_embeddings(const std::vector<EmbeddingRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << json{{"id", r.id}, {"language", r.language}, {"vector", r.vector}}.dump() << '\n';
}

double silhouette_score(const std::vector<std::vector<double>>& points, const std::vector<std::string>& labels) {
  const std::size_t n = points.size();
  if (labels.size() != n) throw Error(ErrorCode::kDimensionMismatch, "one label per point");
  std::map<std::string, int> ids;
  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = ids.emplace(labels[i], static_cast<int>(ids.size())).first->second;
  const std::size_t k = ids.size();
  if (k < 2) throw Error(ErrorCode::kConfig, "silhouette needs at least two labels");
  std::vector<std::size_t> sizes(k, 0);
  for (int l : label) ++sizes[static_cast<std::size_t>(l)];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < points[i].size(); ++c) {
        const double diff = points[i][c] - points[j][c];
        d2 += diff * diff;
      }
      sum[static_cast<std::size_t>(label[j])] += std::sqrt(d2);
    }
    const auto own = static_cast<std::size_t>(label[i]);
    if (sizes[own] < 2) continue;
    const double a = sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    total += m == 0.0 ? 0.0 : (b - a) / m;
  }
  return total / static_cast<double>(n);
}

}  // namespace metatp::train

#pragma once

#include "metatp/corpus/ingest.hpp"
#include "metatp/corpus/synthetic_corpus.hpp"
#include "metatp/train/run_config.hpp"

namespace metatp::testing {

inline corpus::Dataset small_dataset(corpus::Task task, int per_language = 24, double valid_fraction = 0.0,
                                     std::uint64_t seed = 7) {
  corpus::SyntheticCorpusOptions so;
  so.functions_per_language = per_language;
  so.valid_fraction = valid_fraction;
  so.seed = seed;
  const auto functions = corpus::make_synthetic_corpus(so);
  corpus::IngestOptions io;
  io.task = task;
  io.min_count = 2;
  io.seed = seed;
  return corpus::ingest(functions, io);
}

// Small enough for finite-difference and round-trip tests.
inline train::RunConfig tiny_config(corpus::Task task) {
  train::RunConfig c;
  c.task = task;
  c.word_dim = 8;
  c.d = 8;
  c.heads = 2;
  c.layers = 1;
  c.decoder_layers = 1;
  c.ffn_dim = 16;
  c.node_dim = 4;
  c.path_hidden = 4;
  c.d_t = 4;
  c.d_p = 6;
  c.max_decode = 4;
  c.batch_size = 8;
  c.epochs = 2;
  c.lr = 1e-3;
  return c;
}

}  // namespace metatp::testing

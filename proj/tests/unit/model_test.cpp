#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "metatp/common/error.hpp"
#include "metatp/model/model.hpp"
#include "metatp/nn/ops.hpp"
#include "test_util.hpp"

using namespace metatp;
using namespace metatp::model;
using testing::max_abs_diff;

namespace {

const corpus::Dataset& completion_data() {
  static const corpus::Dataset ds = testing::small_dataset(corpus::Task::kCompletion);
  return ds;
}

const corpus::Dataset& summary_data() {
  static const corpus::Dataset ds = testing::small_dataset(corpus::Task::kSummarization);
  return ds;
}

ModelConfig config_for(const corpus::Dataset& ds, Variant v, Scheme s = Scheme::kNone) {
  auto rc = testing::tiny_config(ds.task);
  rc.variant = v;
  rc.scheme = s;
  return rc.model_config(ds);
}

std::vector<const corpus::CodeSample*> pick(const corpus::Dataset& ds, std::initializer_list<int> idx) {
  std::vector<const corpus::CodeSample*> out;
  const auto& train = ds.split("train");
  for (int i : idx) out.push_back(&train[static_cast<std::size_t>(i)]);
  return out;
}

// One sample from each language.
std::vector<const corpus::CodeSample*> mixed(const corpus::Dataset& ds) {
  std::vector<const corpus::CodeSample*> out;
  const auto& train = ds.split("train");
  for (int lang = 0; lang < ds.languages.size(); ++lang) {
    int taken = 0;
    for (const auto& s : train)
      if (s.language == lang && taken++ < 2) out.push_back(&s);
  }
  return out;
}

struct Case {
  Variant variant;
  Scheme scheme;
};

constexpr Case kCases[] = {{Variant::kVanilla, Scheme::kNone}, {Variant::kAbsPos, Scheme::kNone},
                           {Variant::kRelPos, Scheme::kNone},  {Variant::kTPTrans, Scheme::kNone},
                           {Variant::kTPTrans, Scheme::kAlpha}, {Variant::kTPTrans, Scheme::kBeta},
                           {Variant::kTPTrans, Scheme::kGamma}};

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("packed batches match single-sample batches for every variant") {
    const auto& ds = completion_data();
    const auto samples = mixed(ds);
    for (const auto& c : kCases) {
      INFO(to_string(c.variant) << " " << to_string(c.scheme));
      const Model m(config_for(ds, c.variant, c.scheme), 3);
      const Batch batch = make_batch(samples, ds.paths, m.batch_options());
      Rng rng(0);
      const Matrix z = m.encode(batch, false, rng).value();
      CHECK(z.rows() == static_cast<Index>(batch.tokens.size()));
      CHECK(z.cols() == 8);
      CHECK(z.allFinite());
      const Matrix logits = m.completion_logits(batch);
      CHECK(logits.rows() == batch.size());
      CHECK(logits.cols() == ds.vocab.subtokens.size());
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const std::vector<const corpus::CodeSample*> one{samples[s]};
        const Batch b1 = make_batch(one, ds.paths, m.batch_options());
        const Matrix z1 = m.encode(b1, false, rng).value();
        CHECK(max_abs_diff(z.middleRows(batch.layout.begin[s], batch.layout.length[s]), z1) < 1e-10);
        CHECK(max_abs_diff(logits.row(static_cast<Index>(s)), m.completion_logits(b1)) < 1e-10);
      }
    }
  }

  TEST_CASE("loss is finite and gradients reach every parameter group") {
    const auto& ds = completion_data();
    const Model m(config_for(ds, Variant::kTPTrans, Scheme::kGamma), 4);
    const Batch batch = make_batch(mixed(ds), ds.paths, m.batch_options());
    Rng rng(0);
    const Var loss = m.loss(batch, true, rng);
    CHECK(std::isfinite(loss.scalar()));
    // an untrained model is close to uniform over the vocabulary
    CHECK(loss.scalar() == doctest::Approx(std::log(ds.vocab.subtokens.size())).epsilon(0.25));
    nn::backward(loss);
    for (const char* prefix : {"word_embedding", "word_proj.w", "path.", "meta.", "encoder.", "output.w"}) {
      double norm = 0.0;
      for (const auto& [name, v] : m.params().items())
        if (name.rfind(prefix, 0) == 0 && v.node().has_grad()) norm += v.grad().squaredNorm();
      INFO(prefix);
      CHECK(norm > 0.0);
    }
  }

  TEST_CASE("language changes the meta encoder output") {
    const auto& ds = completion_data();
    const Model meta(config_for(ds, Variant::kTPTrans, Scheme::kAlpha), 5);
    const Model plain(config_for(ds, Variant::kTPTrans), 5);
    corpus::CodeSample a = ds.split("train").front();
    corpus::CodeSample b = a;
    b.language = 1 - a.language;
    const std::vector<const corpus::CodeSample*> sa{&a}, sb{&b};
    Rng rng(0);
    const auto z = [&](const Model& m, const std::vector<const corpus::CodeSample*>& s) {
      return m.encode(make_batch(s, ds.paths, m.batch_options()), false, rng).value();
    };
    CHECK(max_abs_diff(z(meta, sa), z(meta, sb)) > 1e-6);
    CHECK(max_abs_diff(z(plain, sa), z(plain, sb)) == 0.0);
  }

  TEST_CASE("summarization loss, decoding and pooling") {
    const auto& ds = summary_data();
    for (bool pointer : {true, false}) {
      auto cfg = config_for(ds, Variant::kTPTrans, Scheme::kAlpha);
      cfg.pointer = pointer;
      const Model m(cfg, 6);
      const auto samples = mixed(ds);
      const Batch batch = make_batch(samples, ds.paths, m.batch_options());
      Rng rng(0);
      CHECK(std::isfinite(m.loss(batch, false, rng).scalar()));
      const auto a = m.decode(batch), b = m.decode(batch);
      CHECK(a == b);
      CHECK(a.size() == samples.size());
      for (const auto& seq : a) CHECK(seq.size() <= 4u);
      const Matrix pooled = m.pooled_embeddings(batch);
      CHECK(pooled.rows() == batch.size());
      const Matrix z = m.encode(batch, false, rng).value();
      CHECK(max_abs_diff(pooled.row(0), z.topRows(batch.layout.length[0]).colwise().mean()) < 1e-12);
    }
  }

  TEST_CASE("seeded construction is reproducible") {
    const auto& ds = completion_data();
    const Model a(config_for(ds, Variant::kTPTrans), 9), b(config_for(ds, Variant::kTPTrans), 9);
    const Model c(config_for(ds, Variant::kTPTrans), 10);
    bool differs = false;
    for (std::size_t i = 0; i < a.params().items().size(); ++i) {
      CHECK(a.params().items()[i].second.value() == b.params().items()[i].second.value());
      differs |= a.params().items()[i].second.value() != c.params().items()[i].second.value();
    }
    CHECK(differs);
    CHECK(a.params().items().front().second.value().row(corpus::special::kPad).isZero());
  }

  TEST_CASE("config validation") {
    const auto& ds = completion_data();
    const auto expect_config_error = [](ModelConfig c) {
      try {
        c.validate();
        FAIL("expected ConfigError");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kConfig);
      }
    };
    auto c = config_for(ds, Variant::kTPTrans);
    c.heads = 3;
    expect_config_error(c);
    c = config_for(ds, Variant::kVanilla, Scheme::kAlpha);
    expect_config_error(c);
    c = config_for(ds, Variant::kTPTrans);
    c.dropout = 1.0;
    expect_config_error(c);
    c = config_for(summary_data(), Variant::kTPTrans);
    c.decoder_layers = 0;
    expect_config_error(c);
    c = config_for(ds, Variant::kTPTrans);
    c.vocab_size = 3;
    expect_config_error(c);
    CHECK_NOTHROW(config_for(ds, Variant::kTPTrans, Scheme::kGamma).validate());
  }
}

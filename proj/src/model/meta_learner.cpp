#include "metatp/model/meta_learner.hpp"

#include <cmath>

#include "metatp/common/error.hpp"
#include "metatp/nn/ops.hpp"

namespace metatp::model {

Var generate_weight(const FactorizedGenerator& gen, const Var& p) {
  const Index d_p = gen.m.rows();
  if (p.value().size() != d_p || gen.m_prime.cols() != d_p || gen.m_prime.rows() != gen.m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "generate_weight: P has " + std::to_string(p.value().size()) +
                                                   " entries, generator expects " + std::to_string(d_p));
  }
  return nn::matmul(gen.m_prime, nn::scale_rows(gen.m, p));
}

GeneratorBank::GeneratorBank(nn::ParameterStore& store, const std::string& prefix, const MetaConfig& config,
                             Rng& rng) {
  // entries of W = M' diag(P) M then have variance about 1/d for unit-scale P
  const double sd = std::pow(static_cast<double>(config.d) * config.d_p, -0.25);
  layers_.resize(static_cast<std::size_t>(config.layers));
  for (int l = 0; l < config.layers; ++l) {
    for (Slot s : kAllSlots) {
      if (!scheme_generates(config.scheme, s)) continue;
      const std::string name = prefix + ".layer" + std::to_string(l) + "." + to_string(s);
      FactorizedGenerator g;
      g.slot = s;
      g.m = store.add(name + ".M", nn::normal(config.d_p, config.d, sd, rng));
      g.m_prime = store.add(name + ".M_prime", nn::normal(config.d, config.d_p, sd, rng));
      layers_[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)] = std::move(g);
    }
  }
}

const FactorizedGenerator* GeneratorBank::find(int layer, Slot slot) const {
  if (layer < 0 || layer >= layers()) throw Error(ErrorCode::kIndex, "generator layer out of range");
  const auto& g = layers_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(slot)];
  return g ? &*g : nullptr;
}

int GeneratorBank::populated_count(int layer) const {
  int n = 0;
  for (Slot s : kAllSlots) n += find(layer, s) ? 1 : 0;
  return n;
}

MetaLearner::MetaLearner(nn::ParameterStore& store, const std::string& prefix, const MetaConfig& config, Rng& rng)
    : config_(config) {
  if (config.num_languages < 1 || config.d_t < 1 || config.d_p < 1) throw Error(ErrorCode::kConfig, "meta: bad dimensions");
  table_ = store.add(prefix + ".language_embedding", nn::normal(config.num_languages, config.d_t, 1.0, rng));
  proj_w_ = store.add(prefix + ".projection.w", nn::normal(config.d_t, config.d_p, 1.0 / std::sqrt(config.d_t), rng));
  proj_b_ = store.add(prefix + ".projection.b", Matrix::Zero(1, config.d_p));
  bank_ = GeneratorBank(store, prefix + ".generator", config, rng);
}

Var MetaLearner::project_language(int language) const {
  if (language < 0 || language >= config_.num_languages) {
    throw Error(ErrorCode::kUnknownLanguage, "language code " + std::to_string(language));
  }
  return nn::linear(nn::gather_rows(table_, {language}), proj_w_, proj_b_);
}

AttentionWeightSet weight_set_for(const GeneratorBank& bank, int layer, const Var& p,
                                  const AttentionWeightSet& static_set) {
  AttentionWeightSet out = static_set;
  for (Slot s : kAllSlots) {
    if (const auto* g = bank.find(layer, s)) {
      out[s] = generate_weight(*g, p);
      out.tag[static_cast<std::size_t>(s)] = WeightTag::kGenerated;
    }
  }
  return out;
}

}  // namespace metatp::model

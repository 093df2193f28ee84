#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metatp/model/types.hpp"
#include "metatp/model/weight_set.hpp"
#include "metatp/nn/parameters.hpp"

namespace metatp::model {

using nn::Index;
using nn::Matrix;
using nn::Var;

// Produces one d x d matrix as M' diag(P) M.
struct FactorizedGenerator {
  Slot slot = Slot::kQ;
  Var m;        // d_P x d
  Var m_prime;  // d x d_P

  std::int64_t num_parameters() const { return m.value().size() + m_prime.value().size(); }
};

// W = M' diag(P) M computed by scaling the rows of M; the d_P x d_P diagonal
// is never formed. P is 1 x d_P. Throws Error(kDimensionMismatch).
Var generate_weight(const FactorizedGenerator& gen, const Var& p);

struct MetaConfig {
  Scheme scheme = Scheme::kNone;
  int num_languages = 0;
  int d = 64;
  int d_t = 64;
  int d_p = 128;
  int layers = 1;
};

// Per-layer generators for the slots the scheme populates.
class GeneratorBank {
 public:
  GeneratorBank() = default;
  GeneratorBank(nn::ParameterStore& store, const std::string& prefix, const MetaConfig& config, Rng& rng);

  int layers() const { return static_cast<int>(layers_.size()); }
  // Null when the slot falls back to the static weight.
  const FactorizedGenerator* find(int layer, Slot slot) const;
  int populated_count(int layer) const;

 private:
  std::vector<std::array<std::optional<FactorizedGenerator>, kNumSlots>> layers_;
};

// Generated slots where the bank has a generator, `static_set` elsewhere.
AttentionWeightSet weight_set_for(const GeneratorBank& bank, int layer, const Var& p,
                                  const AttentionWeightSet& static_set);

// Language embedding table, affine projection to d_P, and the generator
// bank. With scheme none only the bank is empty.
class MetaLearner {
 public:
  MetaLearner(nn::ParameterStore& store, const std::string& prefix, const MetaConfig& config, Rng& rng);

  // 1 x d_P. Throws Error(kUnknownLanguage).
  Var project_language(int language) const;

  AttentionWeightSet weight_set_for(int layer, const Var& p, const AttentionWeightSet& static_set) const {
    return model::weight_set_for(bank_, layer, p, static_set);
  }

  const MetaConfig& config() const { return config_; }
  const GeneratorBank& bank() const { return bank_; }
  const Var& language_table() const { return table_; }
  const Var& projection_w() const { return proj_w_; }
  const Var& projection_b() const { return proj_b_; }

 private:
  MetaConfig config_;
  Var table_;
  Var proj_w_;
  Var proj_b_;
  GeneratorBank bank_;
};

}  // namespace metatp::model

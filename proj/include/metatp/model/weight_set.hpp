#pragma once

#include <array>

#include "metatp/model/types.hpp"
#include "metatp/nn/autograd.hpp"

namespace metatp::model {

enum class WeightTag { kStatic, kGenerated };

// The seven d x d projections in force for one attention layer.
struct AttentionWeightSet {
  std::array<nn::Var, kNumSlots> w;
  std::array<WeightTag, kNumSlots> tag{};

  const nn::Var& operator[](Slot s) const { return w[static_cast<std::size_t>(s)]; }
  nn::Var& operator[](Slot s) { return w[static_cast<std::size_t>(s)]; }
  WeightTag tag_of(Slot s) const { return tag[static_cast<std::size_t>(s)]; }
};

}  // namespace metatp::model

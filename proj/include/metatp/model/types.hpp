#pragma once

#include <array>
#include <string>

namespace metatp::model {

enum class Variant { kVanilla, kAbsPos, kRelPos, kTPTrans };
enum class Scheme { kNone, kAlpha, kBeta, kGamma };

// The seven projection slots of one attention layer.
enum class Slot { kQ = 0, kK, kV, kRK, kRV, kAQ, kAK };
inline constexpr int kNumSlots = 7;
inline constexpr std::array<Slot, kNumSlots> kAllSlots = {Slot::kQ,  Slot::kK,  Slot::kV, Slot::kRK,
                                                          Slot::kRV, Slot::kAQ, Slot::kAK};

const char* to_string(Variant v);
const char* to_string(Scheme s);
const char* to_string(Slot s);
// Throw Error(kConfig) on unknown names.
Variant variant_from_string(const std::string& name);
Scheme scheme_from_string(const std::string& name);

// alpha: {Q,K,V}; beta: {rK,rV,aQ,aK}; gamma: all seven.
bool scheme_generates(Scheme scheme, Slot slot);

}  // namespace metatp::model

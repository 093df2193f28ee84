#include "metatp/model/types.hpp"

#include "metatp/common/error.hpp"

namespace metatp::model {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kVanilla: return "vanilla";
    case Variant::kAbsPos: return "abs_pos";
    case Variant::kRelPos: return "rel_pos";
    case Variant::kTPTrans: return "tptrans";
  }
  return "?";
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kNone: return "none";
    case Scheme::kAlpha: return "alpha";
    case Scheme::kBeta: return "beta";
    case Scheme::kGamma: return "gamma";
  }
  return "?";
}

const char* to_string(Slot s) {
  static constexpr const char* kNames[] = {"Q", "K", "V", "rK", "rV", "aQ", "aK"};
  return kNames[static_cast<int>(s)];
}

Variant variant_from_string(const std::string& name) {
  for (auto v : {Variant::kVanilla, Variant::kAbsPos, Variant::kRelPos, Variant::kTPTrans})
    if (name == to_string(v)) return v;
  throw Error(ErrorCode::kConfig, "unknown model.variant '" + name + "'");
}

Scheme scheme_from_string(const std::string& name) {
  for (auto s : {Scheme::kNone, Scheme::kAlpha, Scheme::kBeta, Scheme::kGamma})
    if (name == to_string(s)) return s;
  throw Error(ErrorCode::kConfig, "unknown meta.scheme '" + name + "'");
}

bool scheme_generates(Scheme scheme, Slot slot) {
  const bool token = slot == Slot::kQ || slot == Slot::kK || slot == Slot::kV;
  switch (scheme) {
    case Scheme::kNone: return false;
    case Scheme::kAlpha: return token;
    case Scheme::kBeta: return !token;
    case Scheme::kGamma: return true;
  }
  return false;
}

}  // namespace metatp::model

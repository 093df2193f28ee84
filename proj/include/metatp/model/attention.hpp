#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metatp/common/rng.hpp"
#include "metatp/model/types.hpp"
#include "metatp/model/weight_set.hpp"
#include "metatp/nn/parameters.hpp"

namespace metatp::model {

using nn::Index;
using nn::Matrix;
using nn::Var;

// Learned position terms for the abs_pos and rel_pos variants.
struct PositionTables {
  static constexpr int kMaxRelative = 32;
  static constexpr int kRelativeRows = 2 * kMaxRelative + 1;

  Var p;             // max_positions x d
  Var u_q, u_k;      // d x d
  Var rel_k, rel_v;  // kRelativeRows x d
};

PositionTables make_position_tables(nn::ParameterStore& store, const std::string& prefix, int d, int max_positions,
                                    Rng& rng);

// Row of the relative tables for query i and key j: clip(j - i) + 32.
int relative_index(int i, int j);

// Static projections for one layer, tagged kStatic.
AttentionWeightSet make_static_weight_set(nn::ParameterStore& store, const std::string& prefix, int d, Rng& rng);

// Several sequences packed row-wise into one matrix.
struct PackedLayout {
  std::vector<int> begin;  // first row of each sequence
  std::vector<int> length;
  std::vector<int> group;                  // weight-set index per sequence
  std::vector<std::uint8_t> key_valid;     // per row; empty means all valid
  std::vector<int> rel_paths;              // concatenated length x length r_table rows per sequence
  std::vector<std::int64_t> rel_begin;     // per sequence offset into rel_paths, -1 when absent

  int sequences() const { return static_cast<int>(begin.size()); }
  int rows() const { return begin.empty() ? 0 : begin.back() + length.back(); }
  void add_sequence(int len, int group_id);
};

struct AttentionSources {
  const PositionTables* positions = nullptr;  // abs_pos, rel_pos
  Var r_table;  // tptrans: path encodings, row 0 the empty path
  Var a;        // tptrans: absolute path encoding per row
};

// All variants over a packed batch. `sets` holds one weight set per group;
// a single set serves every group. Throws Error(kAllMasked) and
// Error(kDimensionMismatch).
Var attend_packed(Variant variant, const Var& x, const std::vector<AttentionWeightSet>& sets,
                  const PackedLayout& layout, const AttentionSources& sources, int heads);

// Single-sequence input for the path-biased forms.
struct AttentionInput {
  Var x;                        // n x d
  std::vector<bool> pad_mask;   // true marks padding; empty means none
  Var r_table;                  // rows referenced by rel_ids; row 0 must be zero
  std::vector<int> rel_ids;     // n x n, row-major
  Var a;                        // n x d
};

Var attend_vanilla(const Var& x, const AttentionWeightSet& w, const std::vector<bool>& pad_mask, int heads);
Var attend_abs_pos(const Var& x, const AttentionWeightSet& w, const PositionTables& positions,
                   const std::vector<bool>& pad_mask, int heads);
Var attend_rel_pos(const Var& x, const AttentionWeightSet& w, const PositionTables& positions,
                   const std::vector<bool>& pad_mask, int heads);
Var attend_tptrans(const AttentionInput& input, const AttentionWeightSet& w, int heads);
// Throws Error(kSchemeMismatch) when generated's tags disagree with scheme.
Var attend_meta(const AttentionInput& input, const AttentionWeightSet& static_set, const AttentionWeightSet& generated,
                Scheme scheme, int heads);

}  // namespace metatp::model

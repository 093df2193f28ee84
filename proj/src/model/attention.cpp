#include "metatp/model/attention.hpp"

#include <algorithm>
#include <cmath>

#include "metatp/common/error.hpp"
#include "metatp/nn/fused.hpp"
#include "metatp/nn/ops.hpp"

namespace metatp::model {
namespace {

bool shared_slot(const std::vector<AttentionWeightSet>& sets, Slot s) {
  for (const auto& set : sets)
    if (set[s].ptr() != sets.front()[s].ptr()) return false;
  return true;
}

Var project(const Var& in, const std::vector<AttentionWeightSet>& sets, Slot s, const std::vector<int>& row_group) {
  if (shared_slot(sets, s)) return nn::matmul(in, sets.front()[s]);
  std::vector<Var> ws;
  ws.reserve(sets.size());
  for (const auto& set : sets) ws.push_back(set[s]);
  return nn::grouped_matmul(in, ws, row_group);
}

std::vector<std::uint8_t> valid_from_pad(const std::vector<bool>& pad_mask, Index n) {
  if (pad_mask.empty()) return {};
  if (static_cast<Index>(pad_mask.size()) != n) throw Error(ErrorCode::kDimensionMismatch, "pad mask length");
  std::vector<std::uint8_t> v(pad_mask.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = pad_mask[i] ? 0 : 1;
  return v;
}

PackedLayout single(Index n, const std::vector<bool>& pad_mask) {
  PackedLayout l;
  l.add_sequence(static_cast<int>(n), 0);
  l.key_valid = valid_from_pad(pad_mask, n);
  return l;
}

}  // namespace

void PackedLayout::add_sequence(int len, int group_id) {
  begin.push_back(rows());
  length.push_back(len);
  group.push_back(group_id);
  rel_begin.push_back(-1);
}

PositionTables make_position_tables(nn::ParameterStore& store, const std::string& prefix, int d, int max_positions,
                                    Rng& rng) {
  PositionTables t;
  t.p = store.add(prefix + ".abs.p", nn::normal(max_positions, d, 1.0 / std::sqrt(d), rng));
  t.u_q = store.add(prefix + ".abs.U_Q", nn::xavier_uniform(d, d, rng));
  t.u_k = store.add(prefix + ".abs.U_K", nn::xavier_uniform(d, d, rng));
  t.rel_k = store.add(prefix + ".rel.r_K", nn::normal(PositionTables::kRelativeRows, d, 1.0 / std::sqrt(d), rng));
  t.rel_v = store.add(prefix + ".rel.r_V", nn::normal(PositionTables::kRelativeRows, d, 1.0 / std::sqrt(d), rng));
  return t;
}

int relative_index(int i, int j) {
  return std::clamp(j - i, -PositionTables::kMaxRelative, PositionTables::kMaxRelative) + PositionTables::kMaxRelative;
}

AttentionWeightSet make_static_weight_set(nn::ParameterStore& store, const std::string& prefix, int d, Rng& rng) {
  AttentionWeightSet w;
  for (Slot s : kAllSlots) {
    w[s] = store.add(prefix + ".W_" + to_string(s), nn::xavier_uniform(d, d, rng));
    w.tag[static_cast<std::size_t>(s)] = WeightTag::kStatic;
  }
  return w;
}

Var attend_packed(Variant variant, const Var& x, const std::vector<AttentionWeightSet>& sets,
                  const PackedLayout& layout, const AttentionSources& src, int heads) {
  const Index d = x.cols();
  if (heads < 1 || d % heads != 0) throw Error(ErrorCode::kDimensionMismatch, "heads must divide d");
  if (sets.empty()) throw Error(ErrorCode::kDimensionMismatch, "no weight set");
  if (layout.rows() != x.rows()) throw Error(ErrorCode::kDimensionMismatch, "layout rows differ from input rows");
  for (const auto& set : sets) {
    for (Slot s : kAllSlots) {
      if (set[s] && (set[s].rows() != d || set[s].cols() != d)) {
        throw Error(ErrorCode::kDimensionMismatch, std::string("slot ") + to_string(s) + " is not d x d");
      }
    }
  }
  const double dh = static_cast<double>(d / heads);
  std::vector<int> row_group(static_cast<std::size_t>(x.rows()));
  for (int s = 0; s < layout.sequences(); ++s) {
    const int g = layout.group[static_cast<std::size_t>(s)];
    if (g < 0 || g >= static_cast<int>(sets.size())) throw Error(ErrorCode::kIndex, "weight group out of range");
    std::fill_n(row_group.begin() + layout.begin[static_cast<std::size_t>(s)], layout.length[static_cast<std::size_t>(s)], g);
  }

  nn::AttentionInputs in;
  in.q = project(x, sets, Slot::kQ, row_group);
  in.k = project(x, sets, Slot::kK, row_group);
  in.v = project(x, sets, Slot::kV, row_group);

  kernels::AttentionArgs args;
  args.heads = heads;
  args.content_scale = 1.0 / std::sqrt(dh);
  args.abs_scale = 1.0 / std::sqrt(dh);
  args.key_valid = layout.key_valid;
  for (int s = 0; s < layout.sequences(); ++s) {
    const auto k = static_cast<std::size_t>(s);
    args.segments.push_back({layout.begin[k], layout.length[k], layout.begin[k], layout.length[k], -1});
  }

  switch (variant) {
    case Variant::kVanilla:
      break;
    case Variant::kAbsPos: {
      if (!src.positions) throw Error(ErrorCode::kDimensionMismatch, "abs_pos needs position tables");
      std::vector<int> pos;
      for (int s = 0; s < layout.sequences(); ++s)
        for (int i = 0; i < layout.length[static_cast<std::size_t>(s)]; ++i) pos.push_back(i);
      const Var p = nn::gather_rows(src.positions->p, pos);
      in.aq = nn::matmul(p, src.positions->u_q);
      in.ak = nn::matmul(p, src.positions->u_k);
      args.content_scale = args.abs_scale = 1.0 / std::sqrt(2.0 * dh);
      break;
    }
    case Variant::kRelPos: {
      if (!src.positions) throw Error(ErrorCode::kDimensionMismatch, "rel_pos needs position tables");
      in.rk = src.positions->rel_k;
      in.rv = src.positions->rel_v;
      for (int s = 0; s < layout.sequences(); ++s) {
        const int n = layout.length[static_cast<std::size_t>(s)];
        args.segments[static_cast<std::size_t>(s)].rel_begin = static_cast<std::int64_t>(args.rel_ids.size());
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) args.rel_ids.push_back(relative_index(i, j));
      }
      break;
    }
    case Variant::kTPTrans: {
      if (src.r_table) {
        if (src.r_table.cols() != d) throw Error(ErrorCode::kDimensionMismatch, "path encodings must have width d");
        const Index u = src.r_table.rows();
        const bool grouped = !shared_slot(sets, Slot::kRK) || !shared_slot(sets, Slot::kRV);
        if (grouped) {
          std::vector<Var> rk, rv;
          for (const auto& set : sets) {
            rk.push_back(nn::matmul(src.r_table, set[Slot::kRK]));
            rv.push_back(nn::matmul(src.r_table, set[Slot::kRV]));
          }
          in.rk = nn::concat_rows(rk);
          in.rv = nn::concat_rows(rv);
        } else {
          in.rk = nn::matmul(src.r_table, sets.front()[Slot::kRK]);
          in.rv = nn::matmul(src.r_table, sets.front()[Slot::kRV]);
        }
        for (int s = 0; s < layout.sequences(); ++s) {
          const auto k = static_cast<std::size_t>(s);
          if (layout.rel_begin[k] < 0) continue;
          const int n = layout.length[k];
          const Index offset = grouped ? layout.group[k] * u : 0;
          args.segments[k].rel_begin = static_cast<std::int64_t>(args.rel_ids.size());
          for (std::int64_t p = 0; p < static_cast<std::int64_t>(n) * n; ++p) {
            const int id = layout.rel_paths[static_cast<std::size_t>(layout.rel_begin[k] + p)];
            if (id < 0 || id >= u) throw Error(ErrorCode::kIndex, "relative path row out of range");
            args.rel_ids.push_back(id == 0 ? -1 : static_cast<int>(id + offset));
          }
        }
      }
      if (src.a) {
        if (src.a.rows() != x.rows() || src.a.cols() != d) {
          throw Error(ErrorCode::kDimensionMismatch, "absolute path encodings must be rows x d");
        }
        in.aq = project(src.a, sets, Slot::kAQ, row_group);
        in.ak = project(src.a, sets, Slot::kAK, row_group);
      }
      break;
    }
  }
  return nn::fused_attention(in, std::move(args)).z;
}

Var attend_vanilla(const Var& x, const AttentionWeightSet& w, const std::vector<bool>& pad_mask, int heads) {
  return attend_packed(Variant::kVanilla, x, {w}, single(x.rows(), pad_mask), {}, heads);
}

Var attend_abs_pos(const Var& x, const AttentionWeightSet& w, const PositionTables& positions,
                   const std::vector<bool>& pad_mask, int heads) {
  AttentionSources src;
  src.positions = &positions;
  return attend_packed(Variant::kAbsPos, x, {w}, single(x.rows(), pad_mask), src, heads);
}

Var attend_rel_pos(const Var& x, const AttentionWeightSet& w, const PositionTables& positions,
                   const std::vector<bool>& pad_mask, int heads) {
  AttentionSources src;
  src.positions = &positions;
  return attend_packed(Variant::kRelPos, x, {w}, single(x.rows(), pad_mask), src, heads);
}

Var attend_tptrans(const AttentionInput& input, const AttentionWeightSet& w, int heads) {
  const Index n = input.x.rows();
  PackedLayout layout = single(n, input.pad_mask);
  AttentionSources src;
  if (input.r_table) {
    if (static_cast<Index>(input.rel_ids.size()) != n * n) {
      throw Error(ErrorCode::kDimensionMismatch, "rel_ids must have n*n entries");
    }
    layout.rel_paths = input.rel_ids;
    layout.rel_begin[0] = 0;
    src.r_table = input.r_table;
  }
  src.a = input.a;
  return attend_packed(Variant::kTPTrans, input.x, {w}, layout, src, heads);
}

Var attend_meta(const AttentionInput& input, const AttentionWeightSet& static_set, const AttentionWeightSet& generated,
                Scheme scheme, int heads) {
  AttentionWeightSet effective = static_set;
  for (Slot s : kAllSlots) {
    const bool expect = scheme_generates(scheme, s);
    const bool got = generated.tag_of(s) == WeightTag::kGenerated;
    if (expect != got) {
      throw Error(ErrorCode::kSchemeMismatch, std::string("slot ") + to_string(s) + (got ? " is" : " is not") +
                                                  " generated under scheme " + to_string(scheme));
    }
    if (got) {
      effective[s] = generated[s];
      effective.tag[static_cast<std::size_t>(s)] = WeightTag::kGenerated;
    }
  }
  return attend_tptrans(input, effective, heads);
}

}  // namespace metatp::model

#include "metatp/model/batch.hpp"

#include <map>
#include <unordered_map>

#include "metatp/common/error.hpp"
#include "metatp/corpus/vocabulary.hpp"

namespace metatp::model {

Batch make_batch(std::span<const corpus::CodeSample* const> samples, const corpus::PathTable& table,
                 const BatchOptions& options) {
  Batch b;
  b.samples.assign(samples.begin(), samples.end());
  std::map<int, int> group_of;
  if (options.group_by_language) {
    for (const auto* s : samples) group_of.emplace(s->language, 0);
    int g = 0;
    for (auto& [lang, group] : group_of) {
      group = g++;
      b.group_language.push_back(lang);
    }
  }

  std::unordered_map<int, int> rel_local{{0, 0}};
  std::unordered_map<int, int> abs_local;
  if (options.paths) b.rel_path_list.emplace_back();
  auto local = [&table](std::unordered_map<int, int>& index, std::vector<std::vector<int>>& list, int id) {
    const auto [it, inserted] = index.emplace(id, static_cast<int>(list.size()));
    if (inserted) list.push_back(table.entry(id));
    return it->second;
  };

  for (const auto* s : samples) {
    const int n = s->length();
    if (n == 0) throw Error(ErrorCode::kTooShort, "empty sample " + s->id);
    const int row0 = b.layout.rows();
    b.layout.add_sequence(n, options.group_by_language ? group_of.at(s->language) : 0);
    for (int i = 0; i < n; ++i) {
      b.tokens.push_back(s->subtokens[static_cast<std::size_t>(i)]);
      b.positions.push_back(i);
    }
    if (options.paths) {
      const int m = s->num_leaves();
      std::vector<int> slot_rows(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
      for (std::size_t k = 0; k < slot_rows.size(); ++k) slot_rows[k] = local(rel_local, b.rel_path_list, s->rel_paths[k]);
      b.layout.rel_begin.back() = static_cast<std::int64_t>(b.layout.rel_paths.size());
      for (int i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(s->leaf_of[static_cast<std::size_t>(i)]) * static_cast<std::size_t>(m);
        for (int j = 0; j < n; ++j) b.layout.rel_paths.push_back(slot_rows[si + static_cast<std::size_t>(s->leaf_of[static_cast<std::size_t>(j)])]);
        b.abs_rows.push_back(local(abs_local, b.abs_path_list, s->abs_path(i)));
      }
    }
    if (const auto* c = std::get_if<corpus::CompletionTarget>(&s->target)) {
      b.mask_rows.push_back(row0 + c->mask_position);
      b.answers.push_back(c->answer_id);
    } else {
      const auto& t = std::get<corpus::SummaryTarget>(s->target).subtokens;
      if (t.empty()) throw Error(ErrorCode::kNoName, "empty summary target in " + s->id);
      b.target_layout.add_sequence(static_cast<int>(t.size()), b.layout.group.back());
      b.decoder_inputs.push_back(corpus::special::kBos);
      b.decoder_inputs.insert(b.decoder_inputs.end(), t.begin(), t.end() - 1);
      b.targets.insert(b.targets.end(), t.begin(), t.end());
      b.max_source = std::max(b.max_source, n);
    }
  }
  if (!b.targets.empty()) {
    b.copy_ids.assign(b.targets.size() * static_cast<std::size_t>(b.max_source), -1);
    for (int s = 0; s < b.target_layout.sequences(); ++s) {
      const auto* sample = b.samples[static_cast<std::size_t>(s)];
      for (int t = 0; t < b.target_layout.length[static_cast<std::size_t>(s)]; ++t) {
        const auto row = static_cast<std::size_t>(b.target_layout.begin[static_cast<std::size_t>(s)] + t);
        for (int i = 0; i < sample->length(); ++i) {
          b.copy_ids[row * static_cast<std::size_t>(b.max_source) + static_cast<std::size_t>(i)] =
              sample->subtokens[static_cast<std::size_t>(i)];
        }
      }
    }
  }
  return b;
}

}  // namespace metatp::model

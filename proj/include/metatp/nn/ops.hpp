#pragma once

#include <vector>

#include "metatp/common/rng.hpp"
#include "metatp/nn/autograd.hpp"

namespace metatp::nn {

Var matmul(const Var& a, const Var& b);
// x·w + b with w stored in×out and b a 1×out row.
Var linear(const Var& x, const Var& w, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// Adds a 1×c row to every row of a.
Var add_row(const Var& a, const Var& row);
// Multiplies row r of a by c(r, 0).
Var mul_col(const Var& a, const Var& c);
// Multiplies row k of m by p(k) where p is 1×k or k×1.
Var scale_rows(const Var& m, const Var& p);
Var one_minus(const Var& a);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var softmax_rows(const Var& a);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// Rows of `table` selected by ids; id < 0 yields a zero row. Rows equal to
// `frozen_row` never receive gradient.
Var gather_rows(const Var& table, const std::vector<int>& ids, int frozen_row = -1);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Index begin, Index count);
Var slice_cols(const Var& a, Index begin, Index count);

// Inverted dropout. Identity when p == 0 or !training.
Var dropout(const Var& a, double p, Rng& rng, bool training);

// Row r of the result is x.row(r) · weights[group[r]].
Var grouped_matmul(const Var& x, const std::vector<Var>& weights, const std::vector<int>& group);

Var sum(const Var& a);
Var mean(const Var& a);

// Mean cross-entropy of softmax(logits) over rows with target >= 0.
Var cross_entropy(const Var& logits, const std::vector<int>& targets);
// Mean -log(max(p, floor)) over rows with target >= 0.
Var nll_of_probs(const Var& probs, const std::vector<int>& targets, double floor = 1e-12);

// out(t, ids(t, i)) += c(t, i) for ids >= 0; out is rows(c) × width.
Var scatter_columns(const Var& c, const std::vector<int>& ids, Index width);

}  // namespace metatp::nn

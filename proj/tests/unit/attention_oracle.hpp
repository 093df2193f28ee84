#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "metatp/model/attention.hpp"
#include "test_util.hpp"

namespace metatp::testing {

using model::AttentionInput;
using model::AttentionWeightSet;
using model::kAllSlots;
using model::Slot;
using nn::Index;

inline AttentionWeightSet random_set(int d, Rng& rng, double scale = 1.0) {
  AttentionWeightSet w;
  for (Slot s : kAllSlots) w[s] = nn::parameter(random_matrix(d, d, rng, scale));
  return w;
}

// Direct triple loop over the path-biased score and value formulas.
inline Matrix naive_tptrans(const Matrix& x, const AttentionWeightSet& w, const Matrix& r_table, const std::vector<int>& rel_ids,
                     const Matrix& a, const std::vector<bool>& pad, int heads) {
  const Index n = x.rows(), d = x.cols(), dh = d / heads;
  const auto proj = [&](const Matrix& in, Slot s) {
    Matrix out = Matrix::Zero(in.rows(), d);
    for (Index i = 0; i < in.rows(); ++i)
      for (Index c = 0; c < d; ++c)
        for (Index k = 0; k < d; ++k) out(i, c) += in(i, k) * w[s].value()(k, c);
    return out;
  };
  const Matrix q = proj(x, Slot::kQ), k = proj(x, Slot::kK), v = proj(x, Slot::kV);
  const Matrix rk = proj(r_table, Slot::kRK), rv = proj(r_table, Slot::kRV);
  const Matrix aq = proj(a, Slot::kAQ), ak = proj(a, Slot::kAK);
  Matrix z = Matrix::Zero(n, d);
  for (int h = 0; h < heads; ++h) {
    for (Index i = 0; i < n; ++i) {
      std::vector<double> s(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
      for (Index j = 0; j < n; ++j) {
        if (!pad.empty() && pad[static_cast<std::size_t>(j)]) continue;
        const int id = rel_ids[static_cast<std::size_t>(i * n + j)];
        double content = 0.0, absolute = 0.0;
        for (Index c = h * dh; c < (h + 1) * dh; ++c) {
          content += q(i, c) * (k(j, c) + rk(id, c));
          absolute += aq(i, c) * ak(j, c);
        }
        s[static_cast<std::size_t>(j)] = content / std::sqrt(static_cast<double>(dh)) + absolute / std::sqrt(static_cast<double>(dh));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double total = 0.0;
      for (auto& e : s) total += (e = std::exp(e - mx));
      for (Index j = 0; j < n; ++j) {
        const double p = s[static_cast<std::size_t>(j)] / total;
        const int id = rel_ids[static_cast<std::size_t>(i * n + j)];
        for (Index c = h * dh; c < (h + 1) * dh; ++c) z(i, c) += p * (v(j, c) + rv(id, c));
      }
    }
  }
  return z;
}

struct TPFixture {
  AttentionInput input;
  AttentionWeightSet w;
};

inline TPFixture random_tp(int n, int d, Rng& rng, int table_rows = 5) {
  TPFixture f;
  f.w = random_set(d, rng);
  f.input.x = nn::parameter(random_matrix(n, d, rng));
  Matrix r = random_matrix(table_rows, d, rng);
  r.row(0).setZero();
  f.input.r_table = nn::parameter(r);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      f.input.rel_ids.push_back(i == j ? 0 : 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(table_rows - 1))));
  f.input.a = nn::parameter(random_matrix(n, d, rng));
  return f;
}

}  // namespace metatp::testing

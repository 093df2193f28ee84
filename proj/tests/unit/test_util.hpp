#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "metatp/common/rng.hpp"
#include "metatp/nn/autograd.hpp"
#include "metatp/nn/ops.hpp"
#include "metatp/nn/parameters.hpp"

namespace metatp::testing {

using nn::Matrix;
using nn::Var;

inline Matrix random_matrix(nn::Index rows, nn::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * uniform_unit(rng) - 1.0);
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||) over every
// parameter, with central differences of step h.
struct GradCheck {
  double worst = 0.0;
  double worst_abs = 0.0;
};

inline GradCheck grad_check(const std::vector<Var>& params, const std::function<Var()>& loss, double h = 1e-6) {
  for (const auto& p : params) p.node().grad.resize(0, 0);
  nn::backward(loss());
  GradCheck out;
  for (const auto& p : params) {
    const Matrix analytic = p.node().has_grad() ? p.grad() : Matrix::Zero(p.rows(), p.cols());
    Matrix numeric(p.rows(), p.cols());
    Matrix& value = p.node().value;
    for (nn::Index i = 0; i < value.size(); ++i) {
      const double keep = value.data()[i];
      double plus, minus;
      {
        nn::NoGradGuard g;
        value.data()[i] = keep + h;
        plus = loss().scalar();
        value.data()[i] = keep - h;
        minus = loss().scalar();
      }
      value.data()[i] = keep;
      numeric.data()[i] = (plus - minus) / (2.0 * h);
    }
    const double denom = std::max(analytic.norm(), numeric.norm());
    const double diff = (analytic - numeric).norm();
    out.worst_abs = std::max(out.worst_abs, diff);
    if (denom > 1e-9) out.worst = std::max(out.worst, diff / denom);
  }
  return out;
}

// Fixed random projection so gradients reach every output element.
inline Var weighted_sum(const Var& x, std::uint64_t seed) {
  Rng rng(seed);
  const Var w = nn::constant(random_matrix(x.rows(), x.cols(), rng));
  return nn::sum(nn::mul(x, w));
}

}  // namespace metatp::testing

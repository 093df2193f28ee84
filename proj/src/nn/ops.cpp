#include "metatp/nn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "metatp/common/error.hpp"

namespace metatp::nn {
namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                                                   std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                                                   "x" + std::to_string(b.cols()));
  }
}

bool wants(const Node& n, std::size_t i) { return n.inputs[i]->requires_grad; }
Node& in(const Node& n, std::size_t i) { return *n.inputs[i]; }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "matmul: inner dims " + std::to_string(a.cols()) + " vs " +
                                                   std::to_string(b.rows()));
  }
  Matrix out = a.value() * b.value();
  return make_op(std::move(out), {a, b}, [](Node& n) {
    if (wants(n, 0)) in(n, 0).grad_buffer().noalias() += n.grad * in(n, 1).value.transpose();
    if (wants(n, 1)) in(n, 1).grad_buffer().noalias() += in(n, 0).value.transpose() * n.grad;
  });
}

Var linear(const Var& x, const Var& w, const Var& b) { return add_row(matmul(x, w), b); }

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, [](Node& n) {
    if (wants(n, 0)) in(n, 0).accumulate(n.grad);
    if (wants(n, 1)) in(n, 1).accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_op(a.value() - b.value(), {a, b}, [](Node& n) {
    if (wants(n, 0)) in(n, 0).accumulate(n.grad);
    if (wants(n, 1)) in(n, 1).accumulate(-n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    if (wants(n, 0)) in(n, 0).accumulate(n.grad.cwiseProduct(in(n, 1).value));
    if (wants(n, 1)) in(n, 1).accumulate(n.grad.cwiseProduct(in(n, 0).value));
  });
}

Var scale(const Var& a, double s) {
  return make_op(a.value() * s, {a}, [s](Node& n) { in(n, 0).accumulate(n.grad * s); });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error(ErrorCode::kDimensionMismatch, "add_row: bad bias shape");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(out), {a, row}, [](Node& n) {
    if (wants(n, 0)) in(n, 0).accumulate(n.grad);
    if (wants(n, 1)) in(n, 1).accumulate(n.grad.colwise().sum());
  });
}

Var mul_col(const Var& a, const Var& c) {
  if (c.cols() != 1 || c.rows() != a.rows()) throw Error(ErrorCode::kDimensionMismatch, "mul_col: bad column shape");
  Matrix out = a.value().array().colwise() * c.value().col(0).array();
  return make_op(std::move(out), {a, c}, [](Node& n) {
    if (wants(n, 0)) {
      Matrix g = n.grad.array().colwise() * in(n, 1).value.col(0).array();
      in(n, 0).accumulate(g);
    }
    if (wants(n, 1)) in(n, 1).accumulate(n.grad.cwiseProduct(in(n, 0).value).rowwise().sum());
  });
}

Var scale_rows(const Var& m, const Var& p) {
  const Index k = p.value().size();
  if ((p.rows() != 1 && p.cols() != 1) || k != m.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "scale_rows: expected " + std::to_string(m.rows()) + " scales, got " +
                                                   std::to_string(k));
  }
  const Eigen::Map<const Eigen::VectorXd> pv(p.value().data(), k);
  Matrix out = pv.asDiagonal() * m.value();
  return make_op(std::move(out), {m, p}, [](Node& n) {
    const auto& pm = in(n, 1).value;
    const Eigen::Map<const Eigen::VectorXd> pv(pm.data(), pm.size());
    if (wants(n, 0)) in(n, 0).accumulate(pv.asDiagonal() * n.grad);
    if (wants(n, 1)) {
      const Eigen::VectorXd g = n.grad.cwiseProduct(in(n, 0).value).rowwise().sum();
      in(n, 1).accumulate(Eigen::Map<const Matrix>(g.data(), pm.rows(), pm.cols()));
    }
  });
}

Var one_minus(const Var& a) {
  return make_op((1.0 - a.value().array()).matrix(), {a}, [](Node& n) { in(n, 0).accumulate(-n.grad); });
}

Var relu(const Var& a) {
  return make_op(a.value().cwiseMax(0.0), {a}, [](Node& n) {
    in(n, 0).accumulate((in(n, 0).value.array() > 0.0).select(n.grad, 0.0));
  });
}

Var sigmoid(const Var& a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make_op(std::move(out), {a}, [](Node& n) {
    in(n, 0).accumulate((n.grad.array() * n.value.array() * (1.0 - n.value.array())).matrix());
  });
}

Var tanh(const Var& a) {
  return make_op(a.value().array().tanh().matrix(), {a}, [](Node& n) {
    in(n, 0).accumulate((n.grad.array() * (1.0 - n.value.array().square())).matrix());
  });
}

Var softmax_rows(const Var& a) {
  Matrix out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return make_op(std::move(out), {a}, [](Node& n) {
    const Matrix& y = n.value;
    Matrix g(y.rows(), y.cols());
    for (Index r = 0; r < y.rows(); ++r) {
      const double dot = n.grad.row(r).dot(y.row(r));
      g.row(r) = y.row(r).cwiseProduct((n.grad.row(r).array() - dot).matrix());
    }
    in(n, 0).accumulate(g);
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Index rows = x.rows();
  const Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "layer_norm: affine shape");
  }
  Matrix xhat(rows, d);
  Eigen::VectorXd inv_std(rows);
  for (Index r = 0; r < rows; ++r) {
    const double mu = x.value().row(r).mean();
    const auto centered = x.value().row(r).array() - mu;
    const double var = centered.square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (centered * inv_std(r)).matrix();
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  return make_op(std::move(out), {x, gamma, beta}, [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& n) {
    const Matrix& g = n.grad;
    if (wants(n, 1)) in(n, 1).accumulate(g.cwiseProduct(xhat).colwise().sum());
    if (wants(n, 2)) in(n, 2).accumulate(g.colwise().sum());
    if (wants(n, 0)) {
      const auto& gm = in(n, 1).value;
      const double inv_d = 1.0 / static_cast<double>(xhat.cols());
      Matrix dx(xhat.rows(), xhat.cols());
      for (Index r = 0; r < xhat.rows(); ++r) {
        const Eigen::RowVectorXd gh = g.row(r).cwiseProduct(gm.row(0));
        const double m1 = gh.sum() * inv_d;
        const double m2 = gh.dot(xhat.row(r)) * inv_d;
        dx.row(r) = inv_std(r) * (gh.array() - m1 - xhat.row(r).array() * m2).matrix();
      }
      in(n, 0).accumulate(dx);
    }
  });
}

Var gather_rows(const Var& table, const std::vector<int>& ids, int frozen_row) {
  const Index cols = table.cols();
  Matrix out(static_cast<Index>(ids.size()), cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id >= table.rows()) throw Error(ErrorCode::kIndex, "gather_rows: id " + std::to_string(id) + " out of range");
    if (id < 0) {
      out.row(static_cast<Index>(i)).setZero();
    } else {
      out.row(static_cast<Index>(i)) = table.value().row(id);
    }
  }
  return make_op(std::move(out), {table}, [ids, frozen_row](Node& n) {
    Matrix& g = in(n, 0).grad_buffer();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int id = ids[i];
      if (id < 0 || id == frozen_row) continue;
      g.row(id) += n.grad.row(static_cast<Index>(i));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  Index rows = 0;
  const Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw Error(ErrorCode::kDimensionMismatch, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make_op(std::move(out), parts, [](Node& n) {
    Index at = 0;
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      const Index r = n.inputs[i]->value.rows();
      if (wants(n, i)) in(n, i).accumulate(n.grad.middleRows(at, r));
      at += r;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  Index cols = 0;
  const Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error(ErrorCode::kDimensionMismatch, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make_op(std::move(out), parts, [](Node& n) {
    Index at = 0;
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      const Index c = n.inputs[i]->value.cols();
      if (wants(n, i)) in(n, i).accumulate(n.grad.middleCols(at, c));
      at += c;
    }
  });
}

Var slice_rows(const Var& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) throw Error(ErrorCode::kIndex, "slice_rows out of range");
  return make_op(a.value().middleRows(begin, count), {a}, [begin, count](Node& n) {
    in(n, 0).grad_buffer().middleRows(begin, count) += n.grad;
  });
}

Var slice_cols(const Var& a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) throw Error(ErrorCode::kIndex, "slice_cols out of range");
  return make_op(a.value().middleCols(begin, count), {a}, [begin, count](Node& n) {
    in(n, 0).grad_buffer().middleCols(begin, count) += n.grad;
  });
}

Var dropout(const Var& a, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return a;
  const double keep = 1.0 - p;
  Matrix mask(a.rows(), a.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform_unit(rng) < keep ? 1.0 / keep : 0.0;
  Matrix out = a.value().cwiseProduct(mask);
  return make_op(std::move(out), {a}, [mask = std::move(mask)](Node& n) { in(n, 0).accumulate(n.grad.cwiseProduct(mask)); });
}

Var grouped_matmul(const Var& x, const std::vector<Var>& weights, const std::vector<int>& group) {
  if (static_cast<Index>(group.size()) != x.rows()) throw Error(ErrorCode::kDimensionMismatch, "grouped_matmul: group size");
  if (weights.empty()) throw std::invalid_argument("grouped_matmul: no weights");
  const Index out_cols = weights.front().cols();
  for (const auto& w : weights) {
    if (w.rows() != x.cols() || w.cols() != out_cols) throw Error(ErrorCode::kDimensionMismatch, "grouped_matmul: weight shape");
  }
  // rows of each group, in order
  std::vector<std::vector<Index>> members(weights.size());
  for (std::size_t r = 0; r < group.size(); ++r) {
    const int g = group[r];
    if (g < 0 || static_cast<std::size_t>(g) >= weights.size()) throw Error(ErrorCode::kIndex, "grouped_matmul: bad group");
    members[static_cast<std::size_t>(g)].push_back(static_cast<Index>(r));
  }
  Matrix out(x.rows(), out_cols);
  for (std::size_t g = 0; g < members.size(); ++g) {
    if (members[g].empty()) continue;
    const Matrix xg = x.value()(members[g], Eigen::all);
    out(members[g], Eigen::all) = xg * weights[g].value();
  }
  std::vector<Var> inputs{x};
  inputs.insert(inputs.end(), weights.begin(), weights.end());
  return make_op(std::move(out), std::move(inputs), [members = std::move(members)](Node& n) {
    const Matrix& xv = in(n, 0).value;
    for (std::size_t g = 0; g < members.size(); ++g) {
      if (members[g].empty()) continue;
      const Matrix gy = n.grad(members[g], Eigen::all);
      if (wants(n, 0)) {
        Matrix& gx = in(n, 0).grad_buffer();
        gx(members[g], Eigen::all) += gy * in(n, g + 1).value.transpose();
      }
      if (wants(n, g + 1)) {
        const Matrix xg = xv(members[g], Eigen::all);
        in(n, g + 1).grad_buffer().noalias() += xg.transpose() * gy;
      }
    }
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_op(std::move(out), {a}, [](Node& n) {
    auto& v = in(n, 0);
    v.accumulate(Matrix::Constant(v.value.rows(), v.value.cols(), n.grad(0, 0)));
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var cross_entropy(const Var& logits, const std::vector<int>& targets) {
  if (static_cast<Index>(targets.size()) != logits.rows()) throw Error(ErrorCode::kDimensionMismatch, "cross_entropy: targets");
  Matrix probs = logits.value();
  double total = 0.0;
  int count = 0;
  for (Index r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp().matrix();
    const double z = row.sum();
    row /= z;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    if (t >= probs.cols()) throw Error(ErrorCode::kIndex, "cross_entropy: target out of range");
    total += -(logits.value()(r, t) - mx - std::log(z));
    ++count;
  }
  Matrix out(1, 1);
  out(0, 0) = count > 0 ? total / count : 0.0;
  return make_op(std::move(out), {logits}, [probs = std::move(probs), targets, count](Node& n) {
    if (count == 0) return;
    const double s = n.grad(0, 0) / count;
    Matrix g = Matrix::Zero(probs.rows(), probs.cols());
    for (Index r = 0; r < probs.rows(); ++r) {
      const int t = targets[static_cast<std::size_t>(r)];
      if (t < 0) continue;
      g.row(r) = probs.row(r) * s;
      g(r, t) -= s;
    }
    in(n, 0).accumulate(g);
  });
}

Var nll_of_probs(const Var& probs, const std::vector<int>& targets, double floor) {
  if (static_cast<Index>(targets.size()) != probs.rows()) throw Error(ErrorCode::kDimensionMismatch, "nll_of_probs: targets");
  double total = 0.0;
  int count = 0;
  for (Index r = 0; r < probs.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    if (t >= probs.cols()) throw Error(ErrorCode::kIndex, "nll_of_probs: target out of range");
    total -= std::log(std::max(probs.value()(r, t), floor));
    ++count;
  }
  Matrix out(1, 1);
  out(0, 0) = count > 0 ? total / count : 0.0;
  return make_op(std::move(out), {probs}, [targets, count, floor](Node& n) {
    if (count == 0) return;
    const double s = n.grad(0, 0) / count;
    const Matrix& p = in(n, 0).value;
    Matrix& g = in(n, 0).grad_buffer();
    for (Index r = 0; r < p.rows(); ++r) {
      const int t = targets[static_cast<std::size_t>(r)];
      if (t < 0 || p(r, t) < floor) continue;
      g(r, t) -= s / p(r, t);
    }
  });
}

Var scatter_columns(const Var& c, const std::vector<int>& ids, Index width) {
  if (static_cast<Index>(ids.size()) != c.value().size()) throw Error(ErrorCode::kDimensionMismatch, "scatter_columns: ids");
  Matrix out = Matrix::Zero(c.rows(), width);
  for (Index t = 0; t < c.rows(); ++t) {
    for (Index i = 0; i < c.cols(); ++i) {
      const int id = ids[static_cast<std::size_t>(t * c.cols() + i)];
      if (id < 0) continue;
      if (id >= width) throw Error(ErrorCode::kIndex, "scatter_columns: id out of range");
      out(t, id) += c.value()(t, i);
    }
  }
  return make_op(std::move(out), {c}, [ids](Node& n) {
    Matrix& g = in(n, 0).grad_buffer();
    for (Index t = 0; t < g.rows(); ++t) {
      for (Index i = 0; i < g.cols(); ++i) {
        const int id = ids[static_cast<std::size_t>(t * g.cols() + i)];
        if (id >= 0) g(t, i) += n.grad(t, id);
      }
    }
  });
}

}  // namespace metatp::nn

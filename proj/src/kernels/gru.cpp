#include "metatp/kernels/gru.hpp"

#include <algorithm>
#include <numeric>

#include "metatp/common/error.hpp"

namespace metatp::kernels {
namespace {

using Row = Eigen::RowVectorXd;

Index hidden_size(const GruWeights& w) { return w.w_hh->rows(); }

void check(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w) {
  const Index h = hidden_size(w);
  if (w.w_ih->rows() != embed.cols() || w.w_ih->cols() != 3 * h || w.w_hh->cols() != 3 * h ||
      w.b_ih->cols() != 3 * h || w.b_hh->cols() != 3 * h) {
    throw Error(ErrorCode::kDimensionMismatch, "gru: weight shapes");
  }
  for (const auto& s : seqs)
    for (int id : s)
      if (id < 0 || id >= embed.rows()) throw Error(ErrorCode::kIndex, "gru: embedding id out of range");
}

int input_at(const std::vector<int>& seq, std::size_t t, bool reverse) {
  return seq[reverse ? seq.size() - 1 - t : t];
}

Row sigmoid(const Row& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }
Matrix sigmoid(const Matrix& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }

struct SerialStep {
  Row h_prev, r, z, n, hn;
  int x;
};

std::vector<SerialStep> run_serial(const Matrix& embed, const std::vector<int>& seq, const GruWeights& w, bool reverse,
                                   Row& h) {
  const Index hs = hidden_size(w);
  h = Row::Zero(hs);
  std::vector<SerialStep> steps;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    SerialStep st;
    st.x = input_at(seq, t, reverse);
    st.h_prev = h;
    const Row gi = embed.row(st.x) * *w.w_ih + w.b_ih->row(0);
    const Row gh = h * *w.w_hh + w.b_hh->row(0);
    st.r = sigmoid(Row(gi.segment(0, hs) + gh.segment(0, hs)));
    st.z = sigmoid(Row(gi.segment(hs, hs) + gh.segment(hs, hs)));
    st.hn = gh.segment(2 * hs, hs);
    st.n = (gi.segment(2 * hs, hs) + st.r.cwiseProduct(st.hn)).array().tanh().matrix();
    h = (1.0 - st.z.array()).matrix().cwiseProduct(st.n) + st.z.cwiseProduct(h);
    steps.push_back(std::move(st));
  }
  return steps;
}

GruGrads zero_grads(const Matrix& embed, const GruWeights& w) {
  GruGrads g;
  g.w_ih = Matrix::Zero(w.w_ih->rows(), w.w_ih->cols());
  g.w_hh = Matrix::Zero(w.w_hh->rows(), w.w_hh->cols());
  g.b_ih = Matrix::Zero(1, w.b_ih->cols());
  g.b_hh = Matrix::Zero(1, w.b_hh->cols());
  g.embed = Matrix::Zero(embed.rows(), embed.cols());
  return g;
}

std::vector<std::vector<int>> make_blocks(const std::vector<std::vector<int>>& seqs) {
  std::vector<int> order;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    if (!seqs[i].empty()) order.push_back(static_cast<int>(i));
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return seqs[static_cast<std::size_t>(a)].size() > seqs[static_cast<std::size_t>(b)].size(); });
  std::vector<std::vector<int>> blocks;
  for (std::size_t i = 0; i < order.size(); i += kGruBlock) {
    blocks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                        order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + kGruBlock)));
  }
  return blocks;
}

// Rows active at step t are a prefix of the length-sorted block.
Index active_rows(const std::vector<std::vector<int>>& seqs, const std::vector<int>& order, std::size_t t) {
  Index a = 0;
  while (a < static_cast<Index>(order.size()) && seqs[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])].size() > t) ++a;
  return a;
}

void forward_block(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w, bool reverse,
                   GruBlock& block, Matrix& h_final) {
  const Index hs = hidden_size(w);
  const auto& order = block.order;
  const std::size_t steps = seqs[static_cast<std::size_t>(order.front())].size();
  Matrix h = Matrix::Zero(static_cast<Index>(order.size()), hs);
  block.steps.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Index a = active_rows(seqs, order, t);
    Matrix x(a, embed.cols());
    for (Index i = 0; i < a; ++i) x.row(i) = embed.row(input_at(seqs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])], t, reverse));
    GruStep& st = block.steps[t];
    st.h_prev = h.topRows(a);
    const Matrix gi = (x * *w.w_ih).rowwise() + w.b_ih->row(0);
    const Matrix gh = (st.h_prev * *w.w_hh).rowwise() + w.b_hh->row(0);
    st.r = sigmoid(Matrix(gi.leftCols(hs) + gh.leftCols(hs)));
    st.z = sigmoid(Matrix(gi.middleCols(hs, hs) + gh.middleCols(hs, hs)));
    st.hn = gh.rightCols(hs);
    st.n = (gi.rightCols(hs) + st.r.cwiseProduct(st.hn)).array().tanh().matrix();
    h.topRows(a) = (1.0 - st.z.array()).matrix().cwiseProduct(st.n) + st.z.cwiseProduct(st.h_prev);
  }
  for (std::size_t i = 0; i < order.size(); ++i) h_final.row(order[i]) = h.row(static_cast<Index>(i));
}

void backward_block(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w, bool reverse,
                    const GruBlock& block, const Matrix& dh_final, GruGrads& g) {
  const Index hs = hidden_size(w);
  const auto& order = block.order;
  Matrix dh(static_cast<Index>(order.size()), hs);
  for (std::size_t i = 0; i < order.size(); ++i) dh.row(static_cast<Index>(i)) = dh_final.row(order[i]);
  for (std::size_t t = block.steps.size(); t-- > 0;) {
    const GruStep& st = block.steps[t];
    const Index a = st.h_prev.rows();
    const Matrix dht = dh.topRows(a);
    const Matrix dn = dht.cwiseProduct((1.0 - st.z.array()).matrix());
    const Matrix dz = dht.cwiseProduct(st.h_prev - st.n);
    const Matrix da_n = dn.cwiseProduct((1.0 - st.n.array().square()).matrix());
    const Matrix da_r = da_n.cwiseProduct(st.hn).cwiseProduct((st.r.array() * (1.0 - st.r.array())).matrix());
    const Matrix da_z = dz.cwiseProduct((st.z.array() * (1.0 - st.z.array())).matrix());
    Matrix dgi(a, 3 * hs);
    dgi << da_r, da_z, da_n;
    Matrix dgh(a, 3 * hs);
    dgh << da_r, da_z, da_n.cwiseProduct(st.r);

    Matrix x(a, embed.cols());
    for (Index i = 0; i < a; ++i) x.row(i) = embed.row(input_at(seqs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])], t, reverse));
    g.w_ih.noalias() += x.transpose() * dgi;
    g.b_ih += dgi.colwise().sum();
    g.w_hh.noalias() += st.h_prev.transpose() * dgh;
    g.b_hh += dgh.colwise().sum();
    const Matrix dx = dgi * w.w_ih->transpose();
    for (Index i = 0; i < a; ++i) {
      g.embed.row(input_at(seqs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])], t, reverse)) += dx.row(i);
    }
    dh.topRows(a) = dht.cwiseProduct(st.z) + dgh * w.w_hh->transpose();
  }
}

}  // namespace

GruForward gru_forward_serial(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                              bool reverse) {
  check(embed, seqs, w);
  GruForward f;
  f.h_final = Matrix::Zero(static_cast<Index>(seqs.size()), hidden_size(w));
  Row h;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    run_serial(embed, seqs[i], w, reverse, h);
    f.h_final.row(static_cast<Index>(i)) = h;
  }
  return f;
}

GruGrads gru_backward_serial(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                             bool reverse, const Matrix& dh_final) {
  check(embed, seqs, w);
  const Index hs = hidden_size(w);
  GruGrads g = zero_grads(embed, w);
  Row h;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto steps = run_serial(embed, seqs[i], w, reverse, h);
    Row dh = dh_final.row(static_cast<Index>(i));
    for (std::size_t t = steps.size(); t-- > 0;) {
      const SerialStep& st = steps[t];
      const Row dn = dh.cwiseProduct((1.0 - st.z.array()).matrix());
      const Row dz = dh.cwiseProduct(st.h_prev - st.n);
      const Row da_n = dn.cwiseProduct((1.0 - st.n.array().square()).matrix());
      const Row da_r = da_n.cwiseProduct(st.hn).cwiseProduct((st.r.array() * (1.0 - st.r.array())).matrix());
      const Row da_z = dz.cwiseProduct((st.z.array() * (1.0 - st.z.array())).matrix());
      Row dgi(3 * hs);
      dgi << da_r, da_z, da_n;
      Row dgh(3 * hs);
      dgh << da_r, da_z, da_n.cwiseProduct(st.r);
      g.w_ih.noalias() += embed.row(st.x).transpose() * dgi;
      g.b_ih += dgi;
      g.w_hh.noalias() += st.h_prev.transpose() * dgh;
      g.b_hh += dgh;
      g.embed.row(st.x) += dgi * w.w_ih->transpose();
      dh = dh.cwiseProduct(st.z) + dgh * w.w_hh->transpose();
    }
  }
  return g;
}

GruForward gru_forward(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                       bool reverse) {
  check(embed, seqs, w);
  GruForward f;
  f.h_final = Matrix::Zero(static_cast<Index>(seqs.size()), hidden_size(w));
  const auto orders = make_blocks(seqs);
  f.blocks.resize(orders.size());
  for (std::size_t b = 0; b < orders.size(); ++b) f.blocks[b].order = orders[b];
  const auto n = static_cast<std::ptrdiff_t>(f.blocks.size());
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
  for (std::ptrdiff_t b = 0; b < n; ++b) forward_block(embed, seqs, w, reverse, f.blocks[static_cast<std::size_t>(b)], f.h_final);
  return f;
}

GruGrads gru_backward(const Matrix& embed, const std::vector<std::vector<int>>& seqs, const GruWeights& w,
                      bool reverse, const GruForward& fwd, const Matrix& dh_final) {
  const auto n = static_cast<std::ptrdiff_t>(fwd.blocks.size());
  std::vector<GruGrads> partial(fwd.blocks.size());
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    auto& g = partial[static_cast<std::size_t>(b)];
    g = zero_grads(embed, w);
    backward_block(embed, seqs, w, reverse, fwd.blocks[static_cast<std::size_t>(b)], dh_final, g);
  }
  GruGrads total = zero_grads(embed, w);
  for (const auto& g : partial) {
    total.w_ih += g.w_ih;
    total.w_hh += g.w_hh;
    total.b_ih += g.b_ih;
    total.b_hh += g.b_hh;
    total.embed += g.embed;
  }
  return total;
}

}  // namespace metatp::kernels

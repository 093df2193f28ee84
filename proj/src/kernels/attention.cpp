#include "metatp/kernels/attention.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "metatp/common/error.hpp"

namespace metatp::kernels {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool key_ok(const AttentionArgs& args, int row) {
  return args.key_valid.empty() || args.key_valid[static_cast<std::size_t>(row)] != 0;
}

int visible_limit(const AttentionArgs& args, const AttentionSegment& s, int i) {
  return args.causal ? i + (s.k_len - s.q_len) : s.k_len - 1;
}

int rel_id(const AttentionArgs& args, const AttentionSegment& s, int i, int j) {
  if (s.rel_begin < 0) return -1;
  return args.rel_ids[static_cast<std::size_t>(s.rel_begin + static_cast<std::int64_t>(i) * s.k_len + j)];
}

AttentionForward allocate(const AttentionTensors& t, const AttentionArgs& args) {
  AttentionForward f;
  f.z = Matrix::Zero(t.q->rows(), t.v->cols());
  std::size_t total = 0;
  for (const auto& s : args.segments) {
    f.probs_offset.push_back(total);
    total += static_cast<std::size_t>(args.heads) * static_cast<std::size_t>(s.q_len) * static_cast<std::size_t>(s.k_len);
  }
  f.probs.assign(total, 0.0);
  return f;
}

void forward_block(const AttentionTensors& t, const AttentionArgs& args, std::size_t si, int h, AttentionForward& f) {
  const auto& s = args.segments[si];
  const Index d = t.q->cols();
  const Index dh = d / args.heads;
  const Index c0 = h * dh;
  double* P = f.probs.data() + f.probs_offset[si] + static_cast<std::size_t>(h) * s.q_len * s.k_len;
  for (int i = 0; i < s.q_len; ++i) {
    const int qr = s.q_begin + i;
    const auto qi = t.q->row(qr).segment(c0, dh);
    const int limit = visible_limit(args, s, i);
    double* row = P + static_cast<std::size_t>(i) * s.k_len;
    double mx = kNegInf;
    for (int j = 0; j < s.k_len; ++j) {
      const int kr = s.k_begin + j;
      if (j > limit || !key_ok(args, kr)) {
        row[j] = kNegInf;
        continue;
      }
      double c = qi.dot(t.k->row(kr).segment(c0, dh));
      const int id = rel_id(args, s, i, j);
      if (t.rk && id >= 0) c += qi.dot(t.rk->row(id).segment(c0, dh));
      double sc = args.content_scale * c;
      if (t.aq) sc += args.abs_scale * t.aq->row(qr).segment(c0, dh).dot(t.ak->row(kr).segment(c0, dh));
      row[j] = sc;
      mx = std::max(mx, sc);
    }
    double z = 0.0;
    for (int j = 0; j < s.k_len; ++j) {
      row[j] = row[j] == kNegInf ? 0.0 : std::exp(row[j] - mx);
      z += row[j];
    }
    auto out = f.z.row(qr).segment(c0, dh);
    for (int j = 0; j < s.k_len; ++j) {
      row[j] /= z;
      if (row[j] == 0.0) continue;
      const int kr = s.k_begin + j;
      out += row[j] * t.v->row(kr).segment(c0, dh);
      const int id = rel_id(args, s, i, j);
      if (t.rv && id >= 0) out += row[j] * t.rv->row(id).segment(c0, dh);
    }
  }
}

AttentionGrads allocate_grads(const AttentionTensors& t) {
  AttentionGrads g;
  g.q = Matrix::Zero(t.q->rows(), t.q->cols());
  g.k = Matrix::Zero(t.k->rows(), t.k->cols());
  g.v = Matrix::Zero(t.v->rows(), t.v->cols());
  if (t.aq) g.aq = Matrix::Zero(t.aq->rows(), t.aq->cols());
  if (t.ak) g.ak = Matrix::Zero(t.ak->rows(), t.ak->cols());
  if (t.rk) g.rk = Matrix::Zero(t.rk->rows(), t.rk->cols());
  if (t.rv) g.rv = Matrix::Zero(t.rv->rows(), t.rv->cols());
  return g;
}

// `sink(table, pair, id, c0, values)` receives the rk (table 0) and rv
// (table 1) contributions so callers choose direct or deferred accumulation.
template <typename Sink>
void backward_block(const AttentionTensors& t, const AttentionArgs& args, const AttentionForward& f, const Matrix& dz,
                    const Matrix* dmean, std::size_t si, int h, AttentionGrads& g, Sink&& sink) {
  const auto& s = args.segments[si];
  const Index dh = t.q->cols() / args.heads;
  const Index c0 = h * dh;
  const double* P = f.probs.data() + f.probs_offset[si] + static_cast<std::size_t>(h) * s.q_len * s.k_len;
  Eigen::VectorXd dp(s.k_len);
  Eigen::RowVectorXd kk(dh);
  for (int i = 0; i < s.q_len; ++i) {
    const int qr = s.q_begin + i;
    const double* row = P + static_cast<std::size_t>(i) * s.k_len;
    const auto dzi = dz.row(qr).segment(c0, dh);
    const auto qi = t.q->row(qr).segment(c0, dh);
    double weighted = 0.0;
    for (int j = 0; j < s.k_len; ++j) {
      if (row[j] == 0.0) {
        dp(j) = 0.0;
        continue;
      }
      const int kr = s.k_begin + j;
      double v = dzi.dot(t.v->row(kr).segment(c0, dh));
      const int id = rel_id(args, s, i, j);
      if (t.rv && id >= 0) v += dzi.dot(t.rv->row(id).segment(c0, dh));
      if (dmean) v += (*dmean)(qr, j) / args.heads;
      dp(j) = v;
      weighted += row[j] * v;
    }
    for (int j = 0; j < s.k_len; ++j) {
      const double p = row[j];
      if (p == 0.0) continue;
      const int kr = s.k_begin + j;
      const int id = rel_id(args, s, i, j);
      const std::int64_t pair = s.rel_begin < 0 ? -1 : s.rel_begin + static_cast<std::int64_t>(i) * s.k_len + j;
      g.v.row(kr).segment(c0, dh) += p * dzi;
      if (t.rv && id >= 0) sink(1, pair, id, c0, (p * dzi).eval());
      const double ds = p * (dp(j) - weighted);
      if (ds == 0.0) continue;
      kk = t.k->row(kr).segment(c0, dh);
      if (t.rk && id >= 0) kk += t.rk->row(id).segment(c0, dh);
      const double cs = args.content_scale * ds;
      g.q.row(qr).segment(c0, dh) += cs * kk;
      g.k.row(kr).segment(c0, dh) += cs * qi;
      if (t.rk && id >= 0) sink(0, pair, id, c0, (cs * qi).eval());
      if (t.aq) {
        const double as = args.abs_scale * ds;
        g.aq.row(qr).segment(c0, dh) += as * t.ak->row(kr).segment(c0, dh);
        g.ak.row(kr).segment(c0, dh) += as * t.aq->row(qr).segment(c0, dh);
      }
    }
  }
}

}  // namespace

void check_attention(const AttentionTensors& t, const AttentionArgs& args) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kDimensionMismatch, "attention: " + what); };
  if (!t.q || !t.k || !t.v) fail("q, k and v are required");
  const Index d = t.q->cols();
  if (args.heads < 1 || d % args.heads != 0) fail("heads must divide d");
  if (t.k->cols() != d || t.v->cols() != d) fail("q/k/v width");
  if (t.k->rows() != t.v->rows()) fail("k/v rows");
  if ((t.aq == nullptr) != (t.ak == nullptr)) fail("aq and ak must be given together");
  if (t.aq && (t.aq->rows() != t.q->rows() || t.ak->rows() != t.k->rows() || t.aq->cols() != d || t.ak->cols() != d)) {
    fail("absolute term shape");
  }
  if (t.rk && t.rk->cols() != d) fail("rk width");
  if (t.rv && t.rv->cols() != d) fail("rv width");
  if (!args.key_valid.empty() && static_cast<Index>(args.key_valid.size()) != t.k->rows()) fail("key mask length");
  for (const auto& s : args.segments) {
    if (s.q_begin < 0 || s.q_len < 0 || s.q_begin + s.q_len > t.q->rows()) fail("query range");
    if (s.k_begin < 0 || s.k_len < 0 || s.k_begin + s.k_len > t.k->rows()) fail("key range");
    if (s.rel_begin >= 0) {
      const auto end = s.rel_begin + static_cast<std::int64_t>(s.q_len) * s.k_len;
      if (end > static_cast<std::int64_t>(args.rel_ids.size())) fail("relative id range");
      for (auto p = s.rel_begin; p < end; ++p) {
        const int id = args.rel_ids[static_cast<std::size_t>(p)];
        const Index rows = t.rk ? t.rk->rows() : (t.rv ? t.rv->rows() : 0);
        if (id >= rows) fail("relative id " + std::to_string(id) + " beyond table");
      }
    }
    for (int i = 0; i < s.q_len; ++i) {
      const int limit = std::min(visible_limit(args, s, i), s.k_len - 1);
      bool any = false;
      for (int j = 0; j <= limit && !any; ++j) any = key_ok(args, s.k_begin + j);
      if (!any) throw Error(ErrorCode::kAllMasked, "query row " + std::to_string(s.q_begin + i) + " sees no valid key");
    }
  }
}

AttentionForward attention_forward_serial(const AttentionTensors& t, const AttentionArgs& args) {
  check_attention(t, args);
  AttentionForward f = allocate(t, args);
  for (std::size_t s = 0; s < args.segments.size(); ++s)
    for (int h = 0; h < args.heads; ++h) forward_block(t, args, s, h, f);
  return f;
}

AttentionForward attention_forward(const AttentionTensors& t, const AttentionArgs& args) {
  check_attention(t, args);
  AttentionForward f = allocate(t, args);
  const auto blocks = static_cast<std::int64_t>(args.segments.size()) * args.heads;
#pragma omp parallel for schedule(dynamic, 1) if (blocks > 1)
  for (std::int64_t b = 0; b < blocks; ++b) {
    forward_block(t, args, static_cast<std::size_t>(b / args.heads), static_cast<int>(b % args.heads), f);
  }
  return f;
}

AttentionGrads attention_backward_serial(const AttentionTensors& t, const AttentionArgs& args,
                                         const AttentionForward& fwd, const Matrix& dz, const Matrix* dmean_probs) {
  AttentionGrads g = allocate_grads(t);
  const Index dh = t.q->cols() / args.heads;
  auto sink = [&g, dh](int table, std::int64_t, int id, Index c0, const Eigen::RowVectorXd& v) {
    (table == 0 ? g.rk : g.rv).row(id).segment(c0, dh) += v;
  };
  for (std::size_t s = 0; s < args.segments.size(); ++s)
    for (int h = 0; h < args.heads; ++h) backward_block(t, args, fwd, dz, dmean_probs, s, h, g, sink);
  return g;
}

AttentionGrads attention_backward(const AttentionTensors& t, const AttentionArgs& args, const AttentionForward& fwd,
                                  const Matrix& dz, const Matrix* dmean_probs) {
  AttentionGrads g = allocate_grads(t);
  const Index d = t.q->cols();
  const Index dh = d / args.heads;
  const auto pairs = static_cast<Index>(args.rel_ids.size());
  Matrix pair_rk = t.rk ? Matrix::Zero(pairs, d) : Matrix();
  Matrix pair_rv = t.rv ? Matrix::Zero(pairs, d) : Matrix();
  auto sink = [&pair_rk, &pair_rv, dh](int table, std::int64_t pair, int, Index c0, const Eigen::RowVectorXd& v) {
    (table == 0 ? pair_rk : pair_rv).row(pair).segment(c0, dh) += v;
  };
  const auto blocks = static_cast<std::int64_t>(args.segments.size()) * args.heads;
#pragma omp parallel for schedule(dynamic, 1) if (blocks > 1)
  for (std::int64_t b = 0; b < blocks; ++b) {
    backward_block(t, args, fwd, dz, dmean_probs, static_cast<std::size_t>(b / args.heads), static_cast<int>(b % args.heads), g, sink);
  }
  for (Index p = 0; p < pairs; ++p) {
    const int id = args.rel_ids[static_cast<std::size_t>(p)];
    if (id < 0) continue;
    if (t.rk) g.rk.row(id) += pair_rk.row(p);
    if (t.rv) g.rv.row(id) += pair_rv.row(p);
  }
  return g;
}

Matrix mean_head_probs(const AttentionArgs& args, const AttentionForward& fwd, Index rows, Index width) {
  Matrix out = Matrix::Zero(rows, width);
  const double inv = 1.0 / args.heads;
  for (std::size_t si = 0; si < args.segments.size(); ++si) {
    const auto& s = args.segments[si];
    if (s.k_len > width) throw Error(ErrorCode::kDimensionMismatch, "mean_head_probs: width too small");
    for (int h = 0; h < args.heads; ++h) {
      const double* P = fwd.probs.data() + fwd.probs_offset[si] + static_cast<std::size_t>(h) * s.q_len * s.k_len;
      for (int i = 0; i < s.q_len; ++i)
        for (int j = 0; j < s.k_len; ++j) out(s.q_begin + i, j) += inv * P[static_cast<std::size_t>(i) * s.k_len + j];
    }
  }
  return out;
}

}  // namespace metatp::kernels

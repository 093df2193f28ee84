#include "metatp/nn/fused.hpp"

#include <atomic>
#include <memory>

namespace metatp::nn {
namespace {

std::atomic<KernelMode> g_mode{KernelMode::kParallel};

const Matrix* ptr(const Var& v) { return v ? &v.value() : nullptr; }

}  // namespace

void set_kernel_mode(KernelMode mode) { g_mode.store(mode); }
KernelMode kernel_mode() { return g_mode.load(); }

AttentionOutput fused_attention(const AttentionInputs& in, kernels::AttentionArgs args, Index probs_width) {
  kernels::AttentionTensors t{ptr(in.q), ptr(in.k), ptr(in.v), ptr(in.aq), ptr(in.ak), ptr(in.rk), ptr(in.rv)};
  const bool serial = kernel_mode() == KernelMode::kSerial;
  auto fwd = std::make_shared<kernels::AttentionForward>(serial ? kernels::attention_forward_serial(t, args)
                                                                : kernels::attention_forward(t, args));
  auto shared_args = std::make_shared<const kernels::AttentionArgs>(std::move(args));

  // slot index of each optional input inside the node's input list
  std::vector<Var> inputs{in.q, in.k, in.v};
  int slot[4] = {-1, -1, -1, -1};
  const Var* optional[4] = {&in.aq, &in.ak, &in.rk, &in.rv};
  for (int i = 0; i < 4; ++i) {
    if (*optional[i]) {
      slot[i] = static_cast<int>(inputs.size());
      inputs.push_back(*optional[i]);
    }
  }
  auto dmean = std::make_shared<Matrix>();
  Matrix z = fwd->z;
  AttentionOutput out;
  out.z = make_op(std::move(z), inputs, [fwd, shared_args, dmean, slot, serial](Node& n) {
    auto val = [&n](int s) -> const Matrix* { return s < 0 ? nullptr : &n.inputs[static_cast<std::size_t>(s)]->value; };
    kernels::AttentionTensors t{&n.inputs[0]->value, &n.inputs[1]->value, &n.inputs[2]->value,
                                val(slot[0]), val(slot[1]), val(slot[2]), val(slot[3])};
    const Matrix* dm = dmean->size() ? dmean.get() : nullptr;
    kernels::AttentionGrads g = serial ? kernels::attention_backward_serial(t, *shared_args, *fwd, n.grad, dm)
                                       : kernels::attention_backward(t, *shared_args, *fwd, n.grad, dm);
    auto give = [&n](int s, const Matrix& gm) {
      if (s >= 0 && n.inputs[static_cast<std::size_t>(s)]->requires_grad) n.inputs[static_cast<std::size_t>(s)]->accumulate(gm);
    };
    give(0, g.q);
    give(1, g.k);
    give(2, g.v);
    give(slot[0], g.aq);
    give(slot[1], g.ak);
    give(slot[2], g.rk);
    give(slot[3], g.rv);
  });
  if (probs_width > 0) {
    Matrix pm = kernels::mean_head_probs(*shared_args, *fwd, fwd->z.rows(), probs_width);
    out.mean_probs = make_op(std::move(pm), {out.z}, [dmean](Node& n) {
      *dmean = n.grad;
      n.inputs[0]->grad_buffer();
    });
  }
  return out;
}

Var gru_final_states(const Var& embed, const GruParams& p, std::vector<std::vector<int>> seqs, bool reverse,
                     int frozen_row) {
  const kernels::GruWeights w{&p.w_ih.value(), &p.w_hh.value(), &p.b_ih.value(), &p.b_hh.value()};
  const bool serial = kernel_mode() == KernelMode::kSerial;
  auto shared_seqs = std::make_shared<const std::vector<std::vector<int>>>(std::move(seqs));
  auto fwd = std::make_shared<kernels::GruForward>(serial ? kernels::gru_forward_serial(embed.value(), *shared_seqs, w, reverse)
                                                          : kernels::gru_forward(embed.value(), *shared_seqs, w, reverse));
  Matrix h = fwd->h_final;
  if (serial) fwd->blocks.clear();
  return make_op(std::move(h), {embed, p.w_ih, p.w_hh, p.b_ih, p.b_hh},
                 [fwd, shared_seqs, reverse, serial, frozen_row](Node& n) {
                   const kernels::GruWeights w{&n.inputs[1]->value, &n.inputs[2]->value, &n.inputs[3]->value,
                                               &n.inputs[4]->value};
                   const Matrix& e = n.inputs[0]->value;
                   kernels::GruGrads g = serial ? kernels::gru_backward_serial(e, *shared_seqs, w, reverse, n.grad)
                                                : kernels::gru_backward(e, *shared_seqs, w, reverse, *fwd, n.grad);
                   if (frozen_row >= 0 && frozen_row < g.embed.rows()) g.embed.row(frozen_row).setZero();
                   const Matrix* grads[5] = {&g.embed, &g.w_ih, &g.w_hh, &g.b_ih, &g.b_hh};
                   for (std::size_t i = 0; i < 5; ++i) {
                     if (n.inputs[i]->requires_grad) n.inputs[i]->accumulate(*grads[i]);
                   }
                 });
}

}  // namespace metatp::nn

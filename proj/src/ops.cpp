#include "opkit/ops.hpp"

#include <algorithm>
#include <utility>

#include "opkit/kernels.hpp"
#include "opkit/tape.hpp"

namespace opkit::ops {

namespace {

namespace K = opkit::kernels;

Tape* active_tape() {
  Tape* t = Tape::active();
  if (t && t->recording()) return t;
  return nullptr;
}

void finish(Tape* tp, Tensor& out, Tape::BackFn back) {
  const std::int64_t id = tp->record(std::move(back));
  tp->tag(out, id);
}

// For products the gradient flows through the conjugate of the other factor.
Tensor conj_if_complex(const Tensor& t) {
  return t.is_complex() ? K::conj(t) : t;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = K::ewise(K::BinOp::Add, a, b);
  Tape* tp = active_tape();
  if (!tp || (!tp->tracks(a) && !tp->tracks(b))) return out;
  const std::int64_t ia = tp->tracks(a) ? tp->input_id(a) : -1;
  const std::int64_t ib = tp->tracks(b) ? tp->input_id(b) : -1;
  finish(tp, out,
         [ia, ib, sa = a.shape(), sb = b.shape()](const Tensor& g, Tape& t) {
           if (ia >= 0) t.accumulate(ia, K::reduce_to(g, sa));
           if (ib >= 0) t.accumulate(ib, K::reduce_to(g, sb));
         });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tensor out = K::ewise(K::BinOp::Sub, a, b);
  Tape* tp = active_tape();
  if (!tp || (!tp->tracks(a) && !tp->tracks(b))) return out;
  const std::int64_t ia = tp->tracks(a) ? tp->input_id(a) : -1;
  const std::int64_t ib = tp->tracks(b) ? tp->input_id(b) : -1;
  finish(tp, out,
         [ia, ib, sa = a.shape(), sb = b.shape()](const Tensor& g, Tape& t) {
           if (ia >= 0) t.accumulate(ia, K::reduce_to(g, sa));
           if (ib >= 0) t.accumulate(ib, K::reduce_to(K::neg(g), sb));
         });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tensor out = K::ewise(K::BinOp::Mul, a, b);
  Tape* tp = active_tape();
  if (!tp || (!tp->tracks(a) && !tp->tracks(b))) return out;
  const std::int64_t ia = tp->tracks(a) ? tp->input_id(a) : -1;
  const std::int64_t ib = tp->tracks(b) ? tp->input_id(b) : -1;
  finish(tp, out,
         [ia, ib, av = a.detached(), bv = b.detached()](const Tensor& g,
                                                        Tape& t) {
           if (ia >= 0)
             t.accumulate(ia, K::reduce_to(K::ewise(K::BinOp::Mul, g,
                                                    conj_if_complex(bv)),
                                           av.shape()));
           if (ib >= 0)
             t.accumulate(ib, K::reduce_to(K::ewise(K::BinOp::Mul, g,
                                                    conj_if_complex(av)),
                                           bv.shape()));
         });
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  Tensor out = K::ewise(K::BinOp::Div, a, b);
  Tape* tp = active_tape();
  if (!tp || (!tp->tracks(a) && !tp->tracks(b))) return out;
  const std::int64_t ia = tp->tracks(a) ? tp->input_id(a) : -1;
  const std::int64_t ib = tp->tracks(b) ? tp->input_id(b) : -1;
  finish(tp, out,
         [ia, ib, av = a.detached(), bv = b.detached(),
          ov = out.detached()](const Tensor& g, Tape& t) {
           const Tensor bc = conj_if_complex(bv);
           if (ia >= 0)
             t.accumulate(ia,
                          K::reduce_to(K::ewise(K::BinOp::Div, g, bc),
                                       av.shape()));
           if (ib >= 0) {
             // d(a/b)/db = -a/b^2 = -(a/b)/b.
             Tensor gb = K::ewise(K::BinOp::Div,
                                  K::ewise(K::BinOp::Mul, g,
                                           conj_if_complex(ov)),
                                  bc);
             t.accumulate(ib, K::reduce_to(K::neg(gb), bv.shape()));
           }
         });
  return out;
}

Tensor neg(const Tensor& a) {
  Tensor out = K::neg(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::neg(g));
  });
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = K::scale(a, s);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, s](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::scale(g, s));
  });
  return out;
}

namespace {

struct ContractPlan {
  std::vector<std::pair<int, int>> fa_pairs;  // out axis of g vs free axis of b
  std::vector<std::pair<int, int>> fb_pairs;  // free axis of a vs out axis of g
  std::vector<int> perm_a;  // reorders contract(g, b~) into a's layout
  std::vector<int> perm_b;  // reorders contract(a~, g) into b's layout
};

ContractPlan plan_contract(int ra, int rb,
                           const std::vector<std::pair<int, int>>& axes) {
  std::vector<int> fa, fb, ca_pos(static_cast<std::size_t>(ra), -1),
      cb_pos(static_cast<std::size_t>(rb), -1);
  for (std::size_t k = 0; k < axes.size(); ++k) {
    ca_pos[static_cast<std::size_t>(axes[k].first)] = static_cast<int>(k);
    cb_pos[static_cast<std::size_t>(axes[k].second)] = static_cast<int>(k);
  }
  for (int i = 0; i < ra; ++i)
    if (ca_pos[static_cast<std::size_t>(i)] < 0) fa.push_back(i);
  for (int i = 0; i < rb; ++i)
    if (cb_pos[static_cast<std::size_t>(i)] < 0) fb.push_back(i);

  // Contracted axes of each operand in that operand's own axis order; these
  // are the free-axis orders of the gradient contractions below.
  std::vector<int> ca_sorted, cb_sorted;
  for (int i = 0; i < ra; ++i)
    if (ca_pos[static_cast<std::size_t>(i)] >= 0) ca_sorted.push_back(i);
  for (int i = 0; i < rb; ++i)
    if (cb_pos[static_cast<std::size_t>(i)] >= 0) cb_sorted.push_back(i);

  ContractPlan p;
  // grad_a = contract(g, b~) pairing g's trailing axes with b's free axes;
  // the result carries axes [fa..., cb_sorted...].
  for (std::size_t j = 0; j < fb.size(); ++j)
    p.fa_pairs.emplace_back(static_cast<int>(fa.size() + j), fb[j]);
  // grad_b = contract(a~, g) pairing a's free axes with g's leading axes;
  // the result carries axes [ca_sorted..., fb...].
  for (std::size_t i = 0; i < fa.size(); ++i)
    p.fb_pairs.emplace_back(fa[i], static_cast<int>(i));

  p.perm_a.resize(static_cast<std::size_t>(ra));
  for (int axis = 0; axis < ra; ++axis) {
    const int k = ca_pos[static_cast<std::size_t>(axis)];
    if (k < 0) {
      const auto it = std::find(fa.begin(), fa.end(), axis);
      p.perm_a[static_cast<std::size_t>(axis)] =
          static_cast<int>(it - fa.begin());
    } else {
      const int partner = axes[static_cast<std::size_t>(k)].second;
      const auto it = std::find(cb_sorted.begin(), cb_sorted.end(), partner);
      p.perm_a[static_cast<std::size_t>(axis)] =
          static_cast<int>(fa.size() + (it - cb_sorted.begin()));
    }
  }
  p.perm_b.resize(static_cast<std::size_t>(rb));
  for (int axis = 0; axis < rb; ++axis) {
    const int k = cb_pos[static_cast<std::size_t>(axis)];
    if (k < 0) {
      const auto it = std::find(fb.begin(), fb.end(), axis);
      p.perm_b[static_cast<std::size_t>(axis)] =
          static_cast<int>(ca_sorted.size() + (it - fb.begin()));
    } else {
      const int partner = axes[static_cast<std::size_t>(k)].first;
      const auto it = std::find(ca_sorted.begin(), ca_sorted.end(), partner);
      p.perm_b[static_cast<std::size_t>(axis)] =
          static_cast<int>(it - ca_sorted.begin());
    }
  }
  return p;
}

}  // namespace

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<int, int>>& axes) {
  Tensor out = K::contract(a, b, axes);
  Tape* tp = active_tape();
  if (!tp || (!tp->tracks(a) && !tp->tracks(b))) return out;
  const std::int64_t ia = tp->tracks(a) ? tp->input_id(a) : -1;
  const std::int64_t ib = tp->tracks(b) ? tp->input_id(b) : -1;
  ContractPlan plan = plan_contract(a.rank(), b.rank(), axes);
  finish(tp, out,
         [ia, ib, plan = std::move(plan), av = a.detached(),
          bv = b.detached()](const Tensor& g, Tape& t) {
           if (ia >= 0) {
             Tensor raw = K::contract(g, conj_if_complex(bv), plan.fa_pairs);
             t.accumulate(ia, K::transpose(raw, plan.perm_a));
           }
           if (ib >= 0) {
             Tensor raw = K::contract(conj_if_complex(av), g, plan.fb_pairs);
             t.accumulate(ib, K::transpose(raw, plan.perm_b));
           }
         });
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_arg(a.rank() >= 1 && b.rank() >= 1, "matmul needs rank >= 1");
  return contract(a, b, {{a.rank() - 1, 0}});
}

Tensor transpose(const Tensor& a, const std::vector<int>& perm) {
  Tensor out = K::transpose(a, perm);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  finish(tp, out, [ia, inv = std::move(inv)](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::transpose(g, inv));
  });
  return out;
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  Tensor out = K::reshape(a, shape);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, orig = a.shape()](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::reshape(g, orig));
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  Tensor out = K::concat(parts, axis);
  Tape* tp = active_tape();
  if (!tp) return out;
  bool any = false;
  for (const Tensor& p : parts) any = any || tp->tracks(p);
  if (!any) return out;
  std::vector<std::int64_t> ids;
  std::vector<std::int64_t> sizes;
  ids.reserve(parts.size());
  for (const Tensor& p : parts) {
    ids.push_back(tp->tracks(p) ? tp->input_id(p) : -1);
    sizes.push_back(p.dim(axis));
  }
  finish(tp, out,
         [ids = std::move(ids), sizes = std::move(sizes), axis](
             const Tensor& g, Tape& t) {
           std::int64_t at = 0;
           for (std::size_t i = 0; i < ids.size(); ++i) {
             if (ids[i] >= 0)
               t.accumulate(ids[i], K::slice(g, axis, at, at + sizes[i]));
             at += sizes[i];
           }
         });
  return out;
}

Tensor slice(const Tensor& a, int axis, std::int64_t lo, std::int64_t hi) {
  Tensor out = K::slice(a, axis, lo, hi);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, axis, lo, full = a.dim(axis)](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::unslice(g, axis, lo, full));
  });
  return out;
}

Tensor unslice(const Tensor& a, int axis, std::int64_t lo, std::int64_t full) {
  Tensor out = K::unslice(a, axis, lo, full);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, axis, lo, len = a.dim(axis)](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::slice(g, axis, lo, lo + len));
  });
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = K::relu(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, av = a.detached()](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::relu_grad(av, g));
  });
  return out;
}

Tensor gelu(const Tensor& a) {
  Tensor out = K::gelu(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, av = a.detached()](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::gelu_grad(av, g));
  });
  return out;
}

Tensor reduce_sum(const Tensor& a) {
  Tensor out = K::reduce_sum_all(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, shape = a.shape(), kind = a.kind()](const Tensor& g,
                                                           Tape& t) {
    t.accumulate(ia, K::ewise(K::BinOp::Add, Tensor::zeros(shape, kind), g));
  });
  return out;
}

Tensor reduce_sum_axis(const Tensor& a, int axis) {
  Tensor out = K::reduce_sum_axis(a, axis);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out,
         [ia, axis, shape = a.shape(), kind = a.kind()](const Tensor& g,
                                                        Tape& t) {
           Shape keep = shape;
           keep[static_cast<std::size_t>(axis)] = 1;
           t.accumulate(ia, K::ewise(K::BinOp::Add, Tensor::zeros(shape, kind),
                                     K::reshape(g, keep)));
         });
  return out;
}

Tensor reduce_mean(const Tensor& a) {
  check_arg(a.numel() > 0, "mean of an empty tensor");
  return scale(reduce_sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor abs_pow(const Tensor& a, double p) {
  Tensor out = K::abs_pow(a, p);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, p, av = a.detached()](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::abs_pow_grad(av, p, g));
  });
  return out;
}

Tensor pow_pos(const Tensor& a, double p) {
  Tensor out = K::pow_pos(a, p);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, p, av = a.detached()](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::ewise(K::BinOp::Mul, g,
                              K::scale(K::pow_pos(av, p - 1.0), p)));
  });
  return out;
}

Tensor sqrt_ew(const Tensor& a) {
  Tensor out = K::sqrt_ew(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia, ov = out.detached()](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::scale(K::ewise(K::BinOp::Div, g, ov), 0.5));
  });
  return out;
}

Tensor conj(const Tensor& a) {
  Tensor out = K::conj(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::conj(g));
  });
  return out;
}

Tensor real_part(const Tensor& a) {
  Tensor out = K::real_part(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::make_complex(g, Tensor::zeros(g.shape())));
  });
  return out;
}

Tensor imag_part(const Tensor& a) {
  Tensor out = K::imag_part(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::make_complex(Tensor::zeros(g.shape()), g));
  });
  return out;
}

Tensor make_complex(const Tensor& re, const Tensor& im) {
  Tensor out = K::make_complex(re, im);
  Tape* tp = active_tape();
  if (!tp || (!tp->tracks(re) && !tp->tracks(im))) return out;
  const std::int64_t ir = tp->tracks(re) ? tp->input_id(re) : -1;
  const std::int64_t ii = tp->tracks(im) ? tp->input_id(im) : -1;
  finish(tp, out, [ir, ii](const Tensor& g, Tape& t) {
    if (ir >= 0) t.accumulate(ir, K::real_part(g));
    if (ii >= 0) t.accumulate(ii, K::imag_part(g));
  });
  return out;
}

Tensor to_complex(const Tensor& a) {
  Tensor out = K::to_complex(a);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out, [ia](const Tensor& g, Tape& t) {
    t.accumulate(ia, K::real_part(g));
  });
  return out;
}

Tensor gather_rows(const Tensor& a, std::vector<std::int64_t> idx) {
  Tensor out = K::gather_rows(a, idx);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out,
         [ia, idx = std::move(idx), rows = a.dim(0)](const Tensor& g, Tape& t) {
           t.accumulate(ia, K::scatter_add_rows(g, idx, rows));
         });
  return out;
}

Tensor segment_sum(const Tensor& a, std::vector<std::int64_t> offsets) {
  Tensor out = K::segment_sum(a, offsets);
  Tape* tp = active_tape();
  if (!tp || !tp->tracks(a)) return out;
  const std::int64_t ia = tp->input_id(a);
  finish(tp, out,
         [ia, offsets = std::move(offsets)](const Tensor& g, Tape& t) {
           t.accumulate(ia, K::segment_broadcast(g, offsets));
         });
  return out;
}

Tensor detach(const Tensor& a) { return a.detached(); }

}  // namespace opkit::ops

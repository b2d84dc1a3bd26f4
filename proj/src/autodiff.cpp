#include "rme/autodiff.hpp"

#include "rme/error.hpp"
#include "rme/admm.hpp"
#include "rme/kernels.hpp"
#include "rme/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace rme::ad {

const Tensor3& Var::value() const { return tape_->value(*this); }
const Tensor3& Var::grad() const { return tape_->grad(*this); }

Var Tape::constant(Tensor3 value) { return push("const", std::move(value), {}, nullptr); }

Var Tape::parameter(Tensor3 value) {
  Var v = push("param", std::move(value), {}, nullptr);
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::push(std::string op, Tensor3 value, std::vector<std::size_t> inputs, Backward back) {
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw Error(ErrorCategory::InvalidArgument, "autodiff: forward reference");
    n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor3& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor3(n.value.dims());
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor3& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.has_grad) return n.grad;
  const_cast<Tape*>(this)->grad_ref(v.id());
  return nodes_[v.id()].grad;
}

void Tape::zero_grad() {
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor3();
  }
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw_invalid("backward: loss belongs to a different tape");
  if (value(loss).size() != 1) throw_invalid("backward: loss must be a scalar node");
  grad_ref(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad || !n.back) continue;
    for (std::size_t in : n.inputs)
      if (in >= i) throw Error(ErrorCategory::NumericalFailure, "autodiff: cycle in tape (internal error)");
    n.back(*this, i);
  }
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw_invalid("autodiff: operands live on different tapes");
  return *a.tape();
}

void check_same(Var a, Var b, const char* op) {
  if (a.dims() != b.dims()) throw_invalid(std::string("autodiff ") + op + ": shape mismatch");
}

void check_scalar(Var s, const char* op) {
  if (s.value().size() != 1) throw_invalid(std::string("autodiff ") + op + ": expected a scalar node");
}

} // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "add");
  Tensor3 out = a.value() + b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("add", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    if (tp.needs(ia)) tp.grad_ref(ia) += g;
    if (tp.needs(ib)) tp.grad_ref(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "sub");
  Tensor3 out = a.value() - b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("sub", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    if (tp.needs(ia)) tp.grad_ref(ia) += g;
    if (tp.needs(ib)) tp.grad_ref(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "mul");
  Tensor3 out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("mul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    const Tensor3& va = tp.value_at(ia);
    const Tensor3& vb = tp.value_at(ib);
    if (tp.needs(ia)) {
      Tensor3& ga = tp.grad_ref(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (tp.needs(ib)) {
      Tensor3& gb = tp.grad_ref(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var div(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "div");
  Tensor3 out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] / b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("div", std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    const Tensor3& va = tp.value_at(ia);
    const Tensor3& vb = tp.value_at(ib);
    if (tp.needs(ia)) {
      Tensor3& ga = tp.grad_ref(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / vb[i];
    }
    if (tp.needs(ib)) {
      Tensor3& gb = tp.grad_ref(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
    }
  });
}

Var exp(Var a) {
  Tape& t = *a.tape();
  Tensor3 out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.value()[i]);
  const std::size_t ia = a.id();
  return t.push("exp", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    const Tensor3& y = tp.value_at(self);
    Tensor3& ga = tp.grad_ref(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Tensor3 relu_forward(const Tensor3& x) {
  Tensor3 out(x.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Var relu(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push("relu", relu_forward(a.value()), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    const Tensor3& x = tp.value_at(ia);
    Tensor3& ga = tp.grad_ref(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push("scale", a.value() * s, {ia}, [ia, s](Tape& tp, std::size_t self) {
    kernels::axpy(s, tp.grad_at(self).span(), tp.grad_ref(ia).span());
  });
}

Var scale(Var a, Var s) {
  Tape& t = tape_of(a, s);
  check_scalar(s, "scale");
  const double sv = s.value()[0];
  const std::size_t ia = a.id(), is = s.id();
  return t.push("scale_var", a.value() * sv, {ia, is}, [ia, is](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    if (tp.needs(ia)) kernels::axpy(tp.value_at(is)[0], g.span(), tp.grad_ref(ia).span());
    if (tp.needs(is)) tp.grad_ref(is)[0] += kernels::dot(g.span(), tp.value_at(ia).span());
  });
}

Var add_const(Var a, double c) {
  Tape& t = *a.tape();
  Tensor3 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  const std::size_t ia = a.id();
  return t.push("add_const", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    tp.grad_ref(ia) += tp.grad_at(self);
  });
}

std::size_t conv_ksize(const Tensor3& kernel) {
  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(double(kernel.h()))));
  if (k * k != kernel.h() || k % 2 == 0)
    throw_invalid("conv2d: kernel must hold an odd square number of taps");
  return k;
}

namespace {

struct ConvGeom {
  std::size_t h, w, cin, cout, ks;
  long pad;
};

ConvGeom conv_geom(const Tensor3& x, const Tensor3& kernel, const Tensor3& bias) {
  const std::size_t ks = conv_ksize(kernel);
  if (kernel.w() != x.k())
    throw_invalid("conv2d: kernel expects " + std::to_string(kernel.w()) +
                  " input channels, got " + std::to_string(x.k()));
  if (bias.h() != 1 || bias.w() != 1 || bias.k() != kernel.k())
    throw_invalid("conv2d: bias must be 1x1xC_out");
  return {x.h(), x.w(), x.k(), kernel.k(), ks, static_cast<long>(ks / 2)};
}

} // namespace

Tensor3 conv2d_forward(const Tensor3& x, const Tensor3& kernel, const Tensor3& bias) {
  const ConvGeom g = conv_geom(x, kernel, bias);
  const auto& kt = kernels::active();
  Tensor3 out(Dims{g.h, g.w, g.cout});
  const std::size_t tap_stride = g.cin * g.cout;
  for (std::size_t r = 0; r < g.h; ++r)
    for (std::size_t c = 0; c < g.w; ++c) {
      double* o = out.data() + out.index(r, c, 0);
      std::copy_n(bias.data(), g.cout, o);
      for (std::size_t dr = 0; dr < g.ks; ++dr) {
        const long rr = long(r) + long(dr) - g.pad;
        if (rr < 0 || rr >= long(g.h)) continue;
        for (std::size_t dc = 0; dc < g.ks; ++dc) {
          const long cc = long(c) + long(dc) - g.pad;
          if (cc < 0 || cc >= long(g.w)) continue;
          kt.gemv_t_acc(x.data() + x.index(rr, cc, 0), kernel.data() + (dr * g.ks + dc) * tap_stride,
                        o, g.cin, g.cout);
        }
      }
    }
  return out;
}

Var conv2d(Var x, Var kernel, Var bias) {
  Tape& t = tape_of(x, kernel);
  tape_of(x, bias);
  Tensor3 out = conv2d_forward(x.value(), kernel.value(), bias.value());
  const std::size_t ix = x.id(), ik = kernel.id(), ib = bias.id();
  return t.push("conv2d", std::move(out), {ix, ik, ib}, [ix, ik, ib](Tape& tp, std::size_t self) {
    const Tensor3& gout = tp.grad_at(self);
    const Tensor3& xv = tp.value_at(ix);
    const Tensor3& kv = tp.value_at(ik);
    const ConvGeom g = conv_geom(xv, kv, tp.value_at(ib));
    const auto& kt = kernels::active();
    const std::size_t tap_stride = g.cin * g.cout;
    Tensor3* gx = tp.needs(ix) ? &tp.grad_ref(ix) : nullptr;
    Tensor3* gk = tp.needs(ik) ? &tp.grad_ref(ik) : nullptr;
    Tensor3* gb = tp.needs(ib) ? &tp.grad_ref(ib) : nullptr;
    for (std::size_t r = 0; r < g.h; ++r)
      for (std::size_t c = 0; c < g.w; ++c) {
        const double* go = gout.data() + gout.index(r, c, 0);
        if (gb) kt.axpy(1.0, go, gb->data(), g.cout);
        for (std::size_t dr = 0; dr < g.ks; ++dr) {
          const long rr = long(r) + long(dr) - g.pad;
          if (rr < 0 || rr >= long(g.h)) continue;
          for (std::size_t dc = 0; dc < g.ks; ++dc) {
            const long cc = long(c) + long(dc) - g.pad;
            if (cc < 0 || cc >= long(g.w)) continue;
            const std::size_t tap = (dr * g.ks + dc) * tap_stride;
            const std::size_t xi = xv.index(rr, cc, 0);
            if (gx) kt.gemv_acc(kv.data() + tap, go, gx->data() + xi, g.cin, g.cout);
            if (gk) kt.ger_acc(xv.data() + xi, go, gk->data() + tap, g.cin, g.cout);
          }
        }
      }
  });
}

Var soft_threshold(Var x, Var tau) {
  Tape& t = tape_of(x, tau);
  check_scalar(tau, "soft_threshold");
  Tensor3 out = rme::soft_threshold(x.value(), tau.value()[0]);
  const std::size_t ix = x.id(), it = tau.id();
  return t.push("soft_threshold", std::move(out), {ix, it}, [ix, it](Tape& tp, std::size_t self) {
    const Tensor3& g = tp.grad_at(self);
    const Tensor3& xv = tp.value_at(ix);
    const double tv = tp.value_at(it)[0];
    Tensor3* gx = tp.needs(ix) ? &tp.grad_ref(ix) : nullptr;
    double gt = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::fabs(xv[i]) <= tv) continue;
      if (gx) (*gx)[i] += g[i];
      gt -= xv[i] > 0.0 ? g[i] : -g[i];
    }
    if (tp.needs(it)) tp.grad_ref(it)[0] += gt;
  });
}

Var svt(Var x, int mode, Var tau) {
  Tape& t = tape_of(x, tau);
  check_scalar(tau, "svt");
  auto res = std::make_shared<SvtResult>(svt_factored(unfold(x.value(), mode).mat, tau.value()[0]));
  Tensor3 out = fold(res->value, mode, x.dims());
  const std::size_t ix = x.id(), it = tau.id();
  return t.push("svt", std::move(out), {ix, it}, [ix, it, mode, res](Tape& tp, std::size_t self) {
    const Matrix g = unfold(tp.grad_at(self), mode).mat;
    const Svd& f = res->svd;
    Matrix gx(g.rows, g.cols);
    double gt = 0.0;
    std::vector<double> tmp(g.cols);
    for (std::size_t j = 0; j < res->retained; ++j) {
      // s_j = u_j^T X v_j with u, v frozen.
      for (std::size_t c = 0; c < g.cols; ++c) tmp[c] = f.v(c, j);
      double gs = 0.0;
      for (std::size_t r = 0; r < g.rows; ++r)
        gs += f.u(r, j) * kernels::dot(g.row(r), tmp);
      gt -= gs;
      for (std::size_t r = 0; r < g.rows; ++r)
        kernels::axpy(gs * f.u(r, j), tmp, gx.row(r));
    }
    if (tp.needs(ix)) tp.grad_ref(ix) += fold(gx, mode, tp.value_at(ix).dims());
    if (tp.needs(it)) tp.grad_ref(it)[0] += gt;
  });
}

Var project(Var x, const ObservationMask& mask) {
  Tape& t = *x.tape();
  Tensor3 out = rme::project(x.value(), mask);
  const std::size_t ix = x.id();
  return t.push("project", std::move(out), {ix}, [ix, mask](Tape& tp, std::size_t self) {
    tp.grad_ref(ix) += rme::project(tp.grad_at(self), mask);
  });
}

Var noise_ball(Var psi, const ObservationMask& mask, Var delta) {
  Tape& t = tape_of(psi, delta);
  check_scalar(delta, "noise_ball");
  check_mask_dims(psi.value(), mask, "noise_ball");
  const double r = fro_norm(rme::project(psi.value(), mask));
  const double dv = delta.value()[0];
  const bool active = r != 0.0 && std::min(dv / r, 1.0) != 1.0;
  Tensor3 out = noise_ball_project(psi.value(), mask, dv);
  const std::size_t ip = psi.id(), id = delta.id();
  return t.push("noise_ball", std::move(out), {ip, id},
                [ip, id, mask, active, r](Tape& tp, std::size_t self) {
                  const Tensor3& g = tp.grad_at(self);
                  if (!active) {
                    if (tp.needs(ip)) tp.grad_ref(ip) += g;
                    return;
                  }
                  const Tensor3& pv = tp.value_at(ip);
                  const double dv = tp.value_at(id)[0];
                  const Tensor3 g_on = rme::project(g, mask);
                  const Tensor3 p_on = rme::project(pv, mask);
                  const double pg = inner(p_on, g_on);
                  if (tp.needs(ip)) {
                    Tensor3& gp = tp.grad_ref(ip);
                    const double f = dv / r;
                    const double c = dv * pg / (r * r * r);
                    for (std::size_t row = 0; row < pv.h(); ++row)
                      for (std::size_t col = 0; col < pv.w(); ++col)
                        for (std::size_t b = 0; b < pv.k(); ++b) {
                          const std::size_t i = pv.index(row, col, b);
                          gp[i] += mask(row, col) ? f * g[i] - c * pv[i] : g[i];
                        }
                  }
                  if (tp.needs(id)) tp.grad_ref(id)[0] += pg / r;
                });
}

Var inner(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "inner");
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("inner", Tensor3::scalar(rme::inner(a.value(), b.value())), {ia, ib},
                [ia, ib](Tape& tp, std::size_t self) {
                  const double g = tp.grad_at(self)[0];
                  if (tp.needs(ia)) kernels::axpy(g, tp.value_at(ib).span(), tp.grad_ref(ia).span());
                  if (tp.needs(ib)) kernels::axpy(g, tp.value_at(ia).span(), tp.grad_ref(ib).span());
                });
}

Var l1_loss(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "l1_loss");
  const double n = static_cast<double>(a.value().size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) acc += std::fabs(a.value()[i] - b.value()[i]);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("l1_loss", Tensor3::scalar(acc / n), {ia, ib}, [ia, ib, n](Tape& tp, std::size_t self) {
    const double g = tp.grad_at(self)[0] / n;
    const Tensor3& va = tp.value_at(ia);
    const Tensor3& vb = tp.value_at(ib);
    Tensor3* ga = tp.needs(ia) ? &tp.grad_ref(ia) : nullptr;
    Tensor3* gb = tp.needs(ib) ? &tp.grad_ref(ib) : nullptr;
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = va[i] - vb[i];
      const double s = d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
      if (ga) (*ga)[i] += s;
      if (gb) (*gb)[i] -= s;
    }
  });
}

Var mse_loss(Var a, Var b) {
  Tape& t = tape_of(a, b);
  check_same(a, b, "mse_loss");
  const double n = static_cast<double>(a.value().size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    acc += d * d;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.push("mse_loss", Tensor3::scalar(acc / n), {ia, ib}, [ia, ib, n](Tape& tp, std::size_t self) {
    const double g = 2.0 * tp.grad_at(self)[0] / n;
    const Tensor3& va = tp.value_at(ia);
    const Tensor3& vb = tp.value_at(ib);
    Tensor3* ga = tp.needs(ia) ? &tp.grad_ref(ia) : nullptr;
    Tensor3* gb = tp.needs(ib) ? &tp.grad_ref(ib) : nullptr;
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = g * (va[i] - vb[i]);
      if (ga) (*ga)[i] += d;
      if (gb) (*gb)[i] -= d;
    }
  });
}

void adam_step(const std::vector<Tensor3*>& params, const std::vector<const Tensor3*>& grads,
               AdamState& st) {
  if (params.size() != grads.size()) throw_invalid("adam_step: params/grads count mismatch");
  if (st.m.empty()) {
    for (const Tensor3* p : params) {
      st.m.emplace_back(p->dims());
      st.v.emplace_back(p->dims());
    }
  }
  if (st.m.size() != params.size()) throw_invalid("adam_step: parameter set changed");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor3& x = *params[p];
    const Tensor3& g = *grads[p];
    if (x.dims() != g.dims() || st.m[p].dims() != x.dims())
      throw_invalid("adam_step: shape mismatch for parameter " + std::to_string(p));
    Tensor3& m = st.m[p];
    Tensor3& v = st.v[p];
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      x[i] -= st.lr * mh / (std::sqrt(vh) + st.eps);
    }
  }
}

} // namespace rme::ad

#include "rme/unrolled.hpp"

#include "rme/admm.hpp"
#include "rme/error.hpp"
#include "rme/radio.hpp"
#include "rme/rng.hpp"
#include "rme/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rme {

MapperSpec MapperSpec::standard(std::size_t k_bands, std::size_t hidden) {
  MapperSpec s;
  s.layers = {{hidden, 3, Activation::Relu}, {hidden, 3, Activation::Relu}, {k_bands, 3, Activation::None}};
  s.residual = true;
  return s;
}

void MapperSpec::validate(std::size_t k_bands) const {
  if (layers.empty()) throw_invalid("mapper: at least one layer is required");
  for (const auto& l : layers) {
    if (l.out_channels == 0) throw_invalid("mapper: layer with zero output channels");
    if (l.kernel == 0 || l.kernel % 2 == 0) throw_invalid("mapper: kernel size must be odd");
  }
  if (layers.back().out_channels != k_bands)
    throw_invalid("mapper: last layer must output " + std::to_string(k_bands) + " channels");
}

double BlockParams::scalar(ScalarIndex i) const { return std::exp(log_scalars[i][0]); }

void UnrolledModel::validate() const {
  if (blocks.empty()) throw_invalid("model: k_blocks must be >= 1");
  if (k_bands == 0) throw_invalid("model: k_bands must be >= 1");
  mapper.validate(k_bands);
  double asum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw_invalid("model: alpha must be non-negative");
    asum += a;
  }
  if (std::fabs(asum - 1.0) > 1e-9) throw_invalid("model: alpha must sum to 1");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw_invalid("model: rho must be positive");
  if (!(omega >= 0.0 && omega <= 1.0)) throw_invalid("model: omega must lie in [0, 1]");
  for (const auto& b : blocks) {
    for (const auto& s : b.log_scalars)
      if (s.dims() != Dims{1, 1, 1} || !std::isfinite(s[0]))
        throw_invalid("model: block scalars must be finite");
    for (const MapperWeights* mw : {&b.v, &b.w}) {
      if (mw->kernels.size() != mapper.layers.size() || mw->biases.size() != mapper.layers.size())
        throw_invalid("model: mapper weights do not match the layer list");
      std::size_t cin = k_bands;
      for (std::size_t l = 0; l < mapper.layers.size(); ++l) {
        const auto& ls = mapper.layers[l];
        if (mw->kernels[l].dims() != Dims{ls.kernel * ls.kernel, cin, ls.out_channels} ||
            mw->biases[l].dims() != Dims{1, 1, ls.out_channels})
          throw_invalid("model: mapper weight shape mismatch in layer " + std::to_string(l));
        cin = ls.out_channels;
      }
    }
  }
}

namespace {

template <class Model, class Ptr, class Fn>
void for_each_trainable(Model& m, Fn&& fn) {
  const std::size_t nb = m.blocks.size();
  for (std::size_t b = 0; b < nb; ++b) {
    auto& blk = m.blocks[b];
    const bool last = b + 1 == nb;
    static const char* names[] = {"mu", "theta", "beta", "lambda", "delta"};
    for (std::size_t i = 0; i < kNumScalars; ++i) {
      if (last && i == kDelta) continue;
      fn(Ptr(&blk.log_scalars[i]), "block" + std::to_string(b) + ".log_" + names[i]);
    }
    if (last) continue;
    for (auto [mw, tag] : {std::pair{&blk.v, "v"}, std::pair{&blk.w, "w"}}) {
      for (std::size_t l = 0; l < mw->kernels.size(); ++l) {
        const std::string base = "block" + std::to_string(b) + "." + tag + ".conv" + std::to_string(l);
        fn(Ptr(&mw->kernels[l]), base + ".weight");
        fn(Ptr(&mw->biases[l]), base + ".bias");
      }
    }
  }
}

} // namespace

std::vector<Tensor3*> UnrolledModel::trainable() {
  std::vector<Tensor3*> out;
  for_each_trainable<UnrolledModel, Tensor3*>(*this, [&](Tensor3* p, const std::string&) { out.push_back(p); });
  return out;
}

std::vector<const Tensor3*> UnrolledModel::trainable() const {
  std::vector<const Tensor3*> out;
  for_each_trainable<const UnrolledModel, const Tensor3*>(
      *this, [&](const Tensor3* p, const std::string&) { out.push_back(p); });
  return out;
}

std::vector<std::string> UnrolledModel::trainable_names() const {
  std::vector<std::string> out;
  for_each_trainable<const UnrolledModel, const Tensor3*>(
      *this, [&](const Tensor3*, const std::string& n) { out.push_back(n); });
  return out;
}

UnrolledModel make_model(const ModelInit& init) {
  if (init.k_blocks == 0) throw_invalid("model: k_blocks must be >= 1");
  if (init.grid == 0) throw_invalid("model: grid must be >= 1");
  for (double v : {init.mu, init.theta, init.beta, init.delta})
    if (!(v > 0.0) || !std::isfinite(v)) throw_invalid("model: initial scalars must be positive");
  if (!(init.weight_std >= 0.0)) throw_invalid("model: weight_std must be >= 0");

  UnrolledModel m;
  m.k_bands = init.k_bands;
  m.mapper = MapperSpec::standard(init.k_bands, init.hidden_channels);
  m.mapper.residual = init.residual;
  m.rho = init.rho;
  m.omega = init.omega;
  const double lambda = 1.0 / std::sqrt(static_cast<double>(init.grid));

  Rng rng(init.seed);
  m.blocks.resize(init.k_blocks);
  for (auto& b : m.blocks) {
    b.log_scalars[kMu] = Tensor3::scalar(std::log(init.mu));
    b.log_scalars[kTheta] = Tensor3::scalar(std::log(init.theta));
    b.log_scalars[kBeta] = Tensor3::scalar(std::log(init.beta));
    b.log_scalars[kLambda] = Tensor3::scalar(std::log(lambda));
    b.log_scalars[kDelta] = Tensor3::scalar(std::log(init.delta));
    for (MapperWeights* mw : {&b.v, &b.w}) {
      std::size_t cin = m.k_bands;
      for (const auto& ls : m.mapper.layers) {
        Tensor3 k(Dims{ls.kernel * ls.kernel, cin, ls.out_channels});
        if (!init.zero_weights)
          for (std::size_t i = 0; i < k.size(); ++i) k[i] = init.weight_std * rng.normal();
        mw->kernels.push_back(std::move(k));
        mw->biases.emplace_back(Dims{1, 1, ls.out_channels});
        cin = ls.out_channels;
      }
    }
  }
  m.validate();
  return m;
}

namespace {

// The block recursion is written once against two policies: EagerOps computes
// plain tensors, TapeOps records the same sequence of floating-point
// operations on a tape. Both call the same kernels, so their outputs agree
// bit for bit.

struct EagerOps {
  using T = Tensor3;
  using S = double;
  const UnrolledModel& model;

  T lift(const Tensor3& v) { return v; }
  S scalar(std::size_t b, ScalarIndex i) { return std::exp(model.blocks[b].log_scalars[i][0]); }
  S s_add(S a, S b) { return a + b; }
  S s_add_c(S a, double c) { return a + c; }
  S s_div(S a, S b) { return a / b; }
  S s_inv(S a) { return 1.0 / a; }
  T add(const T& a, const T& b) { return a + b; }
  T sub(const T& a, const T& b) { return a - b; }
  T scale(const T& a, S s) { return a * s; }
  T scale_c(const T& a, double s) { return a * s; }
  T svt(const T& x, int mode, double tau) {
    return fold(svt_factored(unfold(x, mode).mat, tau).value, mode, x.dims());
  }
  T soft(const T& x, S tau) { return rme::soft_threshold(x, tau); }
  T ball(const T& psi, const ObservationMask& mask, S delta) {
    return noise_ball_project(psi, mask, delta);
  }
  T mapper(std::size_t b, bool q_branch, const T& x) {
    const MapperWeights& mw = q_branch ? model.blocks[b].w : model.blocks[b].v;
    T y = x;
    for (std::size_t l = 0; l < mw.kernels.size(); ++l) {
      y = ad::conv2d_forward(y, mw.kernels[l], mw.biases[l]);
      if (model.mapper.layers[l].activation == Activation::Relu) y = ad::relu_forward(y);
    }
    return model.mapper.residual ? x + y : y;
  }
};

struct BlockVars {
  std::array<ad::Var, kNumScalars> log_scalars;
  std::vector<ad::Var> vk, vb, wk, wb;
};

struct TapeOps {
  using T = ad::Var;
  using S = ad::Var;
  ad::Tape& tape;
  const UnrolledModel& model;
  std::vector<BlockVars> vars;
  std::vector<std::array<ad::Var, kNumScalars>> scalars;  // exp'd, created lazily
  ad::Var one;

  TapeOps(ad::Tape& t, const UnrolledModel& m, std::vector<ad::Var>& trainable_out)
      : tape(t), model(m) {
    std::vector<const Tensor3*> train = m.trainable();
    auto reg = [&](const Tensor3& p) {
      const bool is_train = std::find(train.begin(), train.end(), &p) != train.end();
      if (!is_train) return tape.constant(p);
      return tape.parameter(p);
    };
    // Register in trainable() order so callers can line gradients up.
    vars.resize(m.blocks.size());
    std::vector<std::pair<const Tensor3*, ad::Var>> made;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
      const auto& blk = m.blocks[b];
      for (std::size_t i = 0; i < kNumScalars; ++i) vars[b].log_scalars[i] = reg(blk.log_scalars[i]);
      for (std::size_t l = 0; l < blk.v.kernels.size(); ++l) {
        vars[b].vk.push_back(reg(blk.v.kernels[l]));
        vars[b].vb.push_back(reg(blk.v.biases[l]));
      }
      for (std::size_t l = 0; l < blk.w.kernels.size(); ++l) {
        vars[b].wk.push_back(reg(blk.w.kernels[l]));
        vars[b].wb.push_back(reg(blk.w.biases[l]));
      }
    }
    auto lookup = [&](const Tensor3* p) -> ad::Var {
      for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& blk = m.blocks[b];
        for (std::size_t i = 0; i < kNumScalars; ++i)
          if (&blk.log_scalars[i] == p) return vars[b].log_scalars[i];
        for (std::size_t l = 0; l < blk.v.kernels.size(); ++l) {
          if (&blk.v.kernels[l] == p) return vars[b].vk[l];
          if (&blk.v.biases[l] == p) return vars[b].vb[l];
          if (&blk.w.kernels[l] == p) return vars[b].wk[l];
          if (&blk.w.biases[l] == p) return vars[b].wb[l];
        }
      }
      throw_invalid("model: trainable parameter not found");
    };
    for (const Tensor3* p : train) trainable_out.push_back(lookup(p));
    scalars.resize(m.blocks.size());
    for (std::size_t b = 0; b < m.blocks.size(); ++b)
      for (std::size_t i = 0; i < kNumScalars; ++i) scalars[b][i] = ad::exp(vars[b].log_scalars[i]);
    one = tape.constant(Tensor3::scalar(1.0));
  }

  T lift(const Tensor3& v) { return tape.constant(v); }
  S scalar(std::size_t b, ScalarIndex i) { return scalars[b][i]; }
  S s_add(S a, S b) { return ad::add(a, b); }
  S s_add_c(S a, double c) { return ad::add_const(a, c); }
  S s_div(S a, S b) { return ad::div(a, b); }
  S s_inv(S a) { return ad::div(one, a); }
  T add(T a, T b) { return ad::add(a, b); }
  T sub(T a, T b) { return ad::sub(a, b); }
  T scale(T a, S s) { return ad::scale(a, s); }
  T scale_c(T a, double s) { return ad::scale(a, s); }
  T svt(T x, int mode, double tau) { return ad::svt(x, mode, tape.constant(Tensor3::scalar(tau))); }
  T soft(T x, S tau) { return ad::soft_threshold(x, tau); }
  T ball(T psi, const ObservationMask& mask, S delta) { return ad::noise_ball(psi, mask, delta); }
  T mapper(std::size_t b, bool q_branch, T x) {
    const auto& ks = q_branch ? vars[b].wk : vars[b].vk;
    const auto& bs = q_branch ? vars[b].wb : vars[b].vb;
    T y = x;
    for (std::size_t l = 0; l < ks.size(); ++l) {
      y = ad::conv2d(y, ks[l], bs[l]);
      if (model.mapper.layers[l].activation == Activation::Relu) y = ad::relu(y);
    }
    return model.mapper.residual ? ad::add(x, y) : y;
  }
};

template <class Ops>
struct Iterates {
  typename Ops::T x, e;
};

// Runs all blocks. With full_last the final block also updates N (for the
// residual trace); otherwise it stops once X and E are known.
template <class Ops>
Iterates<Ops> run_blocks(Ops& ops, const UnrolledModel& model, const Tensor3& d,
                         const ObservationMask& mask, std::vector<double>* trace) {
  using T = typename Ops::T;
  const Tensor3 pd_value = project(d, mask);
  const Tensor3 zero_value(d.dims());
  const T pd = ops.lift(pd_value);
  const T zero = ops.lift(zero_value);
  T x = pd, e = zero, n = zero, p = zero, q = zero, lam = zero, gam = zero, phi = zero;
  std::array<T, 3> y{zero, zero, zero};
  std::array<T, 3> m{zero, zero, zero};
  const double rho = model.rho;
  const double inv_rho = 1.0 / rho;
  const std::size_t nb = model.blocks.size();

  std::size_t b = 0;
  try {
    for (; b < nb; ++b) {
      const bool last = b + 1 == nb;
      auto mu = ops.scalar(b, kMu);
      auto th = ops.scalar(b, kTheta);
      auto be = ops.scalar(b, kBeta);
      auto la = ops.scalar(b, kLambda);

      for (int i = 0; i < 3; ++i)
        m[i] = ops.svt(ops.add(x, ops.scale_c(y[i], inv_rho)), i + 1, model.alpha[i] / rho);

      auto mt = ops.s_add(mu, th);
      T rx = ops.add(ops.add(lam, ops.scale(ops.sub(ops.sub(pd, e), n), mu)), ops.scale(p, th));
      T px = ops.scale(ops.sub(rx, gam), ops.s_inv(mt));
      T msum = ops.add(ops.add(m[0], m[1]), m[2]);
      T ysum = ops.add(ops.add(y[0], y[1]), y[2]);
      T xnum = ops.add(ops.sub(ops.scale_c(msum, rho), ysum), ops.scale(px, mt));
      x = ops.scale(xnum, ops.s_inv(ops.s_add_c(mt, 3.0 * rho)));

      auto mb = ops.s_add(mu, be);
      T re = ops.add(ops.add(lam, ops.scale(ops.sub(ops.sub(pd, x), n), mu)), ops.scale(q, be));
      T pe = ops.scale(ops.sub(re, phi), ops.s_inv(mb));
      e = ops.soft(pe, ops.s_div(la, mb));

      if (last && !trace) break;

      auto de = ops.scalar(b, kDelta);
      T pn = ops.add(ops.sub(ops.sub(pd, x), e), ops.scale(lam, ops.s_inv(mu)));
      n = ops.ball(pn, mask, de);
      if constexpr (std::is_same_v<T, Tensor3>) {
        if (trace) trace->push_back(fro_norm(project(x + e + n - d, mask)));
      }
      if (last) break;

      p = ops.mapper(b, false, ops.add(x, ops.scale(gam, ops.s_inv(th))));
      q = ops.mapper(b, true, ops.add(e, ops.scale(phi, ops.s_inv(be))));
      lam = ops.add(lam, ops.scale(ops.sub(ops.sub(ops.sub(pd, x), e), n), mu));
      gam = ops.add(gam, ops.scale(ops.sub(x, p), th));
      phi = ops.add(phi, ops.scale(ops.sub(e, q), be));
      for (int i = 0; i < 3; ++i) y[i] = ops.add(y[i], ops.scale_c(ops.sub(x, m[i]), rho));
    }
  } catch (const Error& err) {
    // Inputs are validated before the first block, so any failure in here
    // means the iterates went bad (non-finite values or a stalled SVD).
    throw_numerical("block " + std::to_string(b) + ": " + err.what());
  }
  return {x, e};
}

void check_inputs(const UnrolledModel& model, const Tensor3& d, const ObservationMask& mask) {
  if (model.blocks.empty()) throw_invalid("model: k_blocks must be >= 1");
  if (d.k() != model.k_bands)
    throw_invalid("unrolled: input has " + std::to_string(d.k()) + " bands, model expects " +
                  std::to_string(model.k_bands));
  check_mask_dims(d, mask, "unrolled");
  if (!d.all_finite()) throw_invalid("unrolled: input contains non-finite values");
}

} // namespace

ForwardResult forward(const UnrolledModel& model, const Tensor3& d, const ObservationMask& mask,
                      bool trace) {
  check_inputs(model, d, mask);
  EagerOps ops{model};
  ForwardResult r;
  auto it = run_blocks(ops, model, d, mask, trace ? &r.block_residual : nullptr);
  r.x = std::move(it.x);
  r.e = std::move(it.e);
  r.d_hat = r.x + r.e;
  return r;
}

Tensor3 infer(const UnrolledModel& model, const Tensor3& d, const ObservationMask& mask) {
  return forward(model, d, mask, false).d_hat;
}

TapedForward forward_taped(ad::Tape& tape, const UnrolledModel& model, const Tensor3& d,
                           const ObservationMask& mask) {
  check_inputs(model, d, mask);
  TapedForward out;
  TapeOps ops(tape, model, out.params);
  auto it = run_blocks(ops, model, d, mask, nullptr);
  out.x = it.x;
  out.e = it.e;
  out.d_hat = ad::add(it.x, it.e);
  return out;
}

Tensor3 clamp01(const Tensor3& t) {
  Tensor3 out = t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
  return out;
}

double composite_loss(const Tensor3& d_hat, const Tensor3& truth, const Tensor3& ldpl, double omega) {
  check_same_dims(d_hat, truth, "loss");
  check_same_dims(d_hat, ldpl, "loss");
  const double n = static_cast<double>(d_hat.size());
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < d_hat.size(); ++i) {
    l1 += std::fabs(d_hat[i] - truth[i]);
    const double r = d_hat[i] - ldpl[i];
    l2 += r * r;
  }
  return omega * (l1 / n) + (1.0 - omega) * (l2 / n);
}

ad::Var composite_loss(ad::Var d_hat, ad::Var truth, ad::Var ldpl, double omega) {
  ad::Var a = ad::scale(ad::l1_loss(d_hat, truth), omega);
  if (omega == 1.0) return a;
  return ad::add(a, ad::scale(ad::mse_loss(d_hat, ldpl), 1.0 - omega));
}

TrainSample make_sample(const Tensor3& truth, const ObservationMask& mask) {
  check_mask_dims(truth, mask, "sample");
  LdplFitOptions opts;
  opts.db_domain = false;
  Tensor3 observed = project(truth, mask);
  return {truth, mask, ldpl_interpolate(observed, mask, opts).map};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw_invalid("train: epochs must be >= 1");
  if (batch_size < 1) throw_invalid("train: batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw_invalid("train: lr must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw_invalid("train: lr_decay must lie in (0, 1]");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw_invalid("train: val_fraction must lie in [0, 1)");
}

double evaluate_loss(const UnrolledModel& model, const TrainSample& s) {
  Tensor3 d_hat = infer(model, project(s.truth, s.mask), s.mask);
  return composite_loss(d_hat, s.truth, s.ldpl, model.omega);
}

namespace {

std::string scalar_report(const UnrolledModel& m) {
  std::ostringstream os;
  os.precision(4);
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& blk = m.blocks[b];
    os << " block" << b << "(mu=" << blk.scalar(kMu) << " theta=" << blk.scalar(kTheta)
       << " beta=" << blk.scalar(kBeta) << " lambda=" << blk.scalar(kLambda)
       << " delta=" << blk.scalar(kDelta) << ")";
  }
  return os.str();
}

[[noreturn]] void diverged(const UnrolledModel& m, int epoch, std::size_t step, const std::string& what) {
  std::ostringstream os;
  os << "training diverged (" << what << ") at epoch " << epoch << " step " << step << ":"
     << scalar_report(m);
  throw_numerical(os.str());
}

} // namespace

TrainResult train(UnrolledModel model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  cfg.validate();
  model.validate();
  if (data.empty()) throw_invalid("train: empty dataset");
  for (const auto& s : data) {
    check_same_dims(s.truth, s.ldpl, "train");
    check_mask_dims(s.truth, s.mask, "train");
    if (s.truth.k() != model.k_bands) throw_invalid("train: sample band count does not match model");
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::size_t n_val = 0;
  if (cfg.val_fraction > 0.0 && data.size() >= 2)
    n_val = std::clamp<std::size_t>(static_cast<std::size_t>(cfg.val_fraction * data.size()), 1,
                                    data.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> tr(order.begin() + n_val, order.end());

  TrainResult res;
  ad::AdamState adam;
  adam.lr = cfg.lr;
  double best = std::numeric_limits<double>::infinity();
  res.model = model;
  std::size_t step = 0;

  for (int ep = 0; ep < cfg.epochs; ++ep) {
    for (std::size_t i = tr.size(); i > 1; --i) std::swap(tr[i - 1], tr[rng.index(i)]);
    double ep_sum = 0.0;
    std::vector<Tensor3*> params = model.trainable();
    std::vector<Tensor3> acc;
    std::size_t in_batch = 0;
    for (std::size_t si = 0; si < tr.size(); ++si) {
      const TrainSample& s = data[tr[si]];
      ad::Tape tape;
      ++step;
      TapedForward f;
      try {
        f = forward_taped(tape, model, project(s.truth, s.mask), s.mask);
      } catch (const Error& err) {
        if (err.category() != ErrorCategory::NumericalFailure) throw;
        diverged(model, ep, step, err.what());
      }
      ad::Var loss = composite_loss(f.d_hat, tape.constant(s.truth), tape.constant(s.ldpl), model.omega);
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) diverged(model, ep, step, "non-finite loss");
      tape.backward(loss);
      if (acc.empty())
        for (const auto& v : f.params) acc.emplace_back(v.value().dims());
      for (std::size_t j = 0; j < f.params.size(); ++j) {
        const Tensor3& g = f.params[j].grad();
        if (!g.all_finite()) diverged(model, ep, step, "non-finite gradient");
        acc[j] += g;
      }
      res.step_loss.push_back(lv);
      ep_sum += lv;
      if (++in_batch == cfg.batch_size || si + 1 == tr.size()) {
        std::vector<const Tensor3*> grads;
        for (auto& a : acc) {
          a *= 1.0 / static_cast<double>(in_batch);
          grads.push_back(&a);
        }
        ad::adam_step(params, grads, adam);
        for (const Tensor3* p : params)
          if (!p->all_finite()) diverged(model, ep, step, "non-finite parameter");
        for (auto& a : acc) a.fill(0.0);
        in_batch = 0;
      }
    }
    const double ep_loss = ep_sum / static_cast<double>(tr.size());
    res.epoch_loss.push_back(ep_loss);

    double vl = ep_loss;
    if (!val.empty()) {
      vl = 0.0;
      for (std::size_t vi : val) vl += evaluate_loss(model, data[vi]);
      vl /= static_cast<double>(val.size());
      if (!std::isfinite(vl)) diverged(model, ep, step, "non-finite validation loss");
      res.val_loss.push_back(vl);
      if (vl < best) {
        best = vl;
        res.model = model;
      }
      res.best_val.push_back(best);
    } else {
      res.model = model;
    }
    if (progress) progress(ep, ep_loss, vl);
    adam.lr *= cfg.lr_decay;
  }
  return res;
}

} // namespace rme

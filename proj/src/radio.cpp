#include "rme/radio.hpp"

#include "rme/error.hpp"
#include "rme/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rme {

void LdplParams::validate() const {
  if (!(n_exp >= 1.5 && n_exp <= 6.0)) throw_invalid("ldpl: n_exp must lie in [1.5, 6]");
  if (!(d0 > 0.0)) throw_invalid("ldpl: d0 must be positive");
  if (!(shadow_sigma >= 0.0)) throw_invalid("ldpl: shadow_sigma must be non-negative");
  if (!(shadow_corr >= 0.0)) throw_invalid("ldpl: shadow_corr must be non-negative");
}

Matrix ldpl_field(const LdplParams& params, std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw_invalid("ldpl_field: grid dimensions must be positive");
  if (!(params.d0 > 0.0)) throw_invalid("ldpl_field: d0 must be positive");
  Matrix out(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double dr = static_cast<double>(r) - params.tx_row;
      const double dc = static_cast<double>(c) - params.tx_col;
      const double dist = std::max(std::hypot(dr, dc), params.d0);
      out(r, c) = params.p0 - 10.0 * params.n_exp * std::log10(dist / params.d0);
    }
  return out;
}

LdplInterpolation ldpl_interpolate(const Tensor3& d, const ObservationMask& mask,
                                   const LdplFitOptions& opts) {
  check_mask_dims(d, mask, "ldpl_interpolate");
  if (mask.count() < 3) throw_invalid("ldpl_interpolate: needs at least 3 observed cells");
  if (!(opts.d0 > 0.0)) throw_invalid("ldpl_interpolate: d0 must be positive");

  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < d.h(); ++r)
    for (std::size_t c = 0; c < d.w(); ++c)
      if (mask(r, c)) cells.emplace_back(r, c);

  auto log_dist = [&](double dr, double dc) {
    return 10.0 * std::log10(std::max(std::hypot(dr, dc), opts.d0) / opts.d0);
  };

  LdplInterpolation out{Tensor3(d.dims()), {}, false};
  for (std::size_t b = 0; b < d.k(); ++b) {
    LdplBandFit fit;
    double best = -INFINITY;
    for (auto [r, c] : cells)
      if (d(r, c, b) > best) {
        best = d(r, c, b);
        fit.tx_row = r;
        fit.tx_col = c;
      }

    const double n = static_cast<double>(cells.size());
    double mx = 0.0, my = 0.0;
    std::vector<double> xs(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto [r, c] = cells[i];
      xs[i] = log_dist(double(r) - double(fit.tx_row), double(c) - double(fit.tx_col));
      mx += xs[i];
      my += d(r, c, b);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto [r, c] = cells[i];
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (d(r, c, b) - my);
    }

    if (sxx <= 1e-12 * n * (1.0 + mx * mx)) {
      fit.fallback = true;
      fit.slope = opts.db_domain ? 2.0 : 0.0;  // slope is per 10*log10 unit, i.e. n_exp
    } else {
      fit.slope = -sxy / sxx;
      if (opts.db_domain)
        fit.slope = std::clamp(fit.slope, 1.5, 6.0);
      else
        fit.slope = std::max(fit.slope, 0.0);
    }
    fit.p0 = my + fit.slope * mx;
    out.fallback = out.fallback || fit.fallback;

    for (std::size_t r = 0; r < d.h(); ++r)
      for (std::size_t c = 0; c < d.w(); ++c)
        out.map(r, c, b) =
            fit.p0 - fit.slope * log_dist(double(r) - double(fit.tx_row),
                                          double(c) - double(fit.tx_col));
    out.bands.push_back(fit);
  }
  return out;
}

RbfInterpolation rbf_interpolate(const Tensor3& d, const ObservationMask& mask,
                                 const RbfOptions& opts) {
  check_mask_dims(d, mask, "rbf_interpolate");
  const std::size_t n = mask.count();
  if (n == 0) throw_invalid("rbf_interpolate: no observed cells");

  RbfInterpolation out{Tensor3(d.dims()), 0.0, false};
  out.shape = opts.shape.value_or(
      std::sqrt(static_cast<double>(d.h() * d.w()) / static_cast<double>(n)));
  if (!(out.shape > 0.0)) throw_invalid("rbf_interpolate: shape parameter must be positive");
  const double inv_s2 = 1.0 / (out.shape * out.shape);

  std::vector<std::pair<double, double>> pts;
  for (std::size_t r = 0; r < d.h(); ++r)
    for (std::size_t c = 0; c < d.w(); ++c)
      if (mask(r, c)) pts.emplace_back(double(r), double(c));

  Eigen::MatrixXd kern(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double dr = pts[i].first - pts[j].first;
      const double dc = pts[i].second - pts[j].second;
      kern(i, j) = kern(j, i) = std::exp(-(dr * dr + dc * dc) * inv_s2);
    }

  Eigen::LLT<Eigen::MatrixXd> llt(kern);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    kern.diagonal().array() += 1e-8;
    llt.compute(kern);
    out.ridge_applied = true;
    if (llt.info() != Eigen::Success)
      throw_numerical("rbf_interpolate: kernel system is not positive definite after ridge");
  }

  const std::size_t k = d.k();
  Eigen::MatrixXd rhs(n, k);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(k);
  std::size_t i = 0;
  for (std::size_t r = 0; r < d.h(); ++r)
    for (std::size_t c = 0; c < d.w(); ++c)
      if (mask(r, c)) {
        for (std::size_t b = 0; b < k; ++b) rhs(i, b) = d(r, c, b);
        ++i;
      }
  if (opts.center) {
    mean = rhs.colwise().mean();
    rhs.rowwise() -= mean;
  }
  const Eigen::MatrixXd weights = llt.solve(rhs);

  std::vector<double> acc(k);
  for (std::size_t r = 0; r < d.h(); ++r)
    for (std::size_t c = 0; c < d.w(); ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double dr = double(r) - pts[j].first;
        const double dc = double(c) - pts[j].second;
        const double d2 = (dr * dr + dc * dc) * inv_s2;
        if (d2 > 40.0) continue;  // exp(-40) ~ 4e-18
        const double kv = std::exp(-d2);
        for (std::size_t b = 0; b < k; ++b) acc[b] += kv * weights(j, b);
      }
      for (std::size_t b = 0; b < k; ++b) out.map(r, c, b) = acc[b] + mean(b);
    }
  return out;
}

void SceneSpec::validate() const {
  if (h == 0 || w == 0 || k_bands == 0) throw_invalid("scene: dimensions must be positive");
  if (transmitters.empty() && n_transmitters == 0)
    throw_invalid("scene: at least one transmitter is required");
  for (const auto& t : transmitters) {
    t.validate();
    if (t.tx_row < 0.0 || t.tx_row > double(h - 1) || t.tx_col < 0.0 || t.tx_col > double(w - 1))
      throw_invalid("scene: transmitter outside the grid");
  }
  if (!(n_exp_min >= 1.5 && n_exp_max <= 6.0 && n_exp_min <= n_exp_max))
    throw_invalid("scene: exponent range must lie within [1.5, 6]");
  if (!(shadow_sigma >= 0.0) || !(shadow_corr >= 0.0))
    throw_invalid("scene: shadowing parameters must be non-negative");
  if (static_cast<double>(n_obstructions) > 0.02 * static_cast<double>(h * w))
    throw_invalid("scene: obstructions may cover at most 2% of the cells");
  if (!(obstruction_depth >= 0.0)) throw_invalid("scene: obstruction_depth must be non-negative");
}

Matrix correlated_shadowing(std::size_t h, std::size_t w, double sigma, double corr,
                            std::uint64_t seed) {
  Matrix field(h, w);
  if (sigma == 0.0) return field;
  Rng rng(seed);
  for (double& v : field.data) v = rng.normal();
  if (corr > 0.0) {
    const int radius = static_cast<int>(std::ceil(3.0 * corr));
    std::vector<double> kern(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i)
      kern[i + radius] = std::exp(-0.5 * double(i * i) / (corr * corr));
    const double ks = std::accumulate(kern.begin(), kern.end(), 0.0);
    for (double& v : kern) v /= ks;
    auto wrap = [](long i, long n) { return static_cast<std::size_t>(((i % n) + n) % n); };
    Matrix tmp(h, w);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i)
          s += kern[i + radius] * field(r, wrap(long(c) + i, long(w)));
        tmp(r, c) = s;
      }
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i)
          s += kern[i + radius] * tmp(wrap(long(r) + i, long(h)), c);
        field(r, c) = s;
      }
  }
  const double n = static_cast<double>(h * w);
  const double mean = std::accumulate(field.data.begin(), field.data.end(), 0.0) / n;
  double var = 0.0;
  for (double v : field.data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : field.data) v = sd > 0.0 ? (v - mean) / sd * sigma : 0.0;
  return field;
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Scene scene;
  scene.transmitters = spec.transmitters;
  if (scene.transmitters.empty()) {
    for (std::size_t t = 0; t < spec.n_transmitters; ++t) {
      LdplParams p;
      p.tx_row = rng.uniform(0.0, double(spec.h - 1));
      p.tx_col = rng.uniform(0.0, double(spec.w - 1));
      p.n_exp = rng.uniform(spec.n_exp_min, spec.n_exp_max);
      p.shadow_sigma = spec.shadow_sigma;
      p.shadow_corr = spec.shadow_corr;
      scene.transmitters.push_back(p);
    }
  }

  const std::size_t h = spec.h, w = spec.w, k = spec.k_bands;
  // Received power of all transmitters, summed in the linear domain.
  Matrix linear(h, w);
  for (std::size_t t = 0; t < scene.transmitters.size(); ++t) {
    const LdplParams& p = scene.transmitters[t];
    Matrix f = ldpl_field(p, h, w);
    const Matrix shadow = correlated_shadowing(h, w, p.shadow_sigma, p.shadow_corr, rng.next_u64());
    for (std::size_t i = 0; i < f.data.size(); ++i)
      linear.data[i] += std::pow(10.0, (f.data[i] + shadow.data[i]) / 10.0);
  }
  Matrix combined(h, w);
  for (std::size_t i = 0; i < linear.data.size(); ++i)
    combined.data[i] = 10.0 * std::log10(linear.data[i]);
  const double ref = *std::max_element(combined.data.begin(), combined.data.end());

  // Band b attenuates the loss below the peak by (1 + 0.05 b), so every band
  // is an affine function of the same field.
  Tensor3 bg(Dims{h, w, k});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t b = 0; b < k; ++b)
        bg(r, c, b) = ref - (1.0 + 0.05 * double(b)) * (ref - combined(r, c));

  Tensor3 fg(Dims{h, w, k});
  std::vector<std::size_t> cells(h * w);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  for (std::size_t i = 0; i < spec.n_obstructions; ++i) {
    const std::size_t j = i + rng.index(cells.size() - i);
    std::swap(cells[i], cells[j]);
    for (std::size_t b = 0; b < k; ++b) fg[cells[i] * k + b] = -spec.obstruction_depth;
  }

  Tensor3 total = bg + fg;
  const auto [lo_it, hi_it] = std::minmax_element(total.values().begin(), total.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double scale = hi > lo ? 1.0 / (hi - lo) : 0.0;
  scene.db_min = lo;
  scene.db_max = hi;
  scene.ground_truth = Tensor3(total.dims());
  scene.background = Tensor3(total.dims());
  scene.foreground = Tensor3(total.dims());
  for (std::size_t i = 0; i < total.size(); ++i) {
    scene.ground_truth[i] = std::clamp((total[i] - lo) * scale, 0.0, 1.0);
    scene.background[i] = (bg[i] - lo) * scale;
    scene.foreground[i] = fg[i] * scale;
  }
  return scene;
}

ObservationMask sample_mask(std::size_t h, std::size_t w, double percent, std::uint64_t seed) {
  if (h == 0 || w == 0) throw_invalid("sample_mask: grid dimensions must be positive");
  if (!(percent > 0.0 && percent <= 100.0))
    throw_invalid("sample_mask: percent must lie in (0, 100]");
  const auto total = static_cast<std::size_t>(h * w);
  const auto n = static_cast<std::size_t>(std::llround(percent * double(total) / 100.0));
  if (n == 0)
    throw_invalid("sample_mask: " + std::to_string(percent) + "% of " + std::to_string(total) +
                  " cells rounds to zero");
  std::vector<std::size_t> cells(total);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  Rng rng(seed);
  ObservationMask mask(h, w, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.index(total - i);
    std::swap(cells[i], cells[j]);
    mask.set(cells[i] / w, cells[i] % w, true);
  }
  return mask;
}

} // namespace rme

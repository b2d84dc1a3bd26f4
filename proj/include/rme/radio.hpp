#pragma once

#include "rme/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rme {

/// Log-distance path loss transmitter. Distances are in grid cells, powers in dB.
struct LdplParams {
  double tx_row = 0.0;
  double tx_col = 0.0;
  double p0 = 0.0;
  double n_exp = 2.0;
  double d0 = 1.0;
  double shadow_sigma = 4.0;
  double shadow_corr = 6.0;

  void validate() const;
};

// p0 - 10 * n_exp * log10(max(d, d0) / d0), d measured from the transmitter
// to each cell centre.
Matrix ldpl_field(const LdplParams& params, std::size_t h, std::size_t w);

struct LdplFitOptions {
  double d0 = 1.0;
  // Data in dB: fitted exponents are clamped to [1.5, 6] and a degenerate fit
  // falls back to n_exp = 2. For normalized maps the slope is only kept
  // non-negative and the fallback is a flat field at the observed mean.
  bool db_domain = true;
};

struct LdplBandFit {
  std::size_t tx_row = 0;
  std::size_t tx_col = 0;
  double p0 = 0.0;
  double slope = 0.0;  // decay per decade of distance
  bool fallback = false;
};

struct LdplInterpolation {
  Tensor3 map;
  std::vector<LdplBandFit> bands;
  bool fallback = false;  // set if any band used the degenerate-fit path
};

// Per band: transmitter at the brightest observed cell, (p0, slope) by least
// squares against 10*log10(d/d0), fitted field evaluated everywhere.
LdplInterpolation ldpl_interpolate(const Tensor3& d, const ObservationMask& mask,
                                   const LdplFitOptions& opts = {});

struct RbfOptions {
  // Gaussian width in cells; default is the mean sample spacing sqrt(h*w/|Omega|).
  std::optional<double> shape;
  // Interpolate residuals about the observed per-band mean so the field relaxes
  // to the mean instead of zero away from the samples.
  bool center = true;
};

struct RbfInterpolation {
  Tensor3 map;
  double shape = 0.0;
  bool ridge_applied = false;
};

RbfInterpolation rbf_interpolate(const Tensor3& d, const ObservationMask& mask,
                                 const RbfOptions& opts = {});

/// Synthetic scene description. When `transmitters` is empty, n_transmitters
/// are drawn from the seed.
struct SceneSpec {
  std::size_t h = 64;
  std::size_t w = 64;
  std::size_t k_bands = 3;
  std::vector<LdplParams> transmitters;
  std::size_t n_transmitters = 1;
  double n_exp_min = 2.0;
  double n_exp_max = 3.5;
  double shadow_sigma = 4.0;
  double shadow_corr = 6.0;
  // Single-cell obstructions; at most 2% of the cells.
  std::size_t n_obstructions = 41;
  double obstruction_depth = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  Tensor3 ground_truth;  // background + foreground, min-max normalized to [0, 1]
  Tensor3 background;    // on the same affine scale as ground_truth
  Tensor3 foreground;
  double db_min = 0.0;   // dB value mapped to 0
  double db_max = 0.0;   // dB value mapped to 1
  std::vector<LdplParams> transmitters;
};

Scene generate_scene(const SceneSpec& spec);

// Uniform sample of exactly round(percent * h * w / 100) cells.
ObservationMask sample_mask(std::size_t h, std::size_t w, double percent, std::uint64_t seed);

// White noise smoothed by a periodic Gaussian of width `corr` cells, rescaled
// to standard deviation `sigma`.
Matrix correlated_shadowing(std::size_t h, std::size_t w, double sigma, double corr,
                            std::uint64_t seed);

} // namespace rme

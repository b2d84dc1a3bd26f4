#pragma once

#include "rme/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rme {

inline constexpr double kPsnrCapDb = 99.0;

// 10*log10(peak^2 / MSE), capped at kPsnrCapDb (which also covers MSE = 0).
double psnr(const Tensor3& est, const Tensor3& truth, double peak = 1.0);
double rmse(const Tensor3& est, const Tensor3& truth);
// Fraction of entries (all cells and bands) whose outage state (value below
// threshold) differs between the two maps.
double outage_error(const Tensor3& est, const Tensor3& truth, double threshold = 0.2);

struct EvalReport {
  std::string method;
  double sparsity_percent = 0.0;
  std::uint64_t seed = 0;
  std::size_t scene = 0;
  double psnr_db = 0.0;
  double rmse = 0.0;
  double outage_error = 0.0;
  double runtime_ms = 0.0;
  bool ok = true;
  std::string error;
};

EvalReport evaluate(const std::string& method, const Tensor3& est, const Tensor3& truth,
                    double outage_threshold = 0.2);

/// A reconstruction method sees only P_Omega(D) and the mask.
using Method = std::function<Tensor3(const Tensor3& observed, const ObservationMask& mask)>;

struct NamedMethod {
  std::string name;
  Method run;
};

struct SweepOptions {
  double outage_threshold = 0.2;
};

// Full cross product methods x scenes x sparsities x seeds. A method that
// throws produces a row with ok = false and NaN metrics.
std::vector<EvalReport> sweep(const std::vector<NamedMethod>& methods,
                              const std::vector<Tensor3>& scenes,
                              const std::vector<double>& sparsities,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& opts = {});

// Mask seed used by sweep() for a (scene, seed) pair.
std::uint64_t sweep_mask_seed(std::size_t scene, std::uint64_t seed);

struct SweepSummary {
  std::string method;
  double sparsity_percent = 0.0;
  double psnr_db = 0.0;
  double rmse = 0.0;
  double outage_error = 0.0;
  double runtime_ms = 0.0;
  std::size_t count = 0;
  std::size_t failed = 0;
};

// Mean over scenes and seeds per (method, sparsity), successful rows only.
std::vector<SweepSummary> summarize(const std::vector<EvalReport>& reports);

// CSV with header method,sparsity,seed,psnr_db,rmse,outage_error,runtime_ms.
// PSNR is written capped at kPsnrCapDb; failed rows carry "nan".
std::string reports_to_csv(const std::vector<EvalReport>& reports);

} // namespace rme

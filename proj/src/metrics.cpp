#include "rme/metrics.hpp"

#include "rme/error.hpp"
#include "rme/radio.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace rme {
namespace {

double mse(const Tensor3& a, const Tensor3& b) {
  check_same_dims(a, b, "metric");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

} // namespace

double psnr(const Tensor3& est, const Tensor3& truth, double peak) {
  const double m = mse(est, truth);
  if (m == 0.0) return kPsnrCapDb;
  return std::min(10.0 * std::log10(peak * peak / m), kPsnrCapDb);
}

double rmse(const Tensor3& est, const Tensor3& truth) { return std::sqrt(mse(est, truth)); }

double outage_error(const Tensor3& est, const Tensor3& truth, double threshold) {
  check_same_dims(est, truth, "outage_error");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw_invalid("outage_error: threshold must lie in (0, 1)");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < est.size(); ++i)
    if ((est[i] < threshold) != (truth[i] < threshold)) ++diff;
  return static_cast<double>(diff) / static_cast<double>(est.size());
}

EvalReport evaluate(const std::string& method, const Tensor3& est, const Tensor3& truth,
                    double outage_threshold) {
  EvalReport r;
  r.method = method;
  r.psnr_db = psnr(est, truth);
  r.rmse = rmse(est, truth);
  r.outage_error = outage_error(est, truth, outage_threshold);
  return r;
}

std::uint64_t sweep_mask_seed(std::size_t scene, std::uint64_t seed) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(scene) * 7919ULL + 17ULL;
}

std::vector<EvalReport> sweep(const std::vector<NamedMethod>& methods,
                              const std::vector<Tensor3>& scenes,
                              const std::vector<double>& sparsities,
                              const std::vector<std::uint64_t>& seeds,
                              const SweepOptions& opts) {
  for (double s : sparsities)
    if (!(s > 0.0 && s <= 100.0)) throw_invalid("sweep: sparsity levels must lie in (0, 100]");
  std::vector<EvalReport> out;
  out.reserve(methods.size() * scenes.size() * sparsities.size() * seeds.size());
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const Tensor3& truth = scenes[si];
    for (double pct : sparsities)
      for (std::uint64_t seed : seeds) {
        // The mask depends only on (scene, seed) and the sparsity level, so
        // every method sees the same observations.
        const ObservationMask mask =
            sample_mask(truth.h(), truth.w(), pct, sweep_mask_seed(si, seed));
        const Tensor3 observed = project(truth, mask);
        for (const auto& m : methods) {
          EvalReport r;
          r.method = m.name;
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const Tensor3 est = m.run(observed, mask);
            r = evaluate(m.name, est, truth, opts.outage_threshold);
          } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
            r.psnr_db = r.rmse = r.outage_error = std::numeric_limits<double>::quiet_NaN();
          }
          const auto t1 = std::chrono::steady_clock::now();
          r.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
          r.sparsity_percent = pct;
          r.seed = seed;
          r.scene = si;
          out.push_back(std::move(r));
        }
      }
  }
  return out;
}

std::vector<SweepSummary> summarize(const std::vector<EvalReport>& reports) {
  std::vector<SweepSummary> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  for (const auto& r : reports) {
    const auto key = std::make_pair(r.method, r.sparsity_percent);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SweepSummary s;
      s.method = r.method;
      s.sparsity_percent = r.sparsity_percent;
      out.push_back(s);
    }
    SweepSummary& s = out[it->second];
    if (!r.ok) {
      ++s.failed;
      continue;
    }
    s.psnr_db += r.psnr_db;
    s.rmse += r.rmse;
    s.outage_error += r.outage_error;
    s.runtime_ms += r.runtime_ms;
    ++s.count;
  }
  for (auto& s : out) {
    if (s.count == 0) {
      s.psnr_db = s.rmse = s.outage_error = s.runtime_ms = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double n = static_cast<double>(s.count);
    s.psnr_db /= n;
    s.rmse /= n;
    s.outage_error /= n;
    s.runtime_ms /= n;
  }
  return out;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << "method,sparsity,seed,psnr_db,rmse,outage_error,runtime_ms\n";
  for (const auto& r : reports) {
    const double p = r.ok ? std::min(r.psnr_db, kPsnrCapDb) : r.psnr_db;
    os << r.method << ',' << fmt(r.sparsity_percent) << ',' << r.seed << ',' << fmt(p) << ','
       << fmt(r.rmse) << ',' << fmt(r.outage_error) << ',' << fmt(r.runtime_ms) << '\n';
  }
  return os.str();
}

} // namespace rme

#include "rme/error.hpp"
#include "rme/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace rme;

TEST_CASE("PSNR, RMSE and outage on hand-built maps") {
  Tensor3 truth(Dims{2, 2, 1}, std::vector<double>{0.1, 0.5, 0.9, 0.3});
  Tensor3 est = truth;
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += 0.1;
  CHECK(rmse(est, truth) == doctest::Approx(0.1));
  CHECK(psnr(est, truth) == doctest::Approx(20.0));
  // Only the first cell crosses the 0.2 threshold (0.1 -> 0.2 is no longer below it).
  CHECK(outage_error(est, truth, 0.2) == doctest::Approx(0.25));
  CHECK(outage_error(truth, truth, 0.2) == 0.0);
  CHECK(psnr(truth, truth) == kPsnrCapDb);
  CHECK_THROWS_AS(outage_error(est, truth, 1.5), Error);
  CHECK_THROWS_AS(rmse(est, Tensor3(Dims{2, 2, 2})), Error);
}

TEST_CASE("PSNR with mixed errors matches the direct formula") {
  Tensor3 truth(Dims{1, 3, 1}, std::vector<double>{0.0, 0.5, 1.0});
  Tensor3 est(Dims{1, 3, 1}, std::vector<double>{0.2, 0.5, 0.7});
  const double mse = (0.04 + 0.0 + 0.09) / 3.0;
  CHECK(psnr(est, truth) == doctest::Approx(10.0 * std::log10(1.0 / mse)));
}

TEST_CASE("sweep covers the cross product and records failures") {
  std::vector<Tensor3> scenes{Tensor3(Dims{8, 8, 2}, 0.5), Tensor3(Dims{8, 8, 2}, 0.25)};
  std::vector<NamedMethod> methods{
      {"copy", [](const Tensor3& d, const ObservationMask&) { return d; }},
      {"fail", [](const Tensor3&, const ObservationMask&) -> Tensor3 { throw std::runtime_error("boom"); }}};
  const auto reports = sweep(methods, scenes, {10.0, 50.0}, {0, 1, 2});
  CHECK(reports.size() == 2 * 2 * 2 * 3);
  for (const auto& r : reports) {
    if (r.method == "fail") {
      CHECK(!r.ok);
      CHECK(std::isnan(r.psnr_db));
    } else {
      CHECK(r.ok);
      CHECK(std::isfinite(r.psnr_db));
    }
  }
  const auto summary = summarize(reports);
  CHECK(summary.size() == 4);
  for (const auto& s : summary) {
    CHECK(s.count + s.failed == 6);
    if (s.method == "fail") CHECK(s.failed == 6);
  }

  const std::string csv = reports_to_csv(reports);
  CHECK(csv.rfind("method,sparsity,seed,psnr_db,rmse,outage_error,runtime_ms\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == reports.size() + 1);
}

TEST_CASE("sweep masks depend on scene and seed") {
  CHECK(sweep_mask_seed(0, 1) != sweep_mask_seed(1, 0));
  CHECK(sweep_mask_seed(3, 4) == sweep_mask_seed(3, 4));
}

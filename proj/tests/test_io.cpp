#include "rme/config.hpp"
#include "rme/error.hpp"
#include "rme/io.hpp"
#include "rme/radio.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

using namespace rme;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / ("rme_io_test_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

UnrolledModel small_model() {
  ModelInit mi;
  mi.k_blocks = 2;
  mi.hidden_channels = 4;
  mi.seed = 3;
  return make_model(mi);
}

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("no error thrown");
  return ErrorCategory::InvalidArgument;
}

} // namespace

TEST_CASE("tensor files round-trip bitwise") {
  std::mt19937_64 g(41);
  Tensor3 t(Dims{3, 5, 2});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::ldexp(double(g() >> 11), -53) - 0.5;
  const io::Bytes b = io::encode_tensor(t);
  CHECK(b.size() == 16 + t.size() * 8);
  CHECK(std::memcmp(b.data(), "RMT1", 4) == 0);
  CHECK(io::decode_tensor(b) == t);
  CHECK(io::encode_tensor(io::decode_tensor(b)) == b);

  const fs::path p = temp_dir() / "t.rmt";
  io::write_tensor(p.string(), t);
  CHECK(io::read_tensor(p.string()) == t);
  CHECK(!fs::exists(p.string() + ".tmp." + std::to_string(::getpid())));
}

TEST_CASE("tensor decoding rejects damaged files") {
  const io::Bytes good = io::encode_tensor(Tensor3(Dims{2, 2, 1}, 0.5));
  io::Bytes bad = good;
  bad[0] = 'X';
  CHECK(category_of([&] { io::decode_tensor(bad); }) == ErrorCategory::Format);
  bad = good;
  bad.pop_back();
  CHECK(category_of([&] { io::decode_tensor(bad); }) == ErrorCategory::Format);
  Tensor3 nan_t(Dims{1, 1, 1}, std::nan(""));
  CHECK(category_of([&] { io::decode_tensor(io::encode_tensor(nan_t)); }) == ErrorCategory::Format);
}

TEST_CASE("mask files round-trip and validate bytes") {
  const ObservationMask m = sample_mask(7, 9, 30.0, 2);
  const io::Bytes b = io::encode_mask(m);
  CHECK(b.size() == 12 + 63);
  CHECK(io::decode_mask(b) == m);
  io::Bytes bad = b;
  bad[12] = 2;
  CHECK(category_of([&] { io::decode_mask(bad); }) == ErrorCategory::Format);
}

TEST_CASE("checkpoints round-trip bitwise") {
  const UnrolledModel m = small_model();
  const io::Bytes b = io::encode_checkpoint(m);
  const UnrolledModel back = io::decode_checkpoint(b);
  CHECK(io::encode_checkpoint(back) == b);
  CHECK(back.mapper == m.mapper);
  CHECK(back.alpha == m.alpha);
  CHECK(back.rho == m.rho);
  CHECK(back.omega == m.omega);
  for (std::size_t k = 0; k < m.k_blocks(); ++k) {
    for (std::size_t i = 0; i < kNumScalars; ++i)
      CHECK(back.blocks[k].log_scalars[i] == m.blocks[k].log_scalars[i]);
    CHECK(back.blocks[k].v.kernels == m.blocks[k].v.kernels);
    CHECK(back.blocks[k].w.biases == m.blocks[k].w.biases);
  }
}

TEST_CASE("checkpoint CRC catches every single-byte corruption") {
  const io::Bytes b = io::encode_checkpoint(small_model());
  std::mt19937_64 g(42);
  for (std::size_t pos = 0; pos < b.size(); pos += 7) {
    io::Bytes bad = b;
    bad[pos] ^= static_cast<std::uint8_t>(1 + g() % 255);
    INFO("byte " << pos);
    CHECK(category_of([&] { io::decode_checkpoint(bad); }) == ErrorCategory::Format);
  }
  io::Bytes trunc(b.begin(), b.end() - 5);
  CHECK(category_of([&] { io::decode_checkpoint(trunc); }) == ErrorCategory::Format);
}

TEST_CASE("PGM and CSV export") {
  Tensor3 t(Dims{2, 3, 2});
  const double vals[] = {-0.5, 0.0, 0.5, 1.0, 2.0, 0.2};
  for (std::size_t i = 0; i < 6; ++i) t(i / 3, i % 3, 1) = vals[i];
  const io::Bytes pgm = io::export_pgm(t, 1);
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(pgm.size() == header.size() + 6);
  CHECK(std::string(pgm.begin(), pgm.begin() + header.size()) == header);
  const std::uint8_t want[] = {0, 0, 128, 255, 255, 51};
  for (std::size_t i = 0; i < 6; ++i) CHECK(pgm[header.size() + i] == want[i]);
  CHECK(io::export_csv(t, 1) == "-0.5,0,0.5\n1,2,0.2\n");
  CHECK(category_of([&] { io::export_pgm(t, 2); }) == ErrorCategory::InvalidArgument);
}

TEST_CASE("CSV import normalizes per band and records ranges") {
  const fs::path dir = temp_dir();
  {
    std::ofstream(dir / "b0.csv") << "-80,-60\n-70,-90\n";
    std::ofstream(dir / "b1.csv") << "1, 3\n2, 5\n";
  }
  const io::ImportedTensor t = io::import_csv({(dir / "b0.csv").string(), (dir / "b1.csv").string()});
  CHECK(t.tensor.dims() == Dims{2, 2, 2});
  CHECK(t.tensor(0, 1, 0) == doctest::Approx(1.0));
  CHECK(t.tensor(1, 1, 0) == doctest::Approx(0.0));
  CHECK(t.tensor(1, 0, 1) == doctest::Approx(0.25));
  CHECK(io::ranges_sidecar(t) == "0 -90 -60\n1 1 5\n");
  std::ofstream(dir / "bad.csv") << "1,2\n3\n";
  CHECK(category_of([&] { io::import_csv({(dir / "bad.csv").string()}); }) == ErrorCategory::Format);
}

TEST_CASE("config parsing") {
  const Config def = parse_config("");
  CHECK(def.admm.max_iters == 200);
  CHECK(def.train.epochs == 10);
  CHECK(def.model.k_blocks == 5);

  const Config c = parse_config("# comment\nadmm.max_iters=50\n\n  train.lr = 0.002  # trailing\nscene.seed=9\n"
                                "admm.alpha=0.5,0.25,0.25\nsweep.methods=halrtc,rbf\nmodel.residual=false\n");
  CHECK(c.admm.max_iters == 50);
  CHECK(c.train.lr == 0.002);
  CHECK(c.scene.seed == 9);
  CHECK(c.admm.alpha == std::array<double, 3>{0.5, 0.25, 0.25});
  CHECK(c.sweep.methods == std::vector<std::string>{"halrtc", "rbf"});
  CHECK(!c.model.residual);

  try {
    parse_config("bogus.key=1\n");
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Config);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus.key") != std::string::npos);
  }
  try {
    parse_config("admm.mu=0.1\nadmm.max_iters=many\n");
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Config);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("admm.max_iters") != std::string::npos);
  }
  CHECK(category_of([] { parse_config("admm.mu\n"); }) == ErrorCategory::Config);
}

TEST_CASE("every documented hyperparameter group is addressable") {
  const auto keys = config_keys();
  for (const char* k : {"admm.lambda", "admm.delta", "train.epochs", "train.batch_size", "train.seed",
                        "scene.seed", "scene.shadow_sigma", "model.k_blocks", "model.omega", "halrtc.rho",
                        "eval.outage_threshold"})
    CHECK(std::find(keys.begin(), keys.end(), k) != keys.end());
}

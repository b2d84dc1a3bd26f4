#pragma once

// key=value configuration. Keys are dotted (admm.mu, train.epochs, ...),
// '#' starts a comment, blank lines are ignored, and unknown keys are errors.

#include "rme/admm.hpp"
#include "rme/radio.hpp"
#include "rme/unrolled.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rme {

struct SweepConfig {
  std::vector<std::string> methods{"halrtc", "rbf", "ldpl"};
  std::vector<double> sparsities{1.0, 5.0, 10.0, 20.0};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t n_scenes = 5;
  std::uint64_t scene_seed = 1000;
  std::string model;  // checkpoint for the "unroll" method
};

struct Config {
  AdmmHyperParams admm;
  HalrtcParams halrtc;
  TrainConfig train;
  std::size_t train_scenes = 50;
  double train_sparsity = 10.0;
  SceneSpec scene;
  ModelInit model;
  RbfOptions rbf;
  double outage_threshold = 0.2;
  SweepConfig sweep;
};

Config parse_config(std::string_view text);
Config load_config(const std::string& path);

// Every accepted key, for help output and tests.
std::vector<std::string> config_keys();

} // namespace rme

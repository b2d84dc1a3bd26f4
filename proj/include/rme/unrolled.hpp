#pragma once

#include "rme/autodiff.hpp"
#include "rme/tensor.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rme {

enum class Activation : std::uint8_t { None = 0, Relu = 1 };

struct LayerSpec {
  std::size_t out_channels = 16;
  std::size_t kernel = 3;
  Activation activation = Activation::Relu;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Topology shared by every proximal mapper; each block owns its own weights.
struct MapperSpec {
  std::vector<LayerSpec> layers;
  bool residual = true;

  // 3x3 convs, channels k->16->16->k, ReLU on the hidden layers, residual.
  static MapperSpec standard(std::size_t k_bands, std::size_t hidden = 16);
  void validate(std::size_t k_bands) const;
  friend bool operator==(const MapperSpec&, const MapperSpec&) = default;
};

struct MapperWeights {
  std::vector<Tensor3> kernels;  // (ksize*ksize, c_in, c_out)
  std::vector<Tensor3> biases;   // (1, 1, c_out)
};

enum ScalarIndex : std::size_t { kMu = 0, kTheta, kBeta, kLambda, kDelta, kNumScalars };

struct BlockParams {
  // Learnable positive scalars stored as logs: mu, theta, beta, lambda, delta.
  std::array<Tensor3, kNumScalars> log_scalars;
  MapperWeights v;  // P-branch mapper
  MapperWeights w;  // Q-branch mapper

  double scalar(ScalarIndex i) const;
};

struct UnrolledModel {
  std::size_t k_bands = 3;
  MapperSpec mapper;
  std::vector<BlockParams> blocks;
  std::array<double, 3> alpha{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double rho = 1e-2;
  double omega = 0.8;

  std::size_t k_blocks() const noexcept { return blocks.size(); }
  void validate() const;

  // Parameters that influence the output. The final block's delta and
  // mappers act only on iterates the output never reads, so they are stored
  // but not trained.
  std::vector<Tensor3*> trainable();
  std::vector<const Tensor3*> trainable() const;
  std::vector<std::string> trainable_names() const;
};

struct ModelInit {
  std::size_t k_blocks = 5;
  std::size_t k_bands = 3;
  std::size_t grid = 64;  // max(h, w); sets lambda = 1/sqrt(grid)
  double mu = 1e-2;
  double theta = 1e-2;
  double beta = 1e-2;
  double delta = 1e-3;
  double rho = 1e-2;
  double omega = 0.8;
  std::size_t hidden_channels = 16;
  bool residual = true;
  double weight_std = 0.05;
  bool zero_weights = false;
  std::uint64_t seed = 0;
};

UnrolledModel make_model(const ModelInit& init);

struct ForwardResult {
  Tensor3 x;
  Tensor3 e;
  Tensor3 d_hat;
  // ||P_Omega(X_k + E_k + N_k - D)||_F after each block (graph-free path only).
  std::vector<double> block_residual;
};

// Graph-free forward pass. X starts at P_Omega(D), everything else at zero.
ForwardResult forward(const UnrolledModel& model, const Tensor3& d, const ObservationMask& mask,
                      bool trace = false);

// Raw estimate X + E (unclamped).
Tensor3 infer(const UnrolledModel& model, const Tensor3& d, const ObservationMask& mask);

Tensor3 clamp01(const Tensor3& t);

// omega * mean|d_hat - truth| + (1 - omega) * mean (d_hat - ldpl)^2
double composite_loss(const Tensor3& d_hat, const Tensor3& truth, const Tensor3& ldpl,
                      double omega);
ad::Var composite_loss(ad::Var d_hat, ad::Var truth, ad::Var ldpl, double omega);

/// Forward pass recorded on a tape, with every model parameter registered as
/// a leaf. `params` lines up with UnrolledModel::trainable().
struct TapedForward {
  ad::Var x;
  ad::Var e;
  ad::Var d_hat;
  std::vector<ad::Var> params;
};
TapedForward forward_taped(ad::Tape& tape, const UnrolledModel& model, const Tensor3& d,
                           const ObservationMask& mask);

struct TrainSample {
  Tensor3 truth;
  ObservationMask mask;
  Tensor3 ldpl;  // physics prior on the same mask
};

// Builds the training sample for a ground-truth map: LDPL fit on the
// observed cells of a normalized map.
TrainSample make_sample(const Tensor3& truth, const ObservationMask& mask);

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 1;
  double lr = 1e-3;
  double lr_decay = 1.0;  // multiplicative per epoch
  std::uint64_t seed = 0;
  double val_fraction = 0.2;  // 0 disables validation

  void validate() const;
};

struct TrainResult {
  UnrolledModel model;              // best validation model (last model without validation)
  std::vector<double> step_loss;    // training loss per sample step
  std::vector<double> epoch_loss;   // mean training loss per epoch
  std::vector<double> val_loss;     // validation loss per epoch
  std::vector<double> best_val;     // best-so-far validation loss per epoch
};

using TrainProgress = std::function<void(int epoch, double train_loss, double val_loss)>;

TrainResult train(UnrolledModel model, const std::vector<TrainSample>& data,
                  const TrainConfig& cfg, const TrainProgress& progress = {});

double evaluate_loss(const UnrolledModel& model, const TrainSample& s);

} // namespace rme

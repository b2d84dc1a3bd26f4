#pragma once

// Small reverse-mode autodiff engine over Tensor3 values. The op set is fixed
// to what the unrolled network needs; there is no broadcasting, and scalars
// are 1x1x1 tensors. Nodes are appended to a tape in creation order, so the
// graph is acyclic and backward() is a single reverse sweep.

#include "rme/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rme::ad {

class Tape;

/// Handle to a node on a tape.
class Var {
public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor3& value() const;
  const Tensor3& grad() const;
  const Dims& dims() const { return value().dims(); }

private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
public:
  Var constant(Tensor3 value);
  Var parameter(Tensor3 value);

  const Tensor3& value(Var v) const { return nodes_.at(v.id()).value; }
  // Zero tensor if the node received no gradient.
  const Tensor3& grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  const std::string& op(Var v) const { return nodes_.at(v.id()).op; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards. The loss must be
  // a 1x1x1 node.
  void backward(Var loss);
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by the op implementations.
  using Backward = std::function<void(Tape&, std::size_t self)>;
  Var push(std::string op, Tensor3 value, std::vector<std::size_t> inputs, Backward back);
  Tensor3& grad_ref(std::size_t id);
  bool needs(std::size_t id) const { return nodes_[id].requires_grad; }
  const Tensor3& value_at(std::size_t id) const { return nodes_[id].value; }
  const Tensor3& grad_at(std::size_t id) const { return nodes_[id].grad; }

private:
  struct Node {
    std::string op;
    Tensor3 value;
    Tensor3 grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    Backward back;
  };
  std::vector<Node> nodes_;
  Tensor3 zero_scalar_;
};

// Elementwise, shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var exp(Var a);
Var relu(Var a);
Var scale(Var a, double s);
// a * s with s a 1x1x1 node.
Var scale(Var a, Var s);
Var add_const(Var a, double c);

// Same-padded, stride-1 convolution with full channel mixing.
// kernel dims: (ksize*ksize, c_in, c_out), tap index = dr*ksize + dc.
// bias dims: (1, 1, c_out).
Var conv2d(Var x, Var kernel, Var bias);

Var soft_threshold(Var x, Var tau);
// Mode-wise SVT. Backward treats the singular vectors as constants, so
// gradients flow only through the retained singular values (approximate).
Var svt(Var x, int mode, Var tau);
Var project(Var x, const ObservationMask& mask);
// psi restricted to Omega scaled onto the Frobenius ball of radius delta;
// off-Omega entries pass through.
Var noise_ball(Var psi, const ObservationMask& mask, Var delta);

Var inner(Var a, Var b);     // sum of products -> 1x1x1
Var l1_loss(Var a, Var b);   // mean |a - b|
Var mse_loss(Var a, Var b);  // mean (a - b)^2

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// Forward kernels shared with the graph-free inference path.
Tensor3 conv2d_forward(const Tensor3& x, const Tensor3& kernel, const Tensor3& bias);
Tensor3 relu_forward(const Tensor3& x);
std::size_t conv_ksize(const Tensor3& kernel);

/// Adam with bias correction.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor3> m;
  std::vector<Tensor3> v;
};

// Updates params in place. Moment buffers are created on the first call.
void adam_step(const std::vector<Tensor3*>& params, const std::vector<const Tensor3*>& grads,
               AdamState& state);

} // namespace rme::ad

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cnndc/layers.hpp"
#include "cnndc/tensor.hpp"

namespace cnndc {

using LayerSpec = std::variant<ConvLayerSpec, PoolLayerSpec, FcLayerSpec>;

// Layer topology. Every conv and every fc except the last is followed by
// ReLU; the last layer must be fc and emits raw logits. The tensor feeding
// the first fc is flattened in (h, w, c) order.
struct NetworkSpec {
  Shape3 input{71, 71, 1};
  std::vector<LayerSpec> layers;
  std::size_t class_count = 2;

  // conv4/16 > pool > conv3/32 > pool > conv3/64 > pool > conv2/128 > pool
  // > fc256 > fc64 > fc2, giving 71>68>34>32>16>14>7>6>3 with no remainder.
  static NetworkSpec reference();

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Output shape of every layer (fc outputs are 1x1xout_dim). Throws
// ShapeError naming the first layer that does not fit.
std::vector<Shape3> infer_shapes(const NetworkSpec& spec);

// Full structural check: shape chain, padding, fc input sizes, final fc
// width equal to class_count.
void validate(const NetworkSpec& spec);

// True for exactly 4 conv, 4 pool and 3 fc layers.
bool has_reference_topology(const NetworkSpec& spec);

// Compact text form, e.g. "c16k4,p,c32k3,p,f64,f2" (fc input sizes are
// inferred). Used by the CLI to override the architecture.
NetworkSpec parse_architecture(std::string_view text, Shape3 input = {71, 71, 1},
                               std::size_t class_count = 2);
std::string format_architecture(const NetworkSpec& spec);

struct LayerParams {
  std::vector<double> weights;
  std::vector<double> biases;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct NetworkParams {
  std::vector<LayerParams> layers;  // one entry per layer; empty for pooling
  std::uint64_t rng_seed = 0;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct Gradients {
  std::vector<LayerParams> layers;
  friend bool operator==(const Gradients&, const Gradients&) = default;
};

std::size_t parameter_count(const NetworkSpec& spec);

// All-zero arrays shaped after `spec`.
NetworkParams zero_params(const NetworkSpec& spec);
Gradients zero_gradients(const NetworkSpec& spec);

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed);

// Throws ShapeError if any array size disagrees with `spec`.
void check_params(const NetworkSpec& spec, const NetworkParams& params);

struct Model {
  NetworkSpec spec;
  NetworkParams params;
};

// Reusable per-thread buffers for forward/backward passes.
class Workspace {
 public:
  Workspace() = default;

 private:
  friend class NetworkPass;
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::size_t>> argmax_;
  std::vector<double> delta_;
  std::vector<double> delta_prev_;
  std::vector<double> scratch_;
};

std::vector<double> forward_logits(const Model& model, const Tensor3& input);
std::vector<double> forward_logits(const Model& model, const Tensor3& input, Workspace& ws);

struct BackwardResult {
  double loss = 0.0;
  std::vector<double> logit_grad;
  Gradients grads;
};

// Gradient of softmax cross-entropy for a single sample.
BackwardResult backward(const Model& model, const Tensor3& input, std::size_t label);

// Adds the single-sample gradient into `acc` and returns the loss.
double accumulate_gradient(const Model& model, const Tensor3& input, std::size_t label,
                           Gradients& acc, Workspace& ws);

struct LabeledTensor {
  const Tensor3* input = nullptr;
  std::size_t label = 0;
};

struct BatchGradient {
  double mean_loss = 0.0;
  Gradients grads;  // mean over the batch
};

BatchGradient batch_gradient(const Model& model, std::span<const LabeledTensor> batch,
                             Workspace& ws);

struct Prediction {
  int label = 0;
  double probability = 0.0;  // probability of class 1
};

// Argmax of the softmax; equal logits resolve to label 0. `patch` must
// match the network input shape.
Prediction predict(const Model& model, const Tensor3& patch);
Prediction predict(const Model& model, const Tensor3& patch, Workspace& ws);

}  // namespace cnndc

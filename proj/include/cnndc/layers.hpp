#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cnndc/tensor.hpp"

namespace cnndc {

// Square-kernel convolution. Weights are laid out kernel-major, then
// (dh, dw, c), so kernel k occupies [k * F*F*D, (k+1) * F*F*D).
struct ConvLayerSpec {
  std::size_t kernel_count = 0;
  std::size_t kernel_size = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t weight_count(std::size_t in_channels) const {
    return kernel_size * kernel_size * in_channels * kernel_count;
  }
  std::size_t bias_count() const { return kernel_count; }

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

// 2x2 max pooling with stride 2 is the only supported configuration.
struct PoolLayerSpec {
  std::size_t window = 2;
  std::size_t stride = 2;

  friend bool operator==(const PoolLayerSpec&, const PoolLayerSpec&) = default;
};

// Weight matrix is out_dim x in_dim, row-major.
struct FcLayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  std::size_t weight_count() const { return in_dim * out_dim; }
  std::size_t bias_count() const { return out_dim; }

  friend bool operator==(const FcLayerSpec&, const FcLayerSpec&) = default;
};

enum class Activation { none, relu };

// H_o = (H_i - F + 2P) / S + 1, W_o likewise, D_o = K. Throws ShapeError
// (mentioning `layer`) when the division is inexact or the result is empty.
Shape3 conv_output_shape(const Shape3& in, const ConvLayerSpec& spec,
                         std::string_view layer = "conv");

// Halves height and width; odd dimensions are rejected.
Shape3 pool_output_shape(const Shape3& in, const PoolLayerSpec& spec = {},
                         std::string_view layer = "pool");

// Pre-activation convolution output.
Tensor3 conv_forward(const Tensor3& in, std::span<const double> weights,
                     std::span<const double> biases, const ConvLayerSpec& spec);

struct PoolOutput {
  Tensor3 output;
  // Flat input index of the maximum chosen for every output element.
  std::vector<std::size_t> argmax;
};

PoolOutput maxpool_forward(const Tensor3& in);

std::vector<double> fc_forward(std::span<const double> in, std::span<const double> weights,
                               std::span<const double> biases, const FcLayerSpec& spec,
                               Activation activation);

struct SoftmaxLoss {
  double loss = 0.0;
  std::vector<double> probs;
};

// Numerically stable softmax followed by -log(probs[label]).
SoftmaxLoss softmax_cross_entropy(std::span<const double> logits, std::size_t label);

}  // namespace cnndc

#include "cnndc/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cnndc/errors.hpp"
#include "kernels.hpp"

namespace cnndc {

namespace {

std::size_t conv_extent(std::size_t in, const ConvLayerSpec& spec, std::string_view layer,
                        const char* axis) {
  const std::size_t padded = in + 2 * spec.padding;
  if (spec.kernel_size == 0 || spec.stride == 0 || spec.kernel_count == 0) {
    throw ShapeError(std::string(layer) + ": kernel size, stride and kernel count must be positive");
  }
  if (padded < spec.kernel_size) {
    throw ShapeError(std::string(layer) + ": kernel " + std::to_string(spec.kernel_size) +
                     " larger than input " + axis + " " + std::to_string(in));
  }
  const std::size_t span = padded - spec.kernel_size;
  if (span % spec.stride != 0) {
    throw ShapeError(std::string(layer) + ": input " + axis + " " + std::to_string(in) +
                     " minus kernel " + std::to_string(spec.kernel_size) +
                     " is not divisible by stride " + std::to_string(spec.stride));
  }
  return span / spec.stride + 1;
}

}  // namespace

Shape3 conv_output_shape(const Shape3& in, const ConvLayerSpec& spec, std::string_view layer) {
  return {conv_extent(in.height, spec, layer, "height"), conv_extent(in.width, spec, layer, "width"),
          spec.kernel_count};
}

Shape3 pool_output_shape(const Shape3& in, const PoolLayerSpec& spec, std::string_view layer) {
  if (spec.window != 2 || spec.stride != 2) {
    throw ShapeError(std::string(layer) + ": only 2x2 pooling with stride 2 is supported");
  }
  if (in.height % 2 != 0 || in.width % 2 != 0 || in.height == 0 || in.width == 0) {
    throw ShapeError(std::string(layer) + ": pooling needs even, non-zero dimensions, got " +
                     to_string(in));
  }
  return {in.height / 2, in.width / 2, in.channels};
}

Tensor3 conv_forward(const Tensor3& in, std::span<const double> weights,
                     std::span<const double> biases, const ConvLayerSpec& spec) {
  if (spec.padding != 0) throw ShapeError("conv: zero padding is not supported");
  const Shape3 out_shape = conv_output_shape(in.shape(), spec);
  if (weights.size() != spec.weight_count(in.channels())) {
    throw ShapeError("conv: expected " + std::to_string(spec.weight_count(in.channels())) +
                     " weights, got " + std::to_string(weights.size()));
  }
  if (biases.size() != spec.bias_count()) {
    throw ShapeError("conv: expected " + std::to_string(spec.bias_count()) + " biases, got " +
                     std::to_string(biases.size()));
  }
  const std::size_t positions = out_shape.height * out_shape.width;
  const std::size_t field = spec.kernel_size * spec.kernel_size * in.channels();
  std::vector<double> columns(positions * field);
  kernels::im2col(in.data().data(), in.shape(), spec.kernel_size, spec.stride, out_shape,
                  columns.data());
  Tensor3 out(out_shape);
  kernels::conv_gemm(columns.data(), positions, field, weights.data(), biases.data(),
                     spec.kernel_count, out.data().data());
  return out;
}

PoolOutput maxpool_forward(const Tensor3& in) {
  const Shape3 out_shape = pool_output_shape(in.shape());
  PoolOutput result{Tensor3(out_shape), std::vector<std::size_t>(out_shape.size())};
  kernels::maxpool(in.data().data(), in.shape(), result.output.data().data(),
                   result.argmax.data());
  return result;
}

std::vector<double> fc_forward(std::span<const double> in, std::span<const double> weights,
                               std::span<const double> biases, const FcLayerSpec& spec,
                               Activation activation) {
  if (in.size() != spec.in_dim) {
    throw ShapeError("fc: expected input length " + std::to_string(spec.in_dim) + ", got " +
                     std::to_string(in.size()));
  }
  if (weights.size() != spec.weight_count() || biases.size() != spec.bias_count()) {
    throw ShapeError("fc: parameter arrays do not match " + std::to_string(spec.out_dim) + "x" +
                     std::to_string(spec.in_dim));
  }
  std::vector<double> out(spec.out_dim);
  kernels::VectorMap result(out.data(), static_cast<Eigen::Index>(out.size()));
  kernels::ConstMatrixMap w(weights.data(), static_cast<Eigen::Index>(spec.out_dim),
                            static_cast<Eigen::Index>(spec.in_dim));
  result.noalias() = w * kernels::ConstVectorMap(in.data(), static_cast<Eigen::Index>(in.size()));
  result += kernels::ConstVectorMap(biases.data(), static_cast<Eigen::Index>(biases.size()));
  if (activation == Activation::relu) kernels::relu_inplace(out.data(), out.size());
  return out;
}

SoftmaxLoss softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  if (logits.empty() || label >= logits.size()) {
    throw ShapeError("softmax: label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " logits");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  SoftmaxLoss result;
  result.probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    result.probs[i] = std::exp(logits[i] - peak);
    total += result.probs[i];
  }
  for (double& p : result.probs) p /= total;
  // log-sum-exp form keeps the loss exact when probs[label] underflows.
  result.loss = std::log(total) - (logits[label] - peak);
  return result;
}

}  // namespace cnndc

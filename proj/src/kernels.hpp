#pragma once

// Eigen-backed building blocks shared by the single-layer API and the
// network forward/backward passes. All buffers are HWC row-major.

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <cstring>
#include <limits>

#include "cnndc/tensor.hpp"

namespace cnndc::kernels {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Unrolls every receptive field into one row of `columns`
// ((Ho*Wo) x (F*F*D)). Each (dh) slice of a field is contiguous in HWC.
inline void im2col(const double* in, const Shape3& in_shape, std::size_t kernel,
                   std::size_t stride, const Shape3& out_shape, double* columns) {
  const std::size_t depth = in_shape.channels;
  const std::size_t span = kernel * depth;
  const std::size_t row_len = kernel * span;
  for (std::size_t ho = 0; ho < out_shape.height; ++ho) {
    for (std::size_t wo = 0; wo < out_shape.width; ++wo) {
      double* row = columns + (ho * out_shape.width + wo) * row_len;
      for (std::size_t dh = 0; dh < kernel; ++dh) {
        const double* src = in + ((ho * stride + dh) * in_shape.width + wo * stride) * depth;
        std::memcpy(row + dh * span, src, span * sizeof(double));
      }
    }
  }
}

// Adjoint of im2col: scatters-adds column gradients back into `in_grad`,
// which must be zeroed by the caller.
inline void col2im(const double* columns, const Shape3& in_shape, std::size_t kernel,
                   std::size_t stride, const Shape3& out_shape, double* in_grad) {
  const std::size_t depth = in_shape.channels;
  const std::size_t span = kernel * depth;
  const std::size_t row_len = kernel * span;
  for (std::size_t ho = 0; ho < out_shape.height; ++ho) {
    for (std::size_t wo = 0; wo < out_shape.width; ++wo) {
      const double* row = columns + (ho * out_shape.width + wo) * row_len;
      for (std::size_t dh = 0; dh < kernel; ++dh) {
        double* dst = in_grad + ((ho * stride + dh) * in_shape.width + wo * stride) * depth;
        const double* src = row + dh * span;
        for (std::size_t i = 0; i < span; ++i) dst[i] += src[i];
      }
    }
  }
}

// out (P x K) = columns (P x FFD) * weights^T (FFD x K) + bias.
inline void conv_gemm(const double* columns, std::size_t positions, std::size_t field,
                      const double* weights, const double* biases, std::size_t kernels,
                      double* out) {
  ConstMatrixMap cols(columns, static_cast<Eigen::Index>(positions),
                      static_cast<Eigen::Index>(field));
  ConstMatrixMap w(weights, static_cast<Eigen::Index>(kernels), static_cast<Eigen::Index>(field));
  MatrixMap result(out, static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(kernels));
  result.noalias() = cols * w.transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(biases, static_cast<Eigen::Index>(kernels));
  result.rowwise() += b;
}

// 2x2 / stride 2 max pool; ties keep the first element in (dh, dw) scan order.
inline void maxpool(const double* in, const Shape3& in_shape, double* out,
                    std::size_t* argmax) {
  const std::size_t oh = in_shape.height / 2;
  const std::size_t ow = in_shape.width / 2;
  const std::size_t depth = in_shape.channels;
  for (std::size_t h = 0; h < oh; ++h) {
    for (std::size_t w = 0; w < ow; ++w) {
      for (std::size_t c = 0; c < depth; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        for (std::size_t dh = 0; dh < 2; ++dh) {
          for (std::size_t dw = 0; dw < 2; ++dw) {
            const std::size_t idx = ((2 * h + dh) * in_shape.width + (2 * w + dw)) * depth + c;
            if (in[idx] > best || (dh == 0 && dw == 0)) {
              best = in[idx];
              best_index = idx;
            }
          }
        }
        const std::size_t o = (h * ow + w) * depth + c;
        out[o] = best;
        if (argmax != nullptr) argmax[o] = best_index;
      }
    }
  }
}

inline void relu_inplace(double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) data[i] = std::max(data[i], 0.0);
}

}  // namespace cnndc::kernels

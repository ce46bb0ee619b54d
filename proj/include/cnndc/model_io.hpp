#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "cnndc/network.hpp"

namespace cnndc {

// Binary model container, all integers and floats little-endian:
//
//   "CNNDC"            5 bytes magic
//   u32 version        kModelFormatVersion
//   u32 input h, w, c
//   u32 class_count
//   u32 layer_count
//   per layer: u8 kind (0 conv, 1 pool, 2 fc) followed by
//     conv: u32 kernel_count, kernel_size, stride, padding
//     pool: u32 window, stride
//     fc:   u32 in_dim, out_dim
//   per layer in order: weights then biases as f64
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);

// Throws IoError on a bad magic, an unknown version, truncation or
// trailing bytes; ShapeError if the stored spec does not validate.
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace cnndc

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cnndc/geometry.hpp"
#include "cnndc/ground_truth.hpp"
#include "cnndc/image.hpp"
#include "cnndc/tensor.hpp"

namespace cnndc {

inline constexpr std::size_t kPatchSize = 71;
// Patch centers within this many pixels (per axis) of a ground-truth center
// are positives: a 7x7 square.
inline constexpr int kPositiveHalfWidth = 3;

struct LabeledPatch {
  Pixel center;
  int label = 0;

  friend bool operator==(const LabeledPatch&, const LabeledPatch&) = default;
};

// True when the size x size window centered at `center` lies inside the image.
bool patch_fits(std::size_t width, std::size_t height, Pixel center,
                std::size_t size = kPatchSize);

// Copies the window into a size x size x 1 tensor. `size` must be odd.
// Throws std::out_of_range when the window leaves the image.
Tensor3 extract_patch(const GrayImage& image, Pixel center, std::size_t size = kPatchSize);

// One entry per position whose full window fits, row-major. Label 1 iff
// |p.x - c.x| <= 3 and |p.y - c.y| <= 3 for some ground-truth center c.
std::vector<LabeledPatch> label_patches(const GrayImage& image, const GroundTruth& gt,
                                        std::size_t size = kPatchSize);

// Keeps every positive, draws ratio * positives negatives without
// replacement, and shuffles the result. Throws ConfigError when there are
// no positives or too few negatives.
std::vector<LabeledPatch> sample_training_set(std::span<const LabeledPatch> labeled,
                                              std::size_t ratio, std::uint64_t seed);

// Window centers x = half, half + stride, ... while the window fits, same
// for y; row-major. Empty when the image is smaller than the window.
std::vector<Pixel> sliding_positions(std::size_t width, std::size_t height, std::size_t stride,
                                     std::size_t size = kPatchSize);

}  // namespace cnndc

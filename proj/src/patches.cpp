#include "cnndc/patches.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cnndc/errors.hpp"
#include "cnndc/rng.hpp"

namespace cnndc {

bool patch_fits(std::size_t width, std::size_t height, Pixel center, std::size_t size) {
  const auto half = static_cast<long>(size / 2);
  return center.x >= half && center.y >= half &&
         static_cast<long>(center.x) + half < static_cast<long>(width) &&
         static_cast<long>(center.y) + half < static_cast<long>(height);
}

Tensor3 extract_patch(const GrayImage& image, Pixel center, std::size_t size) {
  if (size % 2 == 0) throw ShapeError("patch size must be odd");
  if (!patch_fits(image.width(), image.height(), center, size)) {
    throw std::out_of_range("patch centered at (" + std::to_string(center.x) + "," +
                            std::to_string(center.y) + ") leaves the " +
                            std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                            " image");
  }
  const std::size_t x0 = static_cast<std::size_t>(center.x) - size / 2;
  const std::size_t y0 = static_cast<std::size_t>(center.y) - size / 2;
  Tensor3 patch({size, size, 1});
  auto out = patch.data();
  for (std::size_t r = 0; r < size; ++r) {
    const auto row = image.pixels().subspan((y0 + r) * image.width() + x0, size);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(r * size));
  }
  return patch;
}

std::vector<LabeledPatch> label_patches(const GrayImage& image, const GroundTruth& gt,
                                        std::size_t size) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  // Mark every pixel inside some ground-truth square.
  std::vector<std::uint8_t> positive(w * h, 0);
  for (const Point2& c : gt) {
    const long x_lo = static_cast<long>(std::ceil(c.x - kPositiveHalfWidth));
    const long x_hi = static_cast<long>(std::floor(c.x + kPositiveHalfWidth));
    const long y_lo = static_cast<long>(std::ceil(c.y - kPositiveHalfWidth));
    const long y_hi = static_cast<long>(std::floor(c.y + kPositiveHalfWidth));
    for (long y = std::max(y_lo, 0L); y <= std::min(y_hi, static_cast<long>(h) - 1); ++y) {
      for (long x = std::max(x_lo, 0L); x <= std::min(x_hi, static_cast<long>(w) - 1); ++x) {
        positive[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = 1;
      }
    }
  }

  std::vector<LabeledPatch> out;
  for (const Pixel& p : sliding_positions(w, h, 1, size)) {
    out.push_back({p, positive[static_cast<std::size_t>(p.y) * w + static_cast<std::size_t>(p.x)]});
  }
  return out;
}

std::vector<LabeledPatch> sample_training_set(std::span<const LabeledPatch> labeled,
                                              std::size_t ratio, std::uint64_t seed) {
  std::vector<LabeledPatch> out;
  std::vector<LabeledPatch> negatives;
  for (const auto& p : labeled) (p.label == 1 ? out : negatives).push_back(p);
  if (out.empty()) throw ConfigError("no positive patches to sample from");
  const std::size_t wanted = ratio * out.size();
  if (negatives.size() < wanted) {
    throw ConfigError("need " + std::to_string(wanted) + " negative patches for ratio 1:" +
                      std::to_string(ratio) + ", only " + std::to_string(negatives.size()) +
                      " available");
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first `wanted` slots become a uniform sample.
  for (std::size_t i = 0; i < wanted; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
    std::swap(negatives[i], negatives[j]);
  }
  out.insert(out.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(wanted));
  rng.shuffle(std::span<LabeledPatch>(out));
  return out;
}

std::vector<Pixel> sliding_positions(std::size_t width, std::size_t height, std::size_t stride,
                                     std::size_t size) {
  if (stride == 0) throw ConfigError("stride must be at least 1");
  std::vector<Pixel> out;
  if (width < size || height < size) return out;
  const std::size_t half = size / 2;
  for (std::size_t y = half; y + (size - half - 1) < height; y += stride) {
    for (std::size_t x = half; x + (size - half - 1) < width; x += stride) {
      out.push_back({static_cast<int>(x), static_cast<int>(y)});
    }
  }
  return out;
}

}  // namespace cnndc

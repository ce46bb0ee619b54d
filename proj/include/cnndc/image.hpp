#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cnndc {

// Row-major grayscale image with intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  // Throws ConfigError on a size mismatch or any value outside [0, 1].
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  double& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  double at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

// Rec.601 luma of an 8-bit RGB triple, scaled to [0, 1].
double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Reads binary PGM (P5, maxval <= 255) or 8-bit PNG (gray, gray+alpha,
// RGB, RGBA; alpha is ignored). Throws IoError naming the path.
GrayImage load_image(const std::filesystem::path& path);

// Decoders over in-memory file contents.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
GrayImage decode_png(std::span<const std::uint8_t> bytes);

// 8-bit quantisation used by the writers: round(v * 255).
std::vector<std::uint8_t> quantize(const GrayImage& image);

std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
std::vector<std::uint8_t> encode_png(const GrayImage& image);

// Writes PNG when the extension is ".png", PGM otherwise.
void save_image(const GrayImage& image, const std::filesystem::path& path);

}  // namespace cnndc

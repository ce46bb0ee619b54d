#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "cnndc/ground_truth.hpp"
#include "cnndc/image.hpp"

namespace cnndc {

// Scene parameters for bright circular bar ends on a darker background.
// Intensities are in [0, 1]; lengths in pixels.
struct SynthConfig {
  std::size_t width = 600;
  std::size_t height = 450;
  double diameter = 71.0;
  double diameter_jitter = 4.0;   // per-bar diameter uniform in mean +- jitter
  std::size_t bars_min = 8;
  std::size_t bars_max = 15;
  double min_spacing = 85.0;      // lower bound on center-to-center distance
  double background = 0.2;
  double foreground = 0.75;
  double foreground_jitter = 0.05;
  double shading = 0.15;          // darkening toward the rim, (r/R)^2 profile
  double gradient = 0.1;          // peak-to-peak linear illumination ramp
  double noise_sigma = 0.02;
  std::size_t blur_radius = 1;    // box blur half-width; 0 disables
  std::size_t max_attempts = 20000;  // placement draws per bar
  std::uint64_t seed = 1;

  // Throws ConfigError on inconsistent values.
  void validate() const;
};

// Parses "key = value" lines; '#' starts a comment. Unknown keys raise
// ConfigError, malformed lines ParseError.
SynthConfig parse_synth_config(std::istream& in);
SynthConfig load_synth_config(const std::filesystem::path& path);
std::string format_synth_config(const SynthConfig& cfg);

struct SynthScene {
  GrayImage image;
  GroundTruth centers;
};

// Places bars by rejection sampling on integer centers, renders discs with
// anti-aliased rims, then applies the ramp, box blur and clamped Gaussian
// noise. Deterministic in cfg.seed. Throws GenerationError when a bar
// cannot be placed within cfg.max_attempts draws.
SynthScene synth_generate(const SynthConfig& cfg);

}  // namespace cnndc

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cnndc/clustering.hpp"
#include "cnndc/geometry.hpp"
#include "cnndc/image.hpp"
#include "cnndc/network.hpp"

namespace cnndc {

struct DetectConfig {
  std::size_t stride = 6;
  double th_d = 20.0;
  MergeMode mode = MergeMode::transitive;
  std::size_t patch_size = 71;
  std::size_t threads = 0;  // 0: CNNDC_THREADS, else hardware concurrency

  void validate() const;
};

// Worker count for patch classification: CNNDC_THREADS when set to a
// positive integer, otherwise the hardware concurrency (at least 1).
std::size_t inference_threads();

struct Detection {
  std::string image_id;
  std::vector<Point2> candidates;  // positive window centers, row-major scan order
  ClusterSet clusters;
  std::vector<Point2> centers;
  std::size_t count = 0;
  double seconds = 0.0;            // classification + clustering wall time
  double classify_seconds = 0.0;
};

// Centers of the windows the model labels 1. Positions are split into
// contiguous chunks across `threads` workers and merged in input order, so
// the result does not depend on the thread count.
std::vector<Point2> classify_positions(const Model& model, const GrayImage& image,
                                       std::span<const Pixel> positions, std::size_t threads);

// Sliding-window classification followed by distance clustering.
Detection detect(const GrayImage& image, const Model& model, const DetectConfig& cfg,
                 std::string image_id = {});

// Re-clusters an existing candidate set (e.g. for a threshold sweep).
void recluster(Detection& detection, const DetectConfig& cfg);

// Copy of `image` with a 7x7 cross at every center (rounded to the nearest
// pixel, clipped to bounds). Marker pixels become 1 over dark pixels
// (< 0.5) and 0 over bright ones.
GrayImage render_overlay(const GrayImage& image, std::span<const Point2> centers);
void render_overlay(const GrayImage& image, std::span<const Point2> centers,
                    const std::filesystem::path& out);

}  // namespace cnndc

#include "cnndc/detect.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "cnndc/errors.hpp"
#include "cnndc/patches.hpp"

namespace cnndc {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void DetectConfig::validate() const {
  if (stride == 0) throw ConfigError("stride must be at least 1");
  DistanceThreshold{th_d};
  if (patch_size % 2 == 0) throw ConfigError("patch size must be odd");
}

std::size_t inference_threads() {
  if (const char* env = std::getenv("CNNDC_THREADS"); env != nullptr && *env != '\0') {
    std::size_t value = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc() || ptr != end || value == 0) {
      throw ConfigError("CNNDC_THREADS must be a positive integer");
    }
    return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Point2> classify_positions(const Model& model, const GrayImage& image,
                                       std::span<const Pixel> positions, std::size_t threads) {
  const std::size_t size = model.spec.input.height;
  std::vector<std::uint8_t> positive(positions.size(), 0);

  auto work = [&](std::size_t begin, std::size_t end) {
    Workspace ws;
    for (std::size_t i = begin; i < end; ++i) {
      positive[i] = predict(model, extract_patch(image, positions[i], size), ws).label == 1;
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(positions.size(), 1));
  if (threads == 1) {
    work(0, positions.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (positions.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(positions.size(), t * chunk);
      const std::size_t end = std::min(positions.size(), begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<Point2> candidates;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positive[i]) candidates.push_back(positions[i].to_point());
  }
  return candidates;
}

Detection detect(const GrayImage& image, const Model& model, const DetectConfig& cfg,
                 std::string image_id) {
  cfg.validate();
  if (model.spec.input != Shape3{cfg.patch_size, cfg.patch_size, 1}) {
    throw ShapeError("model input " + to_string(model.spec.input) + " does not match patch size " +
                     std::to_string(cfg.patch_size));
  }
  if (image.width() < cfg.patch_size || image.height() < cfg.patch_size) {
    throw ShapeError("image is smaller than the " + std::to_string(cfg.patch_size) + " px window");
  }
  const std::size_t threads = cfg.threads != 0 ? cfg.threads : inference_threads();

  Detection det;
  det.image_id = std::move(image_id);
  const auto start = std::chrono::steady_clock::now();
  const auto positions = sliding_positions(image.width(), image.height(), cfg.stride, cfg.patch_size);
  det.candidates = classify_positions(model, image, positions, threads);
  det.classify_seconds = seconds_since(start);
  recluster(det, cfg);
  return det;
}

void recluster(Detection& det, const DetectConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  det.clusters = dc_cluster(det.candidates, DistanceThreshold{cfg.th_d}, cfg.mode);
  det.centers = det.clusters.centers();
  det.count = det.clusters.count();
  det.seconds = det.classify_seconds + seconds_since(start);
}

GrayImage render_overlay(const GrayImage& image, std::span<const Point2> centers) {
  GrayImage out = image;
  const long w = static_cast<long>(image.width());
  const long h = static_cast<long>(image.height());
  auto mark = [&](long x, long y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const auto ux = static_cast<std::size_t>(x);
    const auto uy = static_cast<std::size_t>(y);
    out.at(ux, uy) = image.at(ux, uy) < 0.5 ? 1.0 : 0.0;
  };
  for (const Point2& c : centers) {
    const long cx = std::lround(c.x);
    const long cy = std::lround(c.y);
    for (long d = -3; d <= 3; ++d) {
      mark(cx + d, cy);
      mark(cx, cy + d);
    }
  }
  return out;
}

void render_overlay(const GrayImage& image, std::span<const Point2> centers,
                    const std::filesystem::path& out) {
  save_image(render_overlay(image, centers), out);
}

}  // namespace cnndc

#include "cnndc/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <functional>
#include <type_traits>
#include <vector>

#include "cnndc/errors.hpp"
#include "cnndc/rng.hpp"

namespace cnndc {

namespace {

double max_diameter(const SynthConfig& cfg) { return cfg.diameter + cfg.diameter_jitter; }

// Smallest distance from a center to the image border.
std::size_t border_margin(const SynthConfig& cfg) {
  return static_cast<std::size_t>(std::ceil(max_diameter(cfg) / 2.0));
}

template <typename T>
bool parse_value(std::string_view text, T& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

struct NamedField {
  const char* name;
  std::function<bool(SynthConfig&, std::string_view)> parse;
  std::function<std::string(const SynthConfig&)> format;
};

template <typename T>
NamedField field(const char* name, T SynthConfig::*member) {
  return {name,
          [member](SynthConfig& cfg, std::string_view text) { return parse_value(text, cfg.*member); },
          [member](const SynthConfig& cfg) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(cfg.*member);
            } else {
              return std::to_string(cfg.*member);
            }
          }};
}

const std::vector<NamedField>& config_fields() {
  static const std::vector<NamedField> fields = {
      field("width", &SynthConfig::width),
      field("height", &SynthConfig::height),
      field("diameter", &SynthConfig::diameter),
      field("diameter_jitter", &SynthConfig::diameter_jitter),
      field("bars_min", &SynthConfig::bars_min),
      field("bars_max", &SynthConfig::bars_max),
      field("min_spacing", &SynthConfig::min_spacing),
      field("background", &SynthConfig::background),
      field("foreground", &SynthConfig::foreground),
      field("foreground_jitter", &SynthConfig::foreground_jitter),
      field("shading", &SynthConfig::shading),
      field("gradient", &SynthConfig::gradient),
      field("noise_sigma", &SynthConfig::noise_sigma),
      field("blur_radius", &SynthConfig::blur_radius),
      field("max_attempts", &SynthConfig::max_attempts),
      field("seed", &SynthConfig::seed),
  };
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void box_blur(std::vector<double>& pixels, std::size_t width, std::size_t height,
              std::size_t radius) {
  if (radius == 0) return;
  std::vector<double> tmp(pixels.size());
  const long r = static_cast<long>(radius);
  const double norm = 1.0 / static_cast<double>(2 * radius + 1);
  auto clamp_index = [](long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(n) - 1));
  };
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double sum = 0.0;
      for (long d = -r; d <= r; ++d) sum += pixels[y * width + clamp_index(static_cast<long>(x) + d, width)];
      tmp[y * width + x] = sum * norm;
    }
  }
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double sum = 0.0;
      for (long d = -r; d <= r; ++d) sum += tmp[clamp_index(static_cast<long>(y) + d, height) * width + x];
      pixels[y * width + x] = sum * norm;
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (width == 0 || height == 0) throw ConfigError("synth: image dimensions must be positive");
  if (!(diameter > 0.0)) throw ConfigError("synth: diameter must be positive");
  if (!(diameter_jitter >= 0.0) || diameter_jitter >= diameter) {
    throw ConfigError("synth: diameter jitter must be in [0, diameter)");
  }
  if (bars_min < 1) throw ConfigError("synth: bar count must be at least 1");
  if (bars_max < bars_min) throw ConfigError("synth: bars_max is below bars_min");
  if (!(min_spacing >= 0.0)) throw ConfigError("synth: min spacing must be non-negative");
  if (!unit(background) || !unit(foreground)) {
    throw ConfigError("synth: background and foreground must be in [0, 1]");
  }
  if (!(foreground_jitter >= 0.0) || !(shading >= 0.0) || !(gradient >= 0.0) ||
      !(noise_sigma >= 0.0)) {
    throw ConfigError("synth: jitter, shading, gradient and noise must be non-negative");
  }
  if (max_attempts == 0) throw ConfigError("synth: max_attempts must be positive");
  const std::size_t margin = border_margin(*this);
  if (width <= 2 * margin || height <= 2 * margin) {
    throw ConfigError("synth: image too small for the bar diameter");
  }
}

SynthConfig parse_synth_config(std::istream& in) {
  SynthConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const std::string key(trim(text.substr(0, eq)));
    const std::string_view value = trim(text.substr(eq + 1));
    const auto& fields = config_fields();
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const NamedField& f) { return key == f.name; });
    if (it == fields.end()) throw ConfigError("synth config: unknown key '" + key + "'");
    if (!it->parse(cfg, value)) throw ParseError("bad value for '" + key + "'", line_no);
  }
  cfg.validate();
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth config " + path.string());
  return parse_synth_config(in);
}

std::string format_synth_config(const SynthConfig& cfg) {
  std::string out;
  for (const auto& f : config_fields()) {
    out += f.name;
    out += " = ";
    out += f.format(cfg);
    out += '\n';
  }
  return out;
}

SynthScene synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t w = cfg.width;
  const std::size_t h = cfg.height;
  const auto margin = static_cast<std::int64_t>(border_margin(cfg));
  const auto count = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(cfg.bars_min), static_cast<std::int64_t>(cfg.bars_max)));

  struct Bar {
    Point2 center;
    double radius;
    double level;
  };
  std::vector<Bar> bars;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = cfg.diameter + rng.uniform(-cfg.diameter_jitter, cfg.diameter_jitter);
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Point2 c{static_cast<double>(rng.between(margin, static_cast<std::int64_t>(w) - 1 - margin)),
                     static_cast<double>(rng.between(margin, static_cast<std::int64_t>(h) - 1 - margin))};
      placed = std::all_of(bars.begin(), bars.end(), [&](const Bar& b) {
        return distance(b.center, c) >= std::max(cfg.min_spacing, b.radius + d / 2.0);
      });
      if (placed) {
        const double level = std::clamp(
            cfg.foreground + rng.uniform(-cfg.foreground_jitter, cfg.foreground_jitter), 0.0, 1.0);
        bars.push_back({c, d / 2.0, level});
      }
    }
    if (!placed) {
      throw GenerationError("could not place bar " + std::to_string(i + 1) + " of " +
                            std::to_string(count) + " after " + std::to_string(cfg.max_attempts) +
                            " attempts; request fewer bars or a smaller spacing");
    }
  }

  std::vector<double> pixels(w * h, cfg.background);
  for (const Bar& bar : bars) {
    const long x_lo = std::max(0L, static_cast<long>(std::floor(bar.center.x - bar.radius - 1)));
    const long x_hi = std::min(static_cast<long>(w) - 1, static_cast<long>(std::ceil(bar.center.x + bar.radius + 1)));
    const long y_lo = std::max(0L, static_cast<long>(std::floor(bar.center.y - bar.radius - 1)));
    const long y_hi = std::min(static_cast<long>(h) - 1, static_cast<long>(std::ceil(bar.center.y + bar.radius + 1)));
    for (long y = y_lo; y <= y_hi; ++y) {
      for (long x = x_lo; x <= x_hi; ++x) {
        const double r = distance(bar.center, {static_cast<double>(x), static_cast<double>(y)});
        const double coverage = std::clamp(bar.radius - r + 0.5, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        const double t = std::min(r / bar.radius, 1.0);
        const double disc = bar.level - cfg.shading * t * t;
        double& px = pixels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
        px = px * (1.0 - coverage) + disc * coverage;
      }
    }
  }

  if (cfg.gradient > 0.0) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gx = std::cos(angle);
    const double gy = std::sin(angle);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double u = static_cast<double>(x) / static_cast<double>(w - 1 ? w - 1 : 1) - 0.5;
        const double v = static_cast<double>(y) / static_cast<double>(h - 1 ? h - 1 : 1) - 0.5;
        pixels[y * w + x] += cfg.gradient * (gx * u + gy * v);
      }
    }
  }

  box_blur(pixels, w, h, cfg.blur_radius);

  for (double& px : pixels) {
    if (cfg.noise_sigma > 0.0) px += cfg.noise_sigma * rng.normal();
    px = std::clamp(px, 0.0, 1.0);
  }

  SynthScene scene{GrayImage(w, h, std::move(pixels)), {}};
  for (const Bar& bar : bars) scene.centers.push_back(bar.center);
  return scene;
}

}  // namespace cnndc

#include "cnndc/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "cnndc/errors.hpp"

namespace cnndc {

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), pixels_(width * height, fill) {
  if (!(fill >= 0.0 && fill <= 1.0)) throw ConfigError("image fill value outside [0, 1]");
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width * height) {
    throw ConfigError("image has " + std::to_string(pixels_.size()) + " pixels, expected " +
                      std::to_string(width * height));
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("image pixel value outside [0, 1]");
  }
}

double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// --- PGM -----------------------------------------------------------------

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000) throw IoError("PGM header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw IoError("malformed PGM header");
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw IoError("malformed PGM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

// --- PNG -----------------------------------------------------------------

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

// Reverses the per-scanline filters in place; `data` holds height rows of
// (1 + stride) bytes. Returns the raw rows packed without filter bytes.
std::vector<std::uint8_t> unfilter(const std::vector<std::uint8_t>& data, std::size_t height,
                                   std::size_t stride, std::size_t bpp) {
  std::vector<std::uint8_t> out(height * stride);
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t filter = data[y * (stride + 1)];
    const std::uint8_t* src = &data[y * (stride + 1) + 1];
    std::uint8_t* row = &out[y * stride];
    const std::uint8_t* up = y > 0 ? &out[(y - 1) * stride] : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= bpp ? row[i - bpp] : 0;
      const int b = up != nullptr ? up[i] : 0;
      const int c = (up != nullptr && i >= bpp) ? up[i - bpp] : 0;
      int value = src[i];
      switch (filter) {
        case 0: break;
        case 1: value += a; break;
        case 2: value += b; break;
        case 3: value += (a + b) / 2; break;
        case 4: value += paeth(a, b, c); break;
        default: throw IoError("invalid PNG filter type " + std::to_string(filter));
      }
      row[i] = static_cast<std::uint8_t>(value & 0xff);
    }
  }
  return out;
}

void append_chunk(std::vector<std::uint8_t>& out, const char* type,
                  std::span<const std::uint8_t> payload) {
  append_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const uLong crc = crc32(0L, &out[type_at], static_cast<uInt>(4 + payload.size()));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw IoError("not a binary PGM");
  HeaderReader header(bytes);
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (width == 0 || height == 0) throw IoError("PGM has zero size");
  if (maxval == 0 || maxval > 255) throw IoError("only 8-bit PGM is supported");
  const std::size_t start = header.raster_start();
  if (bytes.size() - start < width * height) throw IoError("PGM raster is truncated");
  std::vector<double> pixels(width * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::uint8_t v = bytes[start + i];
    if (v > maxval) throw IoError("PGM sample exceeds maxval");
    pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return GrayImage(width, height, std::move(pixels));
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPngSignature.size() ||
      !std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    throw IoError("not a PNG file");
  }
  std::size_t pos = kPngSignature.size();
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  bool have_header = false;
  bool have_end = false;
  std::vector<std::uint8_t> compressed;

  while (pos + 12 <= bytes.size() && !have_end) {
    const std::size_t length = read_be32(&bytes[pos]);
    if (length > bytes.size() - pos - 12) throw IoError("PNG chunk is truncated");
    const std::uint8_t* type = &bytes[pos + 4];
    const std::uint8_t* payload = &bytes[pos + 8];
    const std::uint32_t stored_crc = read_be32(payload + length);
    if (crc32(0L, type, static_cast<uInt>(length + 4)) != stored_crc) {
      throw IoError("PNG chunk CRC mismatch");
    }
    const std::string name(type, type + 4);
    if (name == "IHDR") {
      if (length != 13) throw IoError("bad PNG header length");
      width = read_be32(payload);
      height = read_be32(payload + 4);
      const std::uint8_t depth = payload[8];
      const std::uint8_t color = payload[9];
      if (depth != 8) throw IoError("only 8-bit PNG is supported");
      switch (color) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw IoError("unsupported PNG color type " + std::to_string(color));
      }
      if (payload[10] != 0 || payload[11] != 0) throw IoError("unsupported PNG compression/filter");
      if (payload[12] != 0) throw IoError("interlaced PNG is not supported");
      if (width == 0 || height == 0 || width > 65535 || height > 65535) {
        throw IoError("unsupported PNG dimensions");
      }
      have_header = true;
    } else if (name == "IDAT") {
      compressed.insert(compressed.end(), payload, payload + length);
    } else if (name == "IEND") {
      have_end = true;
    } else if ((type[0] & 0x20) == 0) {
      throw IoError("unsupported critical PNG chunk " + name);
    }
    pos += length + 12;
  }
  if (!have_header || !have_end) throw IoError("PNG is missing IHDR or IEND");

  const std::size_t stride = width * channels;
  std::vector<std::uint8_t> filtered(height * (stride + 1));
  uLongf out_len = static_cast<uLongf>(filtered.size());
  if (uncompress(filtered.data(), &out_len, compressed.data(),
                 static_cast<uLong>(compressed.size())) != Z_OK ||
      out_len != filtered.size()) {
    throw IoError("PNG image data failed to decompress");
  }
  const std::vector<std::uint8_t> raw = unfilter(filtered, height, stride, channels);

  std::vector<double> pixels(width * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::uint8_t* px = &raw[i * channels];
    pixels[i] = channels >= 3 ? luma(px[0], px[1], px[2]) : px[0] / 255.0;
  }
  return GrayImage(width, height, std::move(pixels));
}

GrayImage load_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  try {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
    if (bytes.size() >= 8 && bytes[0] == kPngSignature[0]) return decode_png(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  throw IoError(path.string() + ": unsupported image format (expected P5 PGM or PNG)");
}

std::vector<std::uint8_t> quantize(const GrayImage& image) {
  std::vector<std::uint8_t> out(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), out.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto raster = quantize(image);
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  const auto raster = quantize(image);
  std::vector<std::uint8_t> filtered;
  filtered.reserve(image.height() * (image.width() + 1));
  for (std::size_t y = 0; y < image.height(); ++y) {
    filtered.push_back(0);
    const auto row = raster.begin() + static_cast<std::ptrdiff_t>(y * image.width());
    filtered.insert(filtered.end(), row, row + static_cast<std::ptrdiff_t>(image.width()));
  }
  std::vector<std::uint8_t> compressed(compressBound(static_cast<uLong>(filtered.size())));
  uLongf compressed_len = static_cast<uLongf>(compressed.size());
  if (compress2(compressed.data(), &compressed_len, filtered.data(),
                static_cast<uLong>(filtered.size()), 6) != Z_OK) {
    throw IoError("PNG compression failed");
  }
  compressed.resize(compressed_len);

  std::vector<std::uint8_t> out(kPngSignature.begin(), kPngSignature.end());
  std::vector<std::uint8_t> ihdr;
  append_be32(ihdr, static_cast<std::uint32_t>(image.width()));
  append_be32(ihdr, static_cast<std::uint32_t>(image.height()));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

void save_image(const GrayImage& image, const std::filesystem::path& path) {
  if (image.empty()) throw IoError("refusing to write an empty image to " + path.string());
  const bool png = path.extension() == ".png" || path.extension() == ".PNG";
  write_file(path, png ? encode_png(image) : encode_pgm(image));
}

}  // namespace cnndc

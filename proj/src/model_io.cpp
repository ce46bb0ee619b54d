#include "cnndc/model_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cnndc/errors.hpp"

namespace cnndc {

namespace {

constexpr std::array<char, 5> kMagic = {'C', 'N', 'N', 'D', 'C'};

template <typename T>
void write_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw IoError("model file is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void write_u32(std::ostream& out, std::size_t v) {
  if (v > 0xffffffffu) throw IoError("value too large for model file field");
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
}

std::size_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }

void write_array(std::ostream& out, const std::vector<double>& values) {
  for (double v : values) write_le<double>(out, v);
}

void read_array(std::istream& in, std::vector<double>& values) {
  for (double& v : values) v = read_le<double>(in);
}

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  validate(model.spec);
  check_params(model.spec, model.params);
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kModelFormatVersion);
  write_u32(out, model.spec.input.height);
  write_u32(out, model.spec.input.width);
  write_u32(out, model.spec.input.channels);
  write_u32(out, model.spec.class_count);
  write_u32(out, model.spec.layers.size());
  for (const auto& layer : model.spec.layers) {
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(layer.index()));
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      write_u32(out, c->kernel_count);
      write_u32(out, c->kernel_size);
      write_u32(out, c->stride);
      write_u32(out, c->padding);
    } else if (const auto* p = std::get_if<PoolLayerSpec>(&layer)) {
      write_u32(out, p->window);
      write_u32(out, p->stride);
    } else {
      const auto& f = std::get<FcLayerSpec>(layer);
      write_u32(out, f.in_dim);
      write_u32(out, f.out_dim);
    }
  }
  for (const auto& layer : model.params.layers) {
    write_array(out, layer.weights);
    write_array(out, layer.biases);
  }
  if (!out) throw IoError("failed writing model");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_model(model, out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(std::istream& in) {
  std::array<char, kMagic.size()> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("not a CNNDC model file (bad magic)");
  }
  const std::uint32_t version = read_le<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw IoError("unsupported model format version " + std::to_string(version));
  }
  Model model;
  model.spec.input.height = read_u32(in);
  model.spec.input.width = read_u32(in);
  model.spec.input.channels = read_u32(in);
  model.spec.class_count = read_u32(in);
  const std::size_t layer_count = read_u32(in);
  if (layer_count > 4096) throw IoError("implausible layer count in model file");
  for (std::size_t l = 0; l < layer_count; ++l) {
    switch (read_le<std::uint8_t>(in)) {
      case 0: {
        ConvLayerSpec c;
        c.kernel_count = read_u32(in);
        c.kernel_size = read_u32(in);
        c.stride = read_u32(in);
        c.padding = read_u32(in);
        model.spec.layers.emplace_back(c);
        break;
      }
      case 1: {
        PoolLayerSpec p;
        p.window = read_u32(in);
        p.stride = read_u32(in);
        model.spec.layers.emplace_back(p);
        break;
      }
      case 2: {
        FcLayerSpec f;
        f.in_dim = read_u32(in);
        f.out_dim = read_u32(in);
        model.spec.layers.emplace_back(f);
        break;
      }
      default:
        throw IoError("unknown layer kind in model file");
    }
  }
  validate(model.spec);
  model.params = zero_params(model.spec);
  for (auto& layer : model.params.layers) {
    read_array(in, layer.weights);
    read_array(in, layer.biases);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in model file");
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  try {
    return load_model(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace cnndc

#include "cnndc/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "cnndc/errors.hpp"
#include "cnndc/rng.hpp"
#include "kernels.hpp"

namespace cnndc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string layer_name(std::size_t index, const LayerSpec& layer) {
  static constexpr const char* kNames[] = {"conv", "pool", "fc"};
  return "layer " + std::to_string(index) + " (" + kNames[layer.index()] + ")";
}

bool is_last(const NetworkSpec& spec, std::size_t l) { return l + 1 == spec.layers.size(); }

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

NetworkSpec NetworkSpec::reference() {
  NetworkSpec spec;
  spec.input = {71, 71, 1};
  spec.class_count = 2;
  spec.layers = {
      ConvLayerSpec{16, 4}, PoolLayerSpec{}, ConvLayerSpec{32, 3}, PoolLayerSpec{},
      ConvLayerSpec{64, 3}, PoolLayerSpec{}, ConvLayerSpec{128, 2}, PoolLayerSpec{},
      FcLayerSpec{3 * 3 * 128, 256}, FcLayerSpec{256, 64}, FcLayerSpec{64, 2},
  };
  return spec;
}

std::vector<Shape3> infer_shapes(const NetworkSpec& spec) {
  std::vector<Shape3> shapes;
  shapes.reserve(spec.layers.size());
  Shape3 current = spec.input;
  if (current.size() == 0) throw ShapeError("network input shape is empty");
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const std::string name = layer_name(l, spec.layers[l]);
    current = std::visit(
        Overloaded{
            [&](const ConvLayerSpec& conv) {
              if (conv.padding != 0) throw ShapeError(name + ": zero padding is not supported");
              return conv_output_shape(current, conv, name);
            },
            [&](const PoolLayerSpec& pool) { return pool_output_shape(current, pool, name); },
            [&](const FcLayerSpec& fc) {
              if (fc.in_dim != current.size()) {
                throw ShapeError(name + ": expects " + std::to_string(fc.in_dim) +
                                 " inputs but receives " + to_string(current));
              }
              if (fc.out_dim == 0) throw ShapeError(name + ": output size must be positive");
              return Shape3{1, 1, fc.out_dim};
            },
        },
        spec.layers[l]);
    shapes.push_back(current);
  }
  return shapes;
}

void validate(const NetworkSpec& spec) {
  if (spec.layers.empty()) throw ShapeError("network has no layers");
  if (!std::holds_alternative<FcLayerSpec>(spec.layers.back())) {
    throw ShapeError("last layer must be fully connected");
  }
  const auto shapes = infer_shapes(spec);
  if (shapes.back().size() != spec.class_count) {
    throw ShapeError("final layer width " + std::to_string(shapes.back().size()) +
                     " differs from class count " + std::to_string(spec.class_count));
  }
  bool seen_fc = false;
  for (const auto& layer : spec.layers) {
    if (std::holds_alternative<FcLayerSpec>(layer)) {
      seen_fc = true;
    } else if (seen_fc) {
      throw ShapeError("convolution or pooling after a fully connected layer");
    }
  }
}

bool has_reference_topology(const NetworkSpec& spec) {
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& layer : spec.layers) ++counts[layer.index()];
  return counts[0] == 4 && counts[1] == 4 && counts[2] == 3;
}

NetworkSpec parse_architecture(std::string_view text, Shape3 input, std::size_t class_count) {
  NetworkSpec spec;
  spec.input = input;
  spec.class_count = class_count;
  Shape3 current = input;

  auto read_number = [&](std::string_view& token, char tag) -> std::size_t {
    if (token.empty() || token.front() != tag) {
      throw ConfigError("architecture: expected '" + std::string(1, tag) + "' in '" +
                        std::string(text) + "'");
    }
    token.remove_prefix(1);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr == token.data()) {
      throw ConfigError("architecture: missing number after '" + std::string(1, tag) + "'");
    }
    token.remove_prefix(static_cast<std::size_t>(ptr - token.data()));
    return value;
  };

  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view token = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (token.empty()) throw ConfigError("architecture: empty layer entry");

    const std::string name = "layer " + std::to_string(spec.layers.size());
    switch (token.front()) {
      case 'c': {
        ConvLayerSpec conv;
        conv.kernel_count = read_number(token, 'c');
        conv.kernel_size = read_number(token, 'k');
        if (!token.empty()) conv.stride = read_number(token, 's');
        if (!token.empty()) throw ConfigError("architecture: trailing text in conv entry");
        spec.layers.emplace_back(conv);
        current = conv_output_shape(current, conv, name);
        break;
      }
      case 'p':
        if (token.size() != 1) throw ConfigError("architecture: pool entry takes no arguments");
        spec.layers.emplace_back(PoolLayerSpec{});
        current = pool_output_shape(current, PoolLayerSpec{}, name);
        break;
      case 'f': {
        FcLayerSpec fc;
        fc.in_dim = current.size();
        fc.out_dim = read_number(token, 'f');
        if (!token.empty()) throw ConfigError("architecture: trailing text in fc entry");
        spec.layers.emplace_back(fc);
        current = {1, 1, fc.out_dim};
        break;
      }
      default:
        throw ConfigError("architecture: unknown layer '" + std::string(token) + "'");
    }
  }
  validate(spec);
  return spec;
}

std::string format_architecture(const NetworkSpec& spec) {
  std::string out;
  for (const auto& layer : spec.layers) {
    if (!out.empty()) out += ',';
    std::visit(Overloaded{
                   [&](const ConvLayerSpec& c) {
                     out += 'c' + std::to_string(c.kernel_count) + 'k' +
                            std::to_string(c.kernel_size);
                     if (c.stride != 1) out += 's' + std::to_string(c.stride);
                   },
                   [&](const PoolLayerSpec&) { out += 'p'; },
                   [&](const FcLayerSpec& f) { out += 'f' + std::to_string(f.out_dim); },
               },
               layer);
  }
  return out;
}

namespace {

// (weights, biases) sizes and Glorot fans for each layer.
struct LayerGeometry {
  std::size_t weights = 0;
  std::size_t biases = 0;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

std::vector<LayerGeometry> layer_geometry(const NetworkSpec& spec) {
  const auto shapes = infer_shapes(spec);
  std::vector<LayerGeometry> geometry;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const Shape3& in = l == 0 ? spec.input : shapes[l - 1];
    geometry.push_back(std::visit(
        Overloaded{
            [&](const ConvLayerSpec& c) {
              const std::size_t area = c.kernel_size * c.kernel_size;
              return LayerGeometry{c.weight_count(in.channels), c.bias_count(),
                                   area * in.channels, area * c.kernel_count};
            },
            [](const PoolLayerSpec&) { return LayerGeometry{}; },
            [](const FcLayerSpec& f) {
              return LayerGeometry{f.weight_count(), f.bias_count(), f.in_dim, f.out_dim};
            },
        },
        spec.layers[l]));
  }
  return geometry;
}

}  // namespace

std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const auto& g : layer_geometry(spec)) total += g.weights + g.biases;
  return total;
}

NetworkParams zero_params(const NetworkSpec& spec) {
  NetworkParams params;
  for (const auto& g : layer_geometry(spec)) {
    params.layers.push_back({std::vector<double>(g.weights, 0.0), std::vector<double>(g.biases, 0.0)});
  }
  return params;
}

Gradients zero_gradients(const NetworkSpec& spec) { return Gradients{zero_params(spec).layers}; }

NetworkParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  validate(spec);
  NetworkParams params = zero_params(spec);
  params.rng_seed = seed;
  Rng rng(seed);
  const auto geometry = layer_geometry(spec);
  for (std::size_t l = 0; l < geometry.size(); ++l) {
    if (geometry[l].weights == 0) continue;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(geometry[l].fan_in + geometry[l].fan_out));
    for (double& w : params.layers[l].weights) w = rng.uniform(-limit, limit);
  }
  return params;
}

void check_params(const NetworkSpec& spec, const NetworkParams& params) {
  const auto geometry = layer_geometry(spec);
  if (params.layers.size() != geometry.size()) {
    throw ShapeError("parameter set has " + std::to_string(params.layers.size()) +
                     " layers, network has " + std::to_string(geometry.size()));
  }
  for (std::size_t l = 0; l < geometry.size(); ++l) {
    if (params.layers[l].weights.size() != geometry[l].weights ||
        params.layers[l].biases.size() != geometry[l].biases) {
      throw ShapeError("parameter arrays of " + layer_name(l, spec.layers[l]) +
                       " do not match the network spec");
    }
  }
}

// Forward/backward driver over one Workspace. Activations are stored
// post-ReLU, so a positive activation doubles as the ReLU mask.
class NetworkPass {
 public:
  NetworkPass(const Model& model, Workspace& ws)
      : spec_(model.spec), params_(model.params), ws_(ws), shapes_(infer_shapes(model.spec)) {
    check_params(spec_, params_);
  }

  const std::vector<double>& forward(const Tensor3& input) {
    if (input.shape() != spec_.input) {
      throw ShapeError("network expects input " + to_string(spec_.input) + ", got " +
                       to_string(input.shape()));
    }
    const std::size_t n = spec_.layers.size();
    ws_.activations_.resize(n + 1);
    ws_.columns_.resize(n);
    ws_.argmax_.resize(n);
    ws_.activations_[0].assign(input.data().begin(), input.data().end());

    for (std::size_t l = 0; l < n; ++l) {
      const Shape3& in_shape = l == 0 ? spec_.input : shapes_[l - 1];
      const Shape3& out_shape = shapes_[l];
      const double* in = ws_.activations_[l].data();
      std::vector<double>& out = ws_.activations_[l + 1];
      out.resize(out_shape.size());
      const LayerParams& p = params_.layers[l];

      if (const auto* conv = std::get_if<ConvLayerSpec>(&spec_.layers[l])) {
        const std::size_t positions = out_shape.height * out_shape.width;
        const std::size_t field = conv->kernel_size * conv->kernel_size * in_shape.channels;
        std::vector<double>& cols = ws_.columns_[l];
        cols.resize(positions * field);
        kernels::im2col(in, in_shape, conv->kernel_size, conv->stride, out_shape, cols.data());
        kernels::conv_gemm(cols.data(), positions, field, p.weights.data(), p.biases.data(),
                           conv->kernel_count, out.data());
        kernels::relu_inplace(out.data(), out.size());
      } else if (std::holds_alternative<PoolLayerSpec>(spec_.layers[l])) {
        ws_.argmax_[l].resize(out_shape.size());
        kernels::maxpool(in, in_shape, out.data(), ws_.argmax_[l].data());
      } else {
        const auto& fc = std::get<FcLayerSpec>(spec_.layers[l]);
        kernels::VectorMap z(out.data(), as_index(fc.out_dim));
        kernels::ConstMatrixMap w(p.weights.data(), as_index(fc.out_dim), as_index(fc.in_dim));
        z.noalias() = w * kernels::ConstVectorMap(in, as_index(fc.in_dim));
        z += kernels::ConstVectorMap(p.biases.data(), as_index(fc.out_dim));
        if (!is_last(spec_, l)) kernels::relu_inplace(out.data(), out.size());
      }
    }
    return ws_.activations_[n];
  }

  // Must follow forward(). Adds parameter gradients into `acc`.
  double backward(std::size_t label, Gradients& acc, std::vector<double>* logit_grad) {
    const std::size_t n = spec_.layers.size();
    const SoftmaxLoss sl = softmax_cross_entropy(ws_.activations_[n], label);
    std::vector<double>& delta = ws_.delta_;
    std::vector<double>& prev = ws_.delta_prev_;
    delta = sl.probs;
    delta[label] -= 1.0;
    if (logit_grad != nullptr) *logit_grad = delta;

    for (std::size_t l = n; l-- > 0;) {
      const Shape3& in_shape = l == 0 ? spec_.input : shapes_[l - 1];
      const Shape3& out_shape = shapes_[l];
      const std::vector<double>& in = ws_.activations_[l];
      const std::vector<double>& out = ws_.activations_[l + 1];
      const LayerParams& p = params_.layers[l];
      LayerParams& g = acc.layers[l];
      const bool need_input_grad = l > 0;

      if (const auto* conv = std::get_if<ConvLayerSpec>(&spec_.layers[l])) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
          if (!(out[i] > 0.0)) delta[i] = 0.0;
        }
        const std::size_t positions = out_shape.height * out_shape.width;
        const std::size_t field = conv->kernel_size * conv->kernel_size * in_shape.channels;
        const std::size_t k = conv->kernel_count;
        kernels::ConstMatrixMap d(delta.data(), as_index(positions), as_index(k));
        kernels::ConstMatrixMap cols(ws_.columns_[l].data(), as_index(positions), as_index(field));
        kernels::MatrixMap gw(g.weights.data(), as_index(k), as_index(field));
        gw.noalias() += d.transpose() * cols;
        kernels::VectorMap(g.biases.data(), as_index(k)) += d.colwise().sum().transpose();
        if (need_input_grad) {
          ws_.scratch_.resize(positions * field);
          kernels::MatrixMap dcols(ws_.scratch_.data(), as_index(positions), as_index(field));
          kernels::ConstMatrixMap w(p.weights.data(), as_index(k), as_index(field));
          dcols.noalias() = d * w;
          prev.assign(in_shape.size(), 0.0);
          kernels::col2im(ws_.scratch_.data(), in_shape, conv->kernel_size, conv->stride,
                          out_shape, prev.data());
          delta.swap(prev);
        }
      } else if (std::holds_alternative<PoolLayerSpec>(spec_.layers[l])) {
        if (need_input_grad) {
          prev.assign(in_shape.size(), 0.0);
          const auto& argmax = ws_.argmax_[l];
          for (std::size_t i = 0; i < delta.size(); ++i) prev[argmax[i]] += delta[i];
          delta.swap(prev);
        }
      } else {
        const auto& fc = std::get<FcLayerSpec>(spec_.layers[l]);
        if (!is_last(spec_, l)) {
          for (std::size_t i = 0; i < delta.size(); ++i) {
            if (!(out[i] > 0.0)) delta[i] = 0.0;
          }
        }
        kernels::ConstVectorMap d(delta.data(), as_index(fc.out_dim));
        kernels::ConstVectorMap x(in.data(), as_index(fc.in_dim));
        kernels::MatrixMap gw(g.weights.data(), as_index(fc.out_dim), as_index(fc.in_dim));
        gw.noalias() += d * x.transpose();
        kernels::VectorMap(g.biases.data(), as_index(fc.out_dim)) += d;
        if (need_input_grad) {
          prev.resize(fc.in_dim);
          kernels::ConstMatrixMap w(p.weights.data(), as_index(fc.out_dim), as_index(fc.in_dim));
          kernels::VectorMap(prev.data(), as_index(fc.in_dim)).noalias() = w.transpose() * d;
          delta.swap(prev);
        }
      }
    }
    return sl.loss;
  }

 private:
  const NetworkSpec& spec_;
  const NetworkParams& params_;
  Workspace& ws_;
  std::vector<Shape3> shapes_;
};

std::vector<double> forward_logits(const Model& model, const Tensor3& input) {
  Workspace ws;
  return forward_logits(model, input, ws);
}

std::vector<double> forward_logits(const Model& model, const Tensor3& input, Workspace& ws) {
  NetworkPass pass(model, ws);
  return pass.forward(input);
}

BackwardResult backward(const Model& model, const Tensor3& input, std::size_t label) {
  if (label >= model.spec.class_count) throw ShapeError("label out of range");
  Workspace ws;
  BackwardResult result;
  result.grads = zero_gradients(model.spec);
  NetworkPass pass(model, ws);
  pass.forward(input);
  result.loss = pass.backward(label, result.grads, &result.logit_grad);
  return result;
}

double accumulate_gradient(const Model& model, const Tensor3& input, std::size_t label,
                           Gradients& acc, Workspace& ws) {
  if (label >= model.spec.class_count) throw ShapeError("label out of range");
  NetworkPass pass(model, ws);
  pass.forward(input);
  return pass.backward(label, acc, nullptr);
}

BatchGradient batch_gradient(const Model& model, std::span<const LabeledTensor> batch,
                             Workspace& ws) {
  BatchGradient result;
  result.grads = zero_gradients(model.spec);
  if (batch.empty()) return result;
  for (const auto& sample : batch) {
    result.mean_loss += accumulate_gradient(model, *sample.input, sample.label, result.grads, ws);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  result.mean_loss *= scale;
  for (auto& layer : result.grads.layers) {
    for (double& v : layer.weights) v *= scale;
    for (double& v : layer.biases) v *= scale;
  }
  return result;
}

Prediction predict(const Model& model, const Tensor3& patch) {
  Workspace ws;
  return predict(model, patch, ws);
}

Prediction predict(const Model& model, const Tensor3& patch, Workspace& ws) {
  NetworkPass pass(model, ws);
  const std::vector<double>& logits = pass.forward(patch);
  const SoftmaxLoss sl = softmax_cross_entropy(logits, 0);
  Prediction result;
  // max_element returns the first maximum, so ties resolve to label 0.
  result.label = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  result.probability = sl.probs.size() > 1 ? sl.probs[1] : 0.0;
  return result;
}

}  // namespace cnndc

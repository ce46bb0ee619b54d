#include "cnndc/training.hpp"

#include <cmath>
#include <numeric>

#include "cnndc/errors.hpp"
#include "cnndc/rng.hpp"

namespace cnndc {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight decay must be non-negative");
  }
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
}

void sgd_step(NetworkParams& params, const Gradients& grads, const TrainConfig& cfg) {
  if (params.layers.size() != grads.layers.size()) {
    throw ShapeError("gradient layer count does not match parameters");
  }
  const double lr = cfg.learning_rate;
  const double decay = cfg.weight_decay;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    if (p.weights.size() != g.weights.size() || p.biases.size() != g.biases.size()) {
      throw ShapeError("gradient shape does not match parameters at layer " + std::to_string(l));
    }
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      p.weights[i] -= lr * (g.weights[i] + decay * p.weights[i]);
    }
    for (std::size_t i = 0; i < p.biases.size(); ++i) p.biases[i] -= lr * g.biases[i];
  }
}

namespace {

void check_dataset(const NetworkSpec& spec, std::span<const TrainingSample> samples) {
  if (samples.empty()) throw ConfigError("training set is empty");
  std::vector<std::size_t> per_class(spec.class_count, 0);
  for (const auto& s : samples) {
    if (s.label >= spec.class_count) {
      throw ConfigError("training label " + std::to_string(s.label) + " out of range");
    }
    if (s.input.shape() != spec.input) {
      throw ShapeError("training sample shape " + to_string(s.input.shape()) +
                       " differs from network input " + to_string(spec.input));
    }
    ++per_class[s.label];
  }
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] == 0) {
      throw ConfigError("training set has no samples of class " + std::to_string(c));
    }
  }
}

}  // namespace

TrainResult train(const NetworkSpec& spec, std::span<const TrainingSample> samples,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  validate(spec);
  check_dataset(spec, samples);
  return train(Model{spec, init_params(spec, cfg.rng_seed)}, samples, cfg, on_epoch);
}

TrainResult train(const Model& initial, std::span<const TrainingSample> samples,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  validate(initial.spec);
  check_dataset(initial.spec, samples);

  Model model = initial;
  TrainResult result;
  // The shuffle stream is kept apart from the initialisation stream.
  Rng rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  Workspace ws;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<LabeledTensor> batch;
  batch.reserve(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back({&samples[order[i]].input, samples[order[i]].label});
      }
      BatchGradient bg = batch_gradient(model, batch, ws);
      loss_sum += bg.mean_loss * static_cast<double>(batch.size());
      sgd_step(model.params, bg.grads, cfg);
    }
    const double mean_loss = loss_sum / static_cast<double>(samples.size());
    result.epoch_loss.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch + 1, mean_loss);
  }
  result.params = std::move(model.params);
  return result;
}

}  // namespace cnndc

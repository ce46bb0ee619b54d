#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cnndc/network.hpp"
#include "cnndc/tensor.hpp"

namespace cnndc {

struct TrainConfig {
  double learning_rate = 0.001;
  double weight_decay = 0.0001;
  std::size_t epochs = 40;
  std::size_t batch_size = 16;  // 64 underfits at lr 0.001 in 40 epochs
  std::uint64_t rng_seed = 1;

  // Throws ConfigError on lr <= 0, decay < 0, epochs or batch size of 0.
  void validate() const;
};

// theta <- theta - lr * (grad + decay * theta) for weights; biases take the
// plain gradient step.
void sgd_step(NetworkParams& params, const Gradients& grads, const TrainConfig& cfg);

struct TrainingSample {
  Tensor3 input;
  std::size_t label = 0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<double> epoch_loss;  // mean data loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Mini-batch SGD over a reshuffled copy of the samples each epoch. Weights
// are initialised from cfg.rng_seed; the run is fully determined by
// (spec, samples, cfg).
TrainResult train(const NetworkSpec& spec, std::span<const TrainingSample> samples,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Continues training from existing parameters.
TrainResult train(const Model& initial, std::span<const TrainingSample> samples,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace cnndc

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vcascade/nn/engine.hpp"
#include "vcascade/nn/network.hpp"
#include "vcascade/nn/weights.hpp"

namespace vcascade::nn {

struct Sample {
    Tensor input;
    int label = 0;  // 1 positive, 0 negative
};

struct TrainConfig {
    int epochs = 400;
    int batch_size = 16;
    double learning_rate = 0.01;
    double momentum = 0.0;  // plain SGD when zero
    double val_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    WeightBundle weights;  // snapshot with the lowest validation loss, f32-exact
    WeightBundle initial;  // the seeded initialization
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Minibatch SGD on mean binary cross-entropy. Batchnorm moving statistics
// follow the batch statistics with momentum kBatchNormMomentum. A zero
// learning rate freezes the model entirely. Throws std::invalid_argument
// for single-class data and NumericError(epoch) on divergence.
TrainResult train(const NetworkSpec& spec, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Splits `dataset` per class by config.val_fraction (seeded) and trains.
TrainResult train(const NetworkSpec& spec, std::span<const Sample> dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Fraction of samples whose infer-mode score lands on the right side of 0.5.
double accuracy(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Sample> samples);

}  // namespace vcascade::nn

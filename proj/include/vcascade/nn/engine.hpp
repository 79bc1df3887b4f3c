#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vcascade/nn/network.hpp"
#include "vcascade/nn/tensor.hpp"
#include "vcascade/nn/weights.hpp"
#include "vcascade/rng.hpp"

namespace vcascade::nn {

// train: batchnorm normalizes with batch statistics and dropout (when
// enabled) drops units. infer: moving statistics, dropout is identity.
enum class Mode { train, infer };

double sigmoid(double z);

// Binary cross-entropy of sigmoid(logit) against a 0/1 label, computed
// from the logit for stability.
double bce_from_logit(double logit, int label);

// Activation buffers and backprop caches for one network and a batch of
// inputs. Reusable across calls; not shareable between threads.
class Workspace {
public:
    explicit Workspace(const NetworkSpec& spec);

    // Returns one pre-sigmoid logit per sample. A null `dropout_rng`
    // leaves dropout as identity even in train mode.
    const std::vector<double>& forward(const WeightBundle& weights, std::span<const Tensor> inputs, Mode mode,
                                       Rng* dropout_rng = nullptr);

    // Backpropagates dloss/dlogit for the most recent forward() and writes
    // parameter gradients into `grads` (which must have the weight layout).
    void backward(const WeightBundle& weights, std::span<const double> dlogits, WeightBundle& grads);

    // Per-channel statistics the last train-mode forward used for batchnorm
    // layer `layer`; empty for other layers.
    const std::vector<double>& batch_mean(std::size_t layer) const { return caches_[layer].mean; }
    const std::vector<double>& batch_variance(std::size_t layer) const { return caches_[layer].variance; }

    // Output dims produced by each layer during the last forward.
    const std::vector<Dims>& produced_dims() const { return produced_; }

private:
    struct LayerCache {
        std::vector<double> mean;
        std::vector<double> variance;
        std::vector<double> inv_std;
        std::vector<double> normalized;
        std::vector<double> dropout_mask;
        std::vector<std::uint32_t> argmax;
    };

    const NetworkSpec* spec_;
    Mode mode_ = Mode::infer;
    int batch_ = 0;
    std::vector<std::vector<double>> acts_;  // acts_[0] input, acts_[i + 1] output of layer i
    std::vector<Dims> produced_;
    std::vector<LayerCache> caches_;
    std::vector<double> col_;
    std::vector<double> dcol_;
};

// Gradient-shaped copy of `weights` with every element zero.
WeightBundle zero_gradients(const WeightBundle& weights);

// Single-sample score in [0, 1]. Infer mode is deterministic.
double forward(const NetworkSpec& spec, const WeightBundle& weights, const Tensor& input, Mode mode = Mode::infer,
               std::uint64_t dropout_seed = 0);

// Infer-mode scores for a batch.
std::vector<double> forward_batch(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Tensor> inputs);

struct LossGradient {
    double loss = 0.0;  // mean BCE over the batch
    WeightBundle gradient;
    std::vector<double> logits;
};

// Mean BCE loss and its gradient with dropout disabled.
LossGradient loss_and_gradient(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Tensor> inputs,
                               std::span<const int> labels, Mode mode);

double mean_loss(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Tensor> inputs,
                 std::span<const int> labels, Mode mode);

}  // namespace vcascade::nn

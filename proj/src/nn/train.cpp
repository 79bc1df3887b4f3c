#include "vcascade/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "vcascade/error.hpp"
#include "vcascade/rng.hpp"

namespace vcascade::nn {

namespace {

constexpr std::size_t kEvalChunk = 64;

template <typename Fn>
void for_each_param_block(WeightBundle& w, const WeightBundle& g, Fn&& fn) {
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        LayerParams& p = w.layers[i];
        const LayerParams& q = g.layers[i];
        fn(p.kernel, q.kernel);
        fn(p.bias, q.bias);
        fn(p.gamma, q.gamma);
        fn(p.beta, q.beta);
    }
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate(const NetworkSpec& spec, const WeightBundle& w, std::span<const Sample> samples) {
    Workspace ws(spec);
    std::vector<Tensor> chunk;
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
        const std::size_t end = std::min(samples.size(), start + kEvalChunk);
        chunk.clear();
        for (std::size_t i = start; i < end; ++i) chunk.push_back(samples[i].input);
        const std::vector<double>& logits = ws.forward(w, chunk, Mode::infer);
        for (std::size_t i = start; i < end; ++i) {
            const double z = logits[i - start];
            loss += bce_from_logit(z, samples[i].label);
            if ((sigmoid(z) >= 0.5 ? 1 : 0) == samples[i].label) ++correct;
        }
    }
    const auto n = static_cast<double>(samples.size());
    return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be a finite non-negative number");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must be in (0, 1)");
}

TrainResult train(const NetworkSpec& spec, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw std::invalid_argument("training set is empty");
    if (val_set.empty()) throw std::invalid_argument("validation set is empty");
    bool has_pos = false;
    bool has_neg = false;
    for (const Sample& s : train_set) {
        if (s.label != 0 && s.label != 1) throw std::invalid_argument("labels must be 0 or 1");
        (s.label == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("training set must contain both classes");

    TrainResult result;
    WeightBundle w = quantize_to_f32(init_weights(spec, derive_seed(config.seed, 1)));
    result.initial = w;
    result.weights = w;
    WeightBundle velocity = zero_gradients(w);
    WeightBundle grads = zero_gradients(w);

    Rng order_rng(derive_seed(config.seed, 2));
    Rng dropout_rng(derive_seed(config.seed, 3));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    Workspace ws(spec);
    std::vector<Tensor> batch;
    std::vector<double> dlogits;
    double best_val = std::numeric_limits<double>::infinity();
    const bool frozen = config.learning_rate == 0.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, order_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const auto n = static_cast<double>(end - start);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]].input);

            const std::vector<double>* logits = nullptr;
            try {
                logits = &ws.forward(w, batch, Mode::train, &dropout_rng);
            } catch (const NumericError& e) {
                throw NumericError(std::string("training diverged in epoch ") + std::to_string(epoch) + ": " + e.what(),
                                   epoch);
            }
            dlogits.resize(batch.size());
            double batch_loss = 0.0;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const int label = train_set[order[start + i]].label;
                batch_loss += bce_from_logit((*logits)[i], label);
                dlogits[i] = (sigmoid((*logits)[i]) - label) / n;
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericError("training diverged in epoch " + std::to_string(epoch) + ": non-finite loss", epoch);
            }
            epoch_loss += batch_loss;
            if (frozen) continue;

            grads = zero_gradients(w);
            ws.backward(w, dlogits, grads);
            if (config.momentum > 0.0) {
                for (std::size_t li = 0; li < w.layers.size(); ++li) {
                    auto step = [&](std::vector<double>& param, std::vector<double>& vel, const std::vector<double>& g) {
                        for (std::size_t k = 0; k < param.size(); ++k) {
                            vel[k] = config.momentum * vel[k] - config.learning_rate * g[k];
                            param[k] += vel[k];
                        }
                    };
                    LayerParams& p = w.layers[li];
                    LayerParams& v = velocity.layers[li];
                    const LayerParams& g = grads.layers[li];
                    step(p.kernel, v.kernel, g.kernel);
                    step(p.bias, v.bias, g.bias);
                    step(p.gamma, v.gamma, g.gamma);
                    step(p.beta, v.beta, g.beta);
                }
            } else {
                for_each_param_block(w, grads, [&](std::vector<double>& param, const std::vector<double>& g) {
                    for (std::size_t k = 0; k < param.size(); ++k) param[k] -= config.learning_rate * g[k];
                });
            }
            for (std::size_t li = 0; li < spec.layers().size(); ++li) {
                if (spec.layers()[li].kind != LayerKind::batchnorm) continue;
                LayerParams& p = w.layers[li];
                const std::vector<double>& mean = ws.batch_mean(li);
                const std::vector<double>& var = ws.batch_variance(li);
                for (std::size_t c = 0; c < p.moving_mean.size(); ++c) {
                    p.moving_mean[c] = kBatchNormMomentum * p.moving_mean[c] + (1.0 - kBatchNormMomentum) * mean[c];
                    p.moving_variance[c] =
                        kBatchNormMomentum * p.moving_variance[c] + (1.0 - kBatchNormMomentum) * var[c];
                }
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
        Evaluation ev;
        try {
            ev = evaluate(spec, w, val_set);
        } catch (const NumericError& e) {
            throw NumericError(std::string("training diverged in epoch ") + std::to_string(epoch) + ": " + e.what(),
                               epoch);
        }
        if (!std::isfinite(ev.loss)) {
            throw NumericError("training diverged in epoch " + std::to_string(epoch) + ": non-finite validation loss",
                               epoch);
        }
        stats.val_loss = ev.loss;
        stats.val_accuracy = ev.accuracy;
        result.history.push_back(stats);
        if (ev.loss < best_val) {
            best_val = ev.loss;
            result.best_epoch = epoch;
            result.weights = quantize_to_f32(w);
        }
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

TrainResult train(const NetworkSpec& spec, std::span<const Sample> dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int label = dataset[i].label;
        if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
        by_class[label].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty()) {
        throw std::invalid_argument("dataset must contain both classes");
    }
    Rng rng(derive_seed(config.seed, 4));
    std::vector<Sample> train_set;
    std::vector<Sample> val_set;
    for (auto& idx : by_class) {
        shuffle(idx, rng);
        const auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < n_val ? val_set : train_set).push_back(dataset[idx[k]]);
        }
    }
    return train(spec, train_set, val_set, config, on_epoch);
}

double accuracy(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Sample> samples) {
    if (samples.empty()) return 0.0;
    return evaluate(spec, weights, samples).accuracy;
}

}  // namespace vcascade::nn

#pragma once

#include <vector>

#include "vcascade/nn/network.hpp"
#include "vcascade/nn/train.hpp"
#include "vcascade/nn/weights.hpp"
#include "vcascade/rng.hpp"

namespace testnets {

using namespace vcascade;
using namespace vcascade::nn;

inline int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

// Small conv nets. With all_kinds every layer kind appears at least once.
inline NetworkSpec random_spec(Rng& rng, bool all_kinds = false) {
    const Dims in{pick(rng, 4, 9), pick(rng, 4, 9), pick(rng, 1, 3)};
    static const int kernels[] = {1, 3, 5};
    auto act = [&] { return rng.uniform() < 0.7 ? Activation::relu : Activation::none; };
    std::vector<LayerSpec> layers;
    layers.push_back(LayerSpec::conv(pick(rng, 2, 4), kernels[rng.below(3)], act()));
    if (all_kinds || rng.uniform() < 0.5) layers.push_back(LayerSpec::batchnorm());
    if (all_kinds || rng.uniform() < 0.7) layers.push_back(LayerSpec::maxpool());
    if (rng.uniform() < 0.5) layers.push_back(LayerSpec::conv(pick(rng, 2, 3), kernels[rng.below(2)], act()));
    if (all_kinds || rng.uniform() < 0.5) layers.push_back(LayerSpec::dropout(0.25));
    layers.push_back(LayerSpec::flatten());
    if (all_kinds || rng.uniform() < 0.7) layers.push_back(LayerSpec::dense(pick(rng, 3, 6), act()));
    if (rng.uniform() < 0.3) layers.push_back(LayerSpec::dropout(0.1));
    layers.push_back(LayerSpec::dense(1, Activation::sigmoid));
    return NetworkSpec(in, std::move(layers));
}

// He init plus perturbed biases and batchnorm affine terms so no
// parameter sits at a symmetric point. With moving_stats the moving
// statistics are randomized too.
inline WeightBundle random_weights(const NetworkSpec& spec, Rng& rng, bool moving_stats) {
    WeightBundle w = init_weights(spec, rng.next());
    for (LayerParams& p : w.layers) {
        for (double& v : p.bias) v = rng.uniform(-0.2, 0.2);
        for (double& v : p.gamma) v = rng.uniform(0.5, 1.5);
        for (double& v : p.beta) v = rng.uniform(-0.5, 0.5);
        if (moving_stats) {
            for (double& v : p.moving_mean) v = rng.uniform(-0.5, 0.5);
            for (double& v : p.moving_variance) v = rng.uniform(0.2, 2.0);
        }
    }
    return w;
}

inline Tensor random_input(const Dims& d, Rng& rng) {
    Tensor t(d);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

inline std::vector<Sample> random_batch(const Dims& d, Rng& rng, int n) {
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) out.push_back(Sample{random_input(d, rng), i % 2});
    return out;
}

}  // namespace testnets

#include "vcascade/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vcascade::nn {

GradCheckResult gradient_check(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Sample> batch,
                               double epsilon, Mode mode) {
    if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) throw std::invalid_argument("epsilon must be in [1e-6, 1e-3]");
    if (batch.empty()) throw std::invalid_argument("gradient check needs at least one sample");
    check_weights(spec, weights);

    std::vector<Tensor> inputs;
    std::vector<int> labels;
    for (const Sample& s : batch) {
        inputs.push_back(s.input);
        labels.push_back(s.label);
    }
    const LossGradient analytic = loss_and_gradient(spec, weights, inputs, labels, mode);

    GradCheckResult result;
    WeightBundle probe = weights;
    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
        LayerParams& p = probe.layers[li];
        const LayerParams& g = analytic.gradient.layers[li];
        const std::pair<std::vector<double>*, const std::vector<double>*> blocks[] = {
            {&p.kernel, &g.kernel}, {&p.bias, &g.bias}, {&p.gamma, &g.gamma}, {&p.beta, &g.beta}};
        for (const auto& [param, grad] : blocks) {
            for (std::size_t k = 0; k < param->size(); ++k) {
                const double saved = (*param)[k];
                (*param)[k] = saved + epsilon;
                const double up = mean_loss(spec, probe, inputs, labels, mode);
                (*param)[k] = saved - epsilon;
                const double down = mean_loss(spec, probe, inputs, labels, mode);
                (*param)[k] = saved;

                const double numeric = (up - down) / (2.0 * epsilon);
                const double a = (*grad)[k];
                const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
                const double rel = std::abs(a - numeric) / denom;
                if (rel > result.max_relative_error) {
                    result.max_relative_error = rel;
                    result.worst_layer = li;
                }
                ++result.parameters_checked;
            }
        }
    }
    return result;
}

}  // namespace vcascade::nn

#pragma once

#include <cstddef>
#include <span>

#include "vcascade/nn/engine.hpp"
#include "vcascade/nn/train.hpp"

namespace vcascade::nn {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t parameters_checked = 0;
    std::size_t worst_layer = 0;
};

// Gradients whose magnitude is below this are compared absolutely. At
// epsilon 1e-6 one ulp of a unit-scale loss already moves the central
// difference by about 1e-10.
inline constexpr double kGradCheckFloor = 1e-5;

// Compares the analytic gradient of mean BCE to central differences
// (f(w + eps) - f(w - eps)) / 2eps over every trainable parameter.
// Relative error is |a - n| / max(|a|, |n|, kGradCheckFloor). Dropout is
// disabled. epsilon must lie in [1e-6, 1e-3].
GradCheckResult gradient_check(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Sample> batch,
                               double epsilon, Mode mode = Mode::train);

}  // namespace vcascade::nn

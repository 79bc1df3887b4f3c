#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vcascade {

// Bad or unreadable input data (files, manifests, dimensions).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values during inference or training.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, std::optional<int> epoch = std::nullopt)
        : std::runtime_error(what), epoch_(epoch) {}

    std::optional<int> epoch() const { return epoch_; }

private:
    std::optional<int> epoch_;
};

// Components that are individually valid but do not fit together,
// e.g. a projection producing 1 channel feeding a 3-channel model.
class ConfigMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weight file rejected on load. `layer()` names the first offending layer
// when the failure can be attributed to one.
class WeightFormatError : public std::runtime_error {
public:
    explicit WeightFormatError(const std::string& what, std::optional<std::size_t> layer = std::nullopt)
        : std::runtime_error(what), layer_(layer) {}

    std::optional<std::size_t> layer() const { return layer_; }

private:
    std::optional<std::size_t> layer_;
};

}  // namespace vcascade

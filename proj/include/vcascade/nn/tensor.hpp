#pragma once

#include <cstddef>
#include <vector>

namespace vcascade::nn {

struct Dims {
    int height = 0;
    int width = 0;
    int channels = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
               static_cast<std::size_t>(channels);
    }
    bool operator==(const Dims&) const = default;
};

// Row-major HWC activations: element (y, x, c) lives at (y * width + x) * channels + c.
struct Tensor {
    Dims dims;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Dims d) : dims(d), data(d.size(), 0.0) {}
    Tensor(Dims d, std::vector<double> values) : dims(d), data(std::move(values)) {}

    double& at(int y, int x, int c) { return data[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data[index(y, x, c)]; }

    bool operator==(const Tensor&) const = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * dims.width + x) * dims.channels + c;
    }
};

}  // namespace vcascade::nn

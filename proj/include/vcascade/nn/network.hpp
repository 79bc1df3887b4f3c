#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vcascade/nn/tensor.hpp"

namespace vcascade::nn {

enum class LayerKind { conv2d, maxpool2, batchnorm, dropout, flatten, dense };
enum class Activation { none, relu, sigmoid };

const char* to_string(LayerKind kind);
const char* to_string(Activation act);

struct LayerSpec {
    LayerKind kind = LayerKind::flatten;
    int filters = 0;  // conv filters or dense width
    int kernel = 0;   // conv only, odd
    Activation activation = Activation::none;
    double rate = 0.0;  // dropout only

    static LayerSpec conv(int filters, int kernel, Activation act = Activation::relu) {
        return {LayerKind::conv2d, filters, kernel, act, 0.0};
    }
    static LayerSpec maxpool() { return {LayerKind::maxpool2, 0, 0, Activation::none, 0.0}; }
    static LayerSpec batchnorm() { return {LayerKind::batchnorm, 0, 0, Activation::none, 0.0}; }
    static LayerSpec dropout(double rate) { return {LayerKind::dropout, 0, 0, Activation::none, rate}; }
    static LayerSpec flatten() { return {LayerKind::flatten, 0, 0, Activation::none, 0.0}; }
    static LayerSpec dense(int width, Activation act = Activation::relu) {
        return {LayerKind::dense, width, 0, act, 0.0};
    }

    bool operator==(const LayerSpec&) const = default;
};

// Batchnorm constants shared by training and inference.
inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

// A validated layer stack. Construction checks that every layer's output
// shape chains from the input and that the network ends in a single
// sigmoid unit; invalid stacks throw std::invalid_argument.
class NetworkSpec {
public:
    NetworkSpec(Dims input, std::vector<LayerSpec> layers);

    const Dims& input_dims() const { return input_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }

    // shapes()[i] is the output of layer i; shapes() has layers().size() entries.
    const std::vector<Dims>& shapes() const { return shapes_; }
    const Dims& input_of(std::size_t layer) const { return layer == 0 ? input_ : shapes_[layer - 1]; }

    // Stable text form, the input to checksum().
    std::string canonical() const;
    std::uint64_t checksum() const;

    bool operator==(const NetworkSpec& other) const {
        return input_ == other.input_ && layers_ == other.layers_;
    }

private:
    Dims input_;
    std::vector<LayerSpec> layers_;
    std::vector<Dims> shapes_;
};

// Conv widths and dense widths of the five-block base model.
struct ModelWidths {
    std::array<int, 5> conv_filters{32, 64, 128, 256, 64};
    std::array<int, 5> conv_kernels{5, 3, 3, 3, 3};
    int dense_hidden1 = 128;
    int dense_hidden2 = 64;
    double dropout_rate = 0.2;

    static ModelWidths paper() { return {}; }
    // Narrow variant for CPU training of 64x64 inputs in minutes.
    static ModelWidths desk() { return {{8, 16, 32, 32, 16}, {5, 3, 3, 3, 3}, 32, 16, 0.2}; }
};

NetworkSpec build_paper_model(int channels, int input_side, const ModelWidths& widths = ModelWidths::paper());

struct ParamCount {
    std::uint64_t total = 0;
    std::vector<std::uint64_t> per_layer;
};

// conv (k*k*c_in + 1) * filters, dense (in + 1) * out, batchnorm 4 * channels.
ParamCount count_params(const NetworkSpec& spec);
ParamCount count_params(const Dims& input, const std::vector<LayerSpec>& layers);

// Serialization helpers for sidecar files and reports.
std::string to_json_string(const NetworkSpec& spec);
NetworkSpec network_from_json_string(const std::string& text);

}  // namespace vcascade::nn

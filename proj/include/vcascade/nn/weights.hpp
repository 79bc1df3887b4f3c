#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcascade/nn/network.hpp"

namespace vcascade::nn {

enum class BlockKind : std::uint8_t {
    kernel = 0,
    bias = 1,
    gamma = 2,
    beta = 3,
    moving_mean = 4,
    moving_variance = 5,
};

// Parameters of one layer. Blocks a layer kind does not use stay empty.
// Conv kernels are laid out [ky][kx][c_in][filter], dense matrices [in][out].
struct LayerParams {
    std::vector<double> kernel;
    std::vector<double> bias;
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> moving_mean;
    std::vector<double> moving_variance;

    bool operator==(const LayerParams&) const = default;
};

struct WeightBundle {
    std::uint64_t spec_hash = 0;
    std::vector<LayerParams> layers;

    bool operator==(const WeightBundle&) const = default;
};

struct BlockShape {
    BlockKind kind;
    std::size_t elements;
};

// Blocks layer `layer` of `spec` owns, in file order.
std::vector<BlockShape> expected_blocks(const NetworkSpec& spec, std::size_t layer);

// He-uniform conv/dense kernels (limit sqrt(6 / fan_in)), zero biases,
// identity batchnorm (gamma 1, beta 0, mean 0, variance 1).
WeightBundle init_weights(const NetworkSpec& spec, std::uint64_t seed);

// Same layout as init_weights with every kernel and bias zero.
WeightBundle zero_weights(const NetworkSpec& spec);

// Throws WeightFormatError naming the first layer whose blocks do not
// match `spec`, or whose moving variance is not strictly positive.
void check_weights(const NetworkSpec& spec, const WeightBundle& bundle);

// Rounds every value to the nearest float so that save/load is lossless.
WeightBundle quantize_to_f32(WeightBundle bundle);

// Layout: "CGW1", spec checksum (u64 LE), then per block
// layer_index u32 LE, block_kind u8, element_count u64 LE, f32 LE elements.
std::vector<std::uint8_t> save_weights(const WeightBundle& bundle);
WeightBundle load_weights(std::span<const std::uint8_t> bytes, const NetworkSpec& spec);

void write_weight_file(const std::string& path, const WeightBundle& bundle);
WeightBundle read_weight_file(const std::string& path, const NetworkSpec& spec);

}  // namespace vcascade::nn

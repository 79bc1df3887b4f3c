#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcascade/nn/tensor.hpp"

namespace vcascade {

// 8-bit raster, row-major, channel-interleaved. Three channels are RGB,
// one channel is luminance.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
    std::uint64_t index = 0;  // frame ordinal within a sequence

    Frame() = default;
    Frame(int w, int h, int c, std::uint64_t idx = 0)
        : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, 0), index(idx) {}

    std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const Frame&) const = default;
};

enum class ChannelProjection {
    identity_rgb,
    grayscale,
    pair_RG,
    pair_GB,
    pair_BR,
    single_R,
    single_G,
    single_B,
};

int output_channels(ChannelProjection proj);
std::string to_string(ChannelProjection proj);
ChannelProjection parse_projection(const std::string& name);  // throws std::invalid_argument

// BT.601 luma with round-half-up: (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Square target_side x target_side output. Axes that shrink use area
// averaging over the exact source footprint; axes that grow use nearest
// neighbour. Results are rounded half-up.
Frame resize_antialiased(const Frame& frame, int target_side);

// All projections read a three-channel RGB frame.
Frame project(const Frame& frame, ChannelProjection proj);

// Values divided by 255, dims (height, width, channels).
nn::Tensor to_tensor(const Frame& frame);

}  // namespace vcascade

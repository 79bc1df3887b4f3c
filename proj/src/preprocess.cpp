#include "vcascade/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "vcascade/error.hpp"

namespace vcascade {

namespace {

struct Tap {
    int index;
    long long weight;
};

// Source taps contributing to each output coordinate along one axis, with
// integer coverage weights in units of 1/dst of a source pixel.
std::vector<std::vector<Tap>> axis_taps(int src, int dst) {
    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(dst));
    if (dst <= src) {
        for (int o = 0; o < dst; ++o) {
            const long long lo = static_cast<long long>(o) * src;
            const long long hi = static_cast<long long>(o + 1) * src;
            for (int s = static_cast<int>(lo / dst); s < src && static_cast<long long>(s) * dst < hi; ++s) {
                const long long w = std::min(hi, static_cast<long long>(s + 1) * dst) -
                                    std::max(lo, static_cast<long long>(s) * dst);
                if (w > 0) taps[o].push_back({s, w});
            }
        }
    } else {
        for (int o = 0; o < dst; ++o) {
            const int s = std::min(src - 1, static_cast<int>((static_cast<long long>(o) * 2 + 1) * src / (2LL * dst)));
            taps[o].push_back({s, 1});
        }
    }
    return taps;
}

}  // namespace

int output_channels(ChannelProjection proj) {
    switch (proj) {
    case ChannelProjection::identity_rgb: return 3;
    case ChannelProjection::grayscale: return 1;
    case ChannelProjection::pair_RG:
    case ChannelProjection::pair_GB:
    case ChannelProjection::pair_BR: return 2;
    case ChannelProjection::single_R:
    case ChannelProjection::single_G:
    case ChannelProjection::single_B: return 1;
    }
    return 0;
}

std::string to_string(ChannelProjection proj) {
    switch (proj) {
    case ChannelProjection::identity_rgb: return "identity_rgb";
    case ChannelProjection::grayscale: return "grayscale";
    case ChannelProjection::pair_RG: return "pair_RG";
    case ChannelProjection::pair_GB: return "pair_GB";
    case ChannelProjection::pair_BR: return "pair_BR";
    case ChannelProjection::single_R: return "single_R";
    case ChannelProjection::single_G: return "single_G";
    case ChannelProjection::single_B: return "single_B";
    }
    return "?";
}

ChannelProjection parse_projection(const std::string& name) {
    for (ChannelProjection p : {ChannelProjection::identity_rgb, ChannelProjection::grayscale, ChannelProjection::pair_RG,
                                ChannelProjection::pair_GB, ChannelProjection::pair_BR, ChannelProjection::single_R,
                                ChannelProjection::single_G, ChannelProjection::single_B}) {
        if (to_string(p) == name) return p;
    }
    throw std::invalid_argument("unknown projection '" + name + "'");
}

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

Frame resize_antialiased(const Frame& frame, int target_side) {
    if (frame.width <= 0 || frame.height <= 0 || frame.channels <= 0) {
        throw InputError("cannot resize a zero-dimension frame");
    }
    if (target_side <= 0) throw std::invalid_argument("target_side must be positive");
    if (frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height * frame.channels) {
        throw InputError("frame pixel buffer does not match its dimensions");
    }
    if (frame.width == target_side && frame.height == target_side) return frame;

    const auto xt = axis_taps(frame.width, target_side);
    const auto yt = axis_taps(frame.height, target_side);
    Frame out(target_side, target_side, frame.channels, frame.index);
    std::vector<long long> acc(static_cast<std::size_t>(frame.channels));
    for (int oy = 0; oy < target_side; ++oy) {
        for (int ox = 0; ox < target_side; ++ox) {
            std::fill(acc.begin(), acc.end(), 0LL);
            long long total = 0;
            for (const Tap& ty : yt[oy]) {
                for (const Tap& tx : xt[ox]) {
                    const long long w = ty.weight * tx.weight;
                    total += w;
                    for (int c = 0; c < frame.channels; ++c) acc[c] += w * frame.at(tx.index, ty.index, c);
                }
            }
            for (int c = 0; c < frame.channels; ++c) out.at(ox, oy, c) = static_cast<std::uint8_t>((2 * acc[c] + total) / (2 * total));
        }
    }
    return out;
}

Frame project(const Frame& frame, ChannelProjection proj) {
    if (frame.channels != 3) {
        throw ConfigMismatch("projection " + to_string(proj) + " needs a 3-channel RGB frame, got " +
                             std::to_string(frame.channels) + " channel(s)");
    }
    if (proj == ChannelProjection::identity_rgb) return frame;

    Frame out(frame.width, frame.height, output_channels(proj), frame.index);
    const std::size_t pixels = static_cast<std::size_t>(frame.width) * frame.height;
    const std::uint8_t* src = frame.pixels.data();
    std::uint8_t* dst = out.pixels.data();
    if (proj == ChannelProjection::grayscale) {
        for (std::size_t i = 0; i < pixels; ++i) dst[i] = luminance(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
        return out;
    }
    std::array<int, 2> picks{};
    int count = 2;
    switch (proj) {
    case ChannelProjection::pair_RG: picks = {0, 1}; break;
    case ChannelProjection::pair_GB: picks = {1, 2}; break;
    case ChannelProjection::pair_BR: picks = {2, 0}; break;
    case ChannelProjection::single_R: picks = {0, 0}; count = 1; break;
    case ChannelProjection::single_G: picks = {1, 0}; count = 1; break;
    case ChannelProjection::single_B: picks = {2, 0}; count = 1; break;
    default: break;
    }
    for (std::size_t i = 0; i < pixels; ++i) {
        for (int c = 0; c < count; ++c) dst[i * count + c] = src[3 * i + picks[c]];
    }
    return out;
}

nn::Tensor to_tensor(const Frame& frame) {
    nn::Tensor t({frame.height, frame.width, frame.channels});
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) t.data[i] = frame.pixels[i] / 255.0;
    return t;
}

}  // namespace vcascade

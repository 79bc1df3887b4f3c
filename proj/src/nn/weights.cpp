#include "vcascade/nn/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vcascade/error.hpp"
#include "vcascade/rng.hpp"

namespace vcascade::nn {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'W', '1'};
constexpr std::size_t kHeaderSize = 4 + 8;
constexpr std::size_t kBlockHeaderSize = 4 + 1 + 8;

const char* block_name(BlockKind kind) {
    switch (kind) {
    case BlockKind::kernel: return "kernel";
    case BlockKind::bias: return "bias";
    case BlockKind::gamma: return "gamma";
    case BlockKind::beta: return "beta";
    case BlockKind::moving_mean: return "moving_mean";
    case BlockKind::moving_variance: return "moving_variance";
    }
    return "?";
}

std::vector<double>& block_ref(LayerParams& p, BlockKind kind) {
    switch (kind) {
    case BlockKind::kernel: return p.kernel;
    case BlockKind::bias: return p.bias;
    case BlockKind::gamma: return p.gamma;
    case BlockKind::beta: return p.beta;
    case BlockKind::moving_mean: return p.moving_mean;
    case BlockKind::moving_variance: return p.moving_variance;
    }
    return p.kernel;
}

const std::vector<double>& block_ref(const LayerParams& p, BlockKind kind) {
    return block_ref(const_cast<LayerParams&>(p), kind);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t pos, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    return v;
}

std::string layer_msg(std::size_t layer, const std::string& what) {
    return "layer " + std::to_string(layer) + ": " + what;
}

}  // namespace

std::vector<BlockShape> expected_blocks(const NetworkSpec& spec, std::size_t layer) {
    const LayerSpec& l = spec.layers().at(layer);
    const Dims& in = spec.input_of(layer);
    switch (l.kind) {
    case LayerKind::conv2d:
        return {{BlockKind::kernel, static_cast<std::size_t>(l.kernel) * l.kernel * in.channels * l.filters},
                {BlockKind::bias, static_cast<std::size_t>(l.filters)}};
    case LayerKind::dense:
        return {{BlockKind::kernel, in.size() * l.filters}, {BlockKind::bias, static_cast<std::size_t>(l.filters)}};
    case LayerKind::batchnorm: {
        const auto c = static_cast<std::size_t>(in.channels);
        return {{BlockKind::gamma, c}, {BlockKind::beta, c}, {BlockKind::moving_mean, c}, {BlockKind::moving_variance, c}};
    }
    default:
        return {};
    }
}

WeightBundle zero_weights(const NetworkSpec& spec) {
    WeightBundle w;
    w.spec_hash = spec.checksum();
    w.layers.resize(spec.layers().size());
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        for (const BlockShape& b : expected_blocks(spec, i)) {
            const double fill = (b.kind == BlockKind::gamma || b.kind == BlockKind::moving_variance) ? 1.0 : 0.0;
            block_ref(w.layers[i], b.kind).assign(b.elements, fill);
        }
    }
    return w;
}

WeightBundle init_weights(const NetworkSpec& spec, std::uint64_t seed) {
    WeightBundle w = zero_weights(spec);
    Rng rng(derive_seed(seed, 0x1417));
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        const LayerSpec& l = spec.layers()[i];
        if (l.kind != LayerKind::conv2d && l.kind != LayerKind::dense) continue;
        const Dims& in = spec.input_of(i);
        const double fan_in = l.kind == LayerKind::conv2d
                                  ? static_cast<double>(l.kernel) * l.kernel * in.channels
                                  : static_cast<double>(in.size());
        const double limit = std::sqrt(6.0 / fan_in);
        for (double& v : w.layers[i].kernel) v = rng.uniform(-limit, limit);
    }
    return w;
}

void check_weights(const NetworkSpec& spec, const WeightBundle& bundle) {
    if (bundle.layers.size() != spec.layers().size()) {
        const std::size_t first = std::min(bundle.layers.size(), spec.layers().size());
        throw WeightFormatError(layer_msg(first, "bundle has " + std::to_string(bundle.layers.size()) +
                                                     " layers, network has " + std::to_string(spec.layers().size())),
                                first);
    }
    for (std::size_t i = 0; i < spec.layers().size(); ++i) {
        const std::vector<BlockShape> expected = expected_blocks(spec, i);
        for (BlockKind kind : {BlockKind::kernel, BlockKind::bias, BlockKind::gamma, BlockKind::beta,
                               BlockKind::moving_mean, BlockKind::moving_variance}) {
            std::size_t want = 0;
            for (const BlockShape& b : expected) {
                if (b.kind == kind) want = b.elements;
            }
            const std::size_t have = block_ref(bundle.layers[i], kind).size();
            if (have != want) {
                throw WeightFormatError(layer_msg(i, std::string(block_name(kind)) + " has " + std::to_string(have) +
                                                         " elements, expected " + std::to_string(want)),
                                        i);
            }
        }
        for (double v : bundle.layers[i].moving_variance) {
            if (!(v > 0.0)) throw WeightFormatError(layer_msg(i, "moving variance must be strictly positive"), i);
        }
    }
    if (bundle.spec_hash != spec.checksum()) {
        throw WeightFormatError("spec checksum mismatch: weights were produced for a different network");
    }
}

WeightBundle quantize_to_f32(WeightBundle bundle) {
    for (LayerParams& p : bundle.layers) {
        for (auto* block : {&p.kernel, &p.bias, &p.gamma, &p.beta, &p.moving_mean, &p.moving_variance}) {
            for (double& v : *block) v = static_cast<double>(static_cast<float>(v));
        }
    }
    return bundle;
}

std::vector<std::uint8_t> save_weights(const WeightBundle& bundle) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u64(out, bundle.spec_hash);
    for (std::size_t i = 0; i < bundle.layers.size(); ++i) {
        for (BlockKind kind : {BlockKind::kernel, BlockKind::bias, BlockKind::gamma, BlockKind::beta,
                               BlockKind::moving_mean, BlockKind::moving_variance}) {
            const std::vector<double>& values = block_ref(bundle.layers[i], kind);
            if (values.empty()) continue;
            put_u32(out, static_cast<std::uint32_t>(i));
            out.push_back(static_cast<std::uint8_t>(kind));
            put_u64(out, values.size());
            for (double v : values) {
                const float f = static_cast<float>(v);
                std::uint32_t bits;
                std::memcpy(&bits, &f, sizeof bits);
                put_u32(out, bits);
            }
        }
    }
    return out;
}

WeightBundle load_weights(std::span<const std::uint8_t> bytes, const NetworkSpec& spec) {
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw WeightFormatError("bad magic: not a CGW1 weight file");
    }
    WeightBundle w;
    w.spec_hash = get_le(bytes, 4, 8);
    w.layers.resize(spec.layers().size());

    std::size_t pos = kHeaderSize;
    std::size_t last_layer = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < kBlockHeaderSize) {
            throw WeightFormatError(layer_msg(last_layer, "truncated block header"), last_layer);
        }
        const auto layer = static_cast<std::size_t>(get_le(bytes, pos, 4));
        const auto kind_raw = bytes[pos + 4];
        const std::uint64_t count = get_le(bytes, pos + 5, 8);
        pos += kBlockHeaderSize;
        if (layer >= spec.layers().size()) {
            throw WeightFormatError(layer_msg(layer, "block refers to a layer the network does not have"), layer);
        }
        if (layer < last_layer) {
            throw WeightFormatError(layer_msg(layer, "blocks out of order"), layer);
        }
        last_layer = layer;
        if (kind_raw > static_cast<std::uint8_t>(BlockKind::moving_variance)) {
            throw WeightFormatError(layer_msg(layer, "unknown block kind " + std::to_string(kind_raw)), layer);
        }
        std::size_t want = 0;
        bool owned = false;
        for (const BlockShape& b : expected_blocks(spec, layer)) {
            if (b.kind == static_cast<BlockKind>(kind_raw)) {
                want = b.elements;
                owned = true;
            }
        }
        if (!owned) {
            throw WeightFormatError(layer_msg(layer, std::string(block_name(static_cast<BlockKind>(kind_raw))) +
                                                         " block does not belong to a " +
                                                         to_string(spec.layers()[layer].kind) + " layer"),
                                    layer);
        }
        if (count != want) {
            throw WeightFormatError(layer_msg(layer, std::string(block_name(static_cast<BlockKind>(kind_raw))) +
                                                         " declares " + std::to_string(count) + " elements, expected " +
                                                         std::to_string(want)),
                                    layer);
        }
        if (count > (bytes.size() - pos) / 4) {
            throw WeightFormatError(layer_msg(layer, "truncated block: " + std::to_string(count) +
                                                         " elements declared, " +
                                                         std::to_string((bytes.size() - pos) / 4) + " available"),
                                    layer);
        }
        std::vector<double>& dst = block_ref(w.layers[layer], static_cast<BlockKind>(kind_raw));
        if (!dst.empty()) throw WeightFormatError(layer_msg(layer, "duplicate block"), layer);
        dst.resize(count);
        for (std::uint64_t k = 0; k < count; ++k) {
            const auto bits = static_cast<std::uint32_t>(get_le(bytes, pos, 4));
            float f;
            std::memcpy(&f, &bits, sizeof f);
            dst[k] = f;
            pos += 4;
        }
    }
    check_weights(spec, w);
    return w;
}

void write_weight_file(const std::string& path, const WeightBundle& bundle) {
    const std::vector<std::uint8_t> bytes = save_weights(bundle);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for '" + path + "'");
}

WeightBundle read_weight_file(const std::string& path, const NetworkSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open weight file '" + path + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_weights(bytes, spec);
}

}  // namespace vcascade::nn

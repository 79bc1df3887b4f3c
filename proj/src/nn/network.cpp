#include "vcascade/nn/network.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace vcascade::nn {

namespace {

std::string layer_error(std::size_t index, const std::string& what) {
    return "layer " + std::to_string(index) + ": " + what;
}

// Per-layer shape arithmetic without whole-network structural rules.
std::vector<Dims> chain_shapes(const Dims& input, const std::vector<LayerSpec>& layers) {
    if (input.height <= 0 || input.width <= 0 || input.channels <= 0) {
        throw std::invalid_argument("network input dims must be positive");
    }
    std::vector<Dims> shapes;
    shapes.reserve(layers.size());
    Dims cur = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.kind != LayerKind::conv2d && l.kernel != 0) {
            throw std::invalid_argument(layer_error(i, "kernel is only valid on conv2d"));
        }
        if (l.kind != LayerKind::dropout && l.rate != 0.0) {
            throw std::invalid_argument(layer_error(i, "rate is only valid on dropout"));
        }
        if (l.kind != LayerKind::conv2d && l.kind != LayerKind::dense && l.activation != Activation::none) {
            throw std::invalid_argument(layer_error(i, "activation is only valid on conv2d and dense"));
        }
        switch (l.kind) {
        case LayerKind::conv2d:
            if (l.filters <= 0) throw std::invalid_argument(layer_error(i, "conv filters must be positive"));
            if (l.kernel <= 0 || l.kernel % 2 == 0) {
                throw std::invalid_argument(layer_error(i, "conv kernel must be a positive odd integer"));
            }
            cur = {cur.height, cur.width, l.filters};  // SAME padding
            break;
        case LayerKind::maxpool2:
            if (cur.height < 2 || cur.width < 2) {
                throw std::invalid_argument(layer_error(i, "maxpool input smaller than 2x2"));
            }
            cur = {cur.height / 2, cur.width / 2, cur.channels};
            break;
        case LayerKind::batchnorm:
        case LayerKind::dropout:
            if (l.kind == LayerKind::dropout && (l.rate < 0.0 || l.rate >= 1.0)) {
                throw std::invalid_argument(layer_error(i, "dropout rate must be in [0, 1)"));
            }
            break;
        case LayerKind::flatten:
            cur = {1, 1, static_cast<int>(cur.size())};
            break;
        case LayerKind::dense:
            if (l.filters <= 0) throw std::invalid_argument(layer_error(i, "dense width must be positive"));
            cur = {1, 1, l.filters};
            break;
        }
        shapes.push_back(cur);
    }
    return shapes;
}

}  // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    }
    return "?";
}

const char* to_string(Activation act) {
    switch (act) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

NetworkSpec::NetworkSpec(Dims input, std::vector<LayerSpec> layers)
    : input_(input), layers_(std::move(layers)) {
    shapes_ = chain_shapes(input_, layers_);

    std::size_t flattens = 0;
    bool after_flatten = false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& l = layers_[i];
        if (l.kind == LayerKind::flatten) {
            ++flattens;
            after_flatten = true;
            continue;
        }
        if (after_flatten && l.kind != LayerKind::dense && l.kind != LayerKind::dropout) {
            throw std::invalid_argument(layer_error(i, std::string(to_string(l.kind)) + " after flatten"));
        }
        if (!after_flatten && l.kind == LayerKind::dense) {
            throw std::invalid_argument(layer_error(i, "dense before flatten"));
        }
        if (l.activation == Activation::sigmoid && i + 1 != layers_.size()) {
            throw std::invalid_argument(layer_error(i, "sigmoid is only permitted on the final dense layer"));
        }
    }
    if (flattens != 1) throw std::invalid_argument("network must contain exactly one flatten layer");
    const LayerSpec& last = layers_.back();
    if (last.kind != LayerKind::dense || last.filters != 1 || last.activation != Activation::sigmoid) {
        throw std::invalid_argument("final layer must be dense(1, sigmoid)");
    }
}

std::string NetworkSpec::canonical() const {
    std::string out = "in=" + std::to_string(input_.height) + "x" + std::to_string(input_.width) + "x" +
                      std::to_string(input_.channels);
    for (const LayerSpec& l : layers_) {
        out += ";";
        out += to_string(l.kind);
        switch (l.kind) {
        case LayerKind::conv2d:
            out += ":" + std::to_string(l.filters) + "," + std::to_string(l.kernel) + "," + to_string(l.activation);
            break;
        case LayerKind::dense:
            out += ":" + std::to_string(l.filters) + "," + to_string(l.activation);
            break;
        case LayerKind::dropout: {
            char buf[32];
            std::snprintf(buf, sizeof buf, ":%.17g", l.rate);
            out += buf;
            break;
        }
        default:
            break;
        }
    }
    return out;
}

std::uint64_t NetworkSpec::checksum() const {
    // FNV-1a, 64 bit.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

NetworkSpec build_paper_model(int channels, int input_side, const ModelWidths& widths) {
    if (channels < 1 || channels > 3) throw std::invalid_argument("channels must be 1, 2 or 3");
    if (input_side < 32) throw std::invalid_argument("input_side must be at least 32 for five 2x pools");

    std::vector<LayerSpec> layers;
    for (std::size_t b = 0; b < widths.conv_filters.size(); ++b) {
        layers.push_back(LayerSpec::conv(widths.conv_filters[b], widths.conv_kernels[b]));
        layers.push_back(LayerSpec::maxpool());
        layers.push_back(LayerSpec::batchnorm());
    }
    layers.push_back(LayerSpec::dropout(widths.dropout_rate));
    layers.push_back(LayerSpec::flatten());
    layers.push_back(LayerSpec::dense(widths.dense_hidden1));
    layers.push_back(LayerSpec::dropout(widths.dropout_rate));
    layers.push_back(LayerSpec::dense(widths.dense_hidden2));
    layers.push_back(LayerSpec::dense(1, Activation::sigmoid));
    return NetworkSpec({input_side, input_side, channels}, std::move(layers));
}

ParamCount count_params(const Dims& input, const std::vector<LayerSpec>& layers) {
    const std::vector<Dims> shapes = chain_shapes(input, layers);
    ParamCount pc;
    pc.per_layer.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Dims& in = i == 0 ? input : shapes[i - 1];
        const LayerSpec& l = layers[i];
        std::uint64_t n = 0;
        switch (l.kind) {
        case LayerKind::conv2d:
            n = (static_cast<std::uint64_t>(l.kernel) * l.kernel * in.channels + 1) * l.filters;
            break;
        case LayerKind::dense:
            n = (static_cast<std::uint64_t>(in.size()) + 1) * l.filters;
            break;
        case LayerKind::batchnorm:
            n = 4ULL * in.channels;
            break;
        default:
            break;
        }
        pc.per_layer.push_back(n);
        pc.total += n;
    }
    return pc;
}

ParamCount count_params(const NetworkSpec& spec) { return count_params(spec.input_dims(), spec.layers()); }

std::string to_json_string(const NetworkSpec& spec) {
    nlohmann::json j;
    j["input"] = {spec.input_dims().height, spec.input_dims().width, spec.input_dims().channels};
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerSpec& l : spec.layers()) {
        nlohmann::json lj{{"kind", to_string(l.kind)}};
        if (l.kind == LayerKind::conv2d || l.kind == LayerKind::dense) {
            lj["filters"] = l.filters;
            lj["activation"] = to_string(l.activation);
        }
        if (l.kind == LayerKind::conv2d) lj["kernel"] = l.kernel;
        if (l.kind == LayerKind::dropout) lj["rate"] = l.rate;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    j["checksum"] = spec.checksum();
    return j.dump(2);
}

NetworkSpec network_from_json_string(const std::string& text) {
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        const auto& in = j.at("input");
        Dims dims{in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
        std::vector<LayerSpec> layers;
        for (const auto& lj : j.at("layers")) {
            const std::string kind = lj.at("kind").get<std::string>();
            LayerSpec l;
            if (kind == "conv2d") l.kind = LayerKind::conv2d;
            else if (kind == "maxpool2") l.kind = LayerKind::maxpool2;
            else if (kind == "batchnorm") l.kind = LayerKind::batchnorm;
            else if (kind == "dropout") l.kind = LayerKind::dropout;
            else if (kind == "flatten") l.kind = LayerKind::flatten;
            else if (kind == "dense") l.kind = LayerKind::dense;
            else throw std::invalid_argument("unknown layer kind '" + kind + "'");
            l.filters = lj.value("filters", 0);
            l.kernel = lj.value("kernel", 0);
            l.rate = lj.value("rate", 0.0);
            const std::string act = lj.value("activation", std::string("none"));
            if (act == "relu") l.activation = Activation::relu;
            else if (act == "sigmoid") l.activation = Activation::sigmoid;
            else if (act == "none") l.activation = Activation::none;
            else throw std::invalid_argument("unknown activation '" + act + "'");
            layers.push_back(l);
        }
        return NetworkSpec(dims, std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed network description: ") + e.what());
    }
}

}  // namespace vcascade::nn

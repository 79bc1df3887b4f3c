#include "vcascade/nn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vcascade/error.hpp"

namespace vcascade::nn {

namespace {

// C[M x N] += A[M x K] * B[K x N], all row-major.
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[K x N] += A[M x K]^T * B[M x N]
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[M x K] = A[M x N] * B[K x N]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
            crow[p] = s;
        }
    }
}

void im2col(const double* in, const Dims& d, int k, double* col) {
    const int pad = k / 2;
    const std::size_t kdim = static_cast<std::size_t>(k) * k * d.channels;
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            double* row = col + (static_cast<std::size_t>(y) * d.width + x) * kdim;
            for (int ky = 0; ky < k; ++ky) {
                const int yy = y + ky - pad;
                for (int kx = 0; kx < k; ++kx) {
                    const int xx = x + kx - pad;
                    double* dst = row + (static_cast<std::size_t>(ky) * k + kx) * d.channels;
                    if (yy < 0 || yy >= d.height || xx < 0 || xx >= d.width) {
                        std::fill(dst, dst + d.channels, 0.0);
                    } else {
                        const double* src = in + (static_cast<std::size_t>(yy) * d.width + xx) * d.channels;
                        std::copy(src, src + d.channels, dst);
                    }
                }
            }
        }
    }
}

void col2im_acc(const double* col, const Dims& d, int k, double* out) {
    const int pad = k / 2;
    const std::size_t kdim = static_cast<std::size_t>(k) * k * d.channels;
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            const double* row = col + (static_cast<std::size_t>(y) * d.width + x) * kdim;
            for (int ky = 0; ky < k; ++ky) {
                const int yy = y + ky - pad;
                if (yy < 0 || yy >= d.height) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int xx = x + kx - pad;
                    if (xx < 0 || xx >= d.width) continue;
                    const double* src = row + (static_cast<std::size_t>(ky) * k + kx) * d.channels;
                    double* dst = out + (static_cast<std::size_t>(yy) * d.width + xx) * d.channels;
                    for (int c = 0; c < d.channels; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

void require_finite(const std::vector<double>& values, std::size_t layer) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite activation in layer " + std::to_string(layer) +
                               " (corrupted weights or input)");
        }
    }
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_from_logit(double logit, int label) {
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

Workspace::Workspace(const NetworkSpec& spec)
    : spec_(&spec), acts_(spec.layers().size() + 1), produced_(spec.layers().size()), caches_(spec.layers().size()) {}

const std::vector<double>& Workspace::forward(const WeightBundle& weights, std::span<const Tensor> inputs, Mode mode,
                                              Rng* dropout_rng) {
    const NetworkSpec& spec = *spec_;
    const Dims& in_dims = spec.input_dims();
    mode_ = mode;
    batch_ = static_cast<int>(inputs.size());
    const std::size_t n = inputs.size();

    std::vector<double>& input = acts_[0];
    input.resize(n * in_dims.size());
    for (std::size_t b = 0; b < n; ++b) {
        if (!(inputs[b].dims == in_dims) || inputs[b].data.size() != in_dims.size()) {
            throw InputError("input dims " + std::to_string(inputs[b].dims.height) + "x" +
                             std::to_string(inputs[b].dims.width) + "x" + std::to_string(inputs[b].dims.channels) +
                             " do not match network input " + std::to_string(in_dims.height) + "x" +
                             std::to_string(in_dims.width) + "x" + std::to_string(in_dims.channels));
        }
        std::copy(inputs[b].data.begin(), inputs[b].data.end(), input.begin() + b * in_dims.size());
    }

    Dims cur = in_dims;
    for (std::size_t li = 0; li < spec.layers().size(); ++li) {
        const LayerSpec& l = spec.layers()[li];
        const LayerParams& p = weights.layers[li];
        const std::vector<double>& src = acts_[li];
        std::vector<double>& dst = acts_[li + 1];
        LayerCache& cache = caches_[li];
        Dims out = cur;

        switch (l.kind) {
        case LayerKind::conv2d: {
            out = {cur.height, cur.width, l.filters};
            const std::size_t hw = static_cast<std::size_t>(cur.height) * cur.width;
            const std::size_t kdim = static_cast<std::size_t>(l.kernel) * l.kernel * cur.channels;
            const auto f = static_cast<std::size_t>(l.filters);
            dst.assign(n * out.size(), 0.0);
            col_.resize(hw * kdim);
            for (std::size_t b = 0; b < n; ++b) {
                double* o = dst.data() + b * out.size();
                for (std::size_t pix = 0; pix < hw; ++pix) std::copy(p.bias.begin(), p.bias.end(), o + pix * f);
                im2col(src.data() + b * cur.size(), cur, l.kernel, col_.data());
                gemm_acc(hw, f, kdim, col_.data(), p.kernel.data(), o);
            }
            if (l.activation == Activation::relu) {
                for (double& v : dst) v = std::max(v, 0.0);
            }
            break;
        }
        case LayerKind::maxpool2: {
            out = {cur.height / 2, cur.width / 2, cur.channels};
            dst.resize(n * out.size());
            cache.argmax.resize(n * out.size());
            for (std::size_t b = 0; b < n; ++b) {
                const double* s = src.data() + b * cur.size();
                for (int oy = 0; oy < out.height; ++oy) {
                    for (int ox = 0; ox < out.width; ++ox) {
                        for (int c = 0; c < cur.channels; ++c) {
                            std::uint32_t best = 0;
                            double best_v = 0.0;
                            bool first = true;
                            for (int dy = 0; dy < 2; ++dy) {
                                for (int dx = 0; dx < 2; ++dx) {
                                    const auto idx = static_cast<std::uint32_t>(
                                        ((2 * oy + dy) * cur.width + (2 * ox + dx)) * cur.channels + c);
                                    if (first || s[idx] > best_v) {
                                        best = idx;
                                        best_v = s[idx];
                                        first = false;
                                    }
                                }
                            }
                            const std::size_t o = b * out.size() + (static_cast<std::size_t>(oy) * out.width + ox) *
                                                                       out.channels + c;
                            dst[o] = best_v;
                            cache.argmax[o] = best;
                        }
                    }
                }
            }
            break;
        }
        case LayerKind::batchnorm: {
            const auto c = static_cast<std::size_t>(cur.channels);
            const std::size_t positions = n * static_cast<std::size_t>(cur.height) * cur.width;
            cache.mean.assign(c, 0.0);
            cache.variance.assign(c, 0.0);
            if (mode == Mode::train) {
                for (std::size_t i = 0; i < positions; ++i) {
                    for (std::size_t ch = 0; ch < c; ++ch) cache.mean[ch] += src[i * c + ch];
                }
                for (double& m : cache.mean) m /= static_cast<double>(positions);
                for (std::size_t i = 0; i < positions; ++i) {
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        const double d = src[i * c + ch] - cache.mean[ch];
                        cache.variance[ch] += d * d;
                    }
                }
                for (double& v : cache.variance) v /= static_cast<double>(positions);
            } else {
                cache.mean = p.moving_mean;
                cache.variance = p.moving_variance;
            }
            cache.inv_std.resize(c);
            for (std::size_t ch = 0; ch < c; ++ch) {
                cache.inv_std[ch] = 1.0 / std::sqrt(cache.variance[ch] + kBatchNormEpsilon);
            }
            cache.normalized.resize(src.size());
            dst.resize(src.size());
            for (std::size_t i = 0; i < positions; ++i) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t k = i * c + ch;
                    const double xh = (src[k] - cache.mean[ch]) * cache.inv_std[ch];
                    cache.normalized[k] = xh;
                    dst[k] = p.gamma[ch] * xh + p.beta[ch];
                }
            }
            break;
        }
        case LayerKind::dropout: {
            dst = src;
            cache.dropout_mask.clear();
            if (mode == Mode::train && dropout_rng != nullptr && l.rate > 0.0) {
                const double keep_scale = 1.0 / (1.0 - l.rate);
                cache.dropout_mask.resize(src.size());
                for (std::size_t i = 0; i < src.size(); ++i) {
                    cache.dropout_mask[i] = dropout_rng->uniform() >= l.rate ? keep_scale : 0.0;
                    dst[i] *= cache.dropout_mask[i];
                }
            }
            break;
        }
        case LayerKind::flatten:
            out = {1, 1, static_cast<int>(cur.size())};
            dst = src;
            break;
        case LayerKind::dense: {
            out = {1, 1, l.filters};
            const std::size_t in_w = cur.size();
            const auto f = static_cast<std::size_t>(l.filters);
            dst.resize(n * f);
            for (std::size_t b = 0; b < n; ++b) std::copy(p.bias.begin(), p.bias.end(), dst.begin() + b * f);
            gemm_acc(n, f, in_w, src.data(), p.kernel.data(), dst.data());
            // Sigmoid is applied by the caller on the stored logit.
            if (l.activation == Activation::relu) {
                for (double& v : dst) v = std::max(v, 0.0);
            }
            break;
        }
        }
        require_finite(dst, li);
        produced_[li] = out;
        cur = out;
    }
    return acts_.back();
}

void Workspace::backward(const WeightBundle& weights, std::span<const double> dlogits, WeightBundle& grads) {
    const NetworkSpec& spec = *spec_;
    const std::size_t n = static_cast<std::size_t>(batch_);
    std::vector<double> dout(dlogits.begin(), dlogits.end());
    std::vector<double> din;

    for (std::size_t li = spec.layers().size(); li-- > 0;) {
        const LayerSpec& l = spec.layers()[li];
        const LayerParams& p = weights.layers[li];
        LayerParams& g = grads.layers[li];
        const Dims& in = spec.input_of(li);
        const Dims& out = produced_[li];
        const std::vector<double>& x = acts_[li];
        const std::vector<double>& y = acts_[li + 1];
        LayerCache& cache = caches_[li];
        const bool need_din = li > 0;

        switch (l.kind) {
        case LayerKind::conv2d: {
            if (l.activation == Activation::relu) {
                for (std::size_t i = 0; i < dout.size(); ++i) {
                    if (!(y[i] > 0.0)) dout[i] = 0.0;
                }
            }
            const std::size_t hw = static_cast<std::size_t>(in.height) * in.width;
            const std::size_t kdim = static_cast<std::size_t>(l.kernel) * l.kernel * in.channels;
            const auto f = static_cast<std::size_t>(l.filters);
            col_.resize(hw * kdim);
            if (need_din) {
                din.assign(n * in.size(), 0.0);
                dcol_.resize(hw * kdim);
            }
            for (std::size_t b = 0; b < n; ++b) {
                const double* dz = dout.data() + b * out.size();
                for (std::size_t pix = 0; pix < hw; ++pix) {
                    for (std::size_t j = 0; j < f; ++j) g.bias[j] += dz[pix * f + j];
                }
                im2col(x.data() + b * in.size(), in, l.kernel, col_.data());
                gemm_tn_acc(hw, f, kdim, col_.data(), dz, g.kernel.data());
                if (need_din) {
                    gemm_nt(hw, f, kdim, dz, p.kernel.data(), dcol_.data());
                    col2im_acc(dcol_.data(), in, l.kernel, din.data() + b * in.size());
                }
            }
            break;
        }
        case LayerKind::maxpool2: {
            din.assign(n * in.size(), 0.0);
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t o = 0; o < out.size(); ++o) {
                    const std::size_t k = b * out.size() + o;
                    din[b * in.size() + cache.argmax[k]] += dout[k];
                }
            }
            break;
        }
        case LayerKind::batchnorm: {
            const auto c = static_cast<std::size_t>(in.channels);
            const std::size_t positions = dout.size() / c;
            std::vector<double> sum_dy(c, 0.0);
            std::vector<double> sum_dy_xhat(c, 0.0);
            for (std::size_t i = 0; i < positions; ++i) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t k = i * c + ch;
                    sum_dy[ch] += dout[k];
                    sum_dy_xhat[ch] += dout[k] * cache.normalized[k];
                }
            }
            for (std::size_t ch = 0; ch < c; ++ch) {
                g.gamma[ch] += sum_dy_xhat[ch];
                g.beta[ch] += sum_dy[ch];
            }
            din.resize(dout.size());
            const auto m = static_cast<double>(positions);
            for (std::size_t i = 0; i < positions; ++i) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const std::size_t k = i * c + ch;
                    const double scale = p.gamma[ch] * cache.inv_std[ch];
                    if (mode_ == Mode::train) {
                        din[k] = scale / m * (m * dout[k] - sum_dy[ch] - cache.normalized[k] * sum_dy_xhat[ch]);
                    } else {
                        din[k] = scale * dout[k];
                    }
                }
            }
            break;
        }
        case LayerKind::dropout:
            din = dout;
            if (!cache.dropout_mask.empty()) {
                for (std::size_t i = 0; i < din.size(); ++i) din[i] *= cache.dropout_mask[i];
            }
            break;
        case LayerKind::flatten:
            din = dout;
            break;
        case LayerKind::dense: {
            if (l.activation == Activation::relu) {
                for (std::size_t i = 0; i < dout.size(); ++i) {
                    if (!(y[i] > 0.0)) dout[i] = 0.0;
                }
            }
            const std::size_t in_w = in.size();
            const auto f = static_cast<std::size_t>(l.filters);
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t j = 0; j < f; ++j) g.bias[j] += dout[b * f + j];
            }
            gemm_tn_acc(n, f, in_w, x.data(), dout.data(), g.kernel.data());
            if (need_din) {
                din.resize(n * in_w);
                gemm_nt(n, f, in_w, dout.data(), p.kernel.data(), din.data());
            }
            break;
        }
        }
        if (need_din) dout.swap(din);
    }
}

WeightBundle zero_gradients(const WeightBundle& weights) {
    WeightBundle g = weights;
    for (LayerParams& p : g.layers) {
        for (auto* block : {&p.kernel, &p.bias, &p.gamma, &p.beta, &p.moving_mean, &p.moving_variance}) {
            std::fill(block->begin(), block->end(), 0.0);
        }
    }
    return g;
}

double forward(const NetworkSpec& spec, const WeightBundle& weights, const Tensor& input, Mode mode,
               std::uint64_t dropout_seed) {
    check_weights(spec, weights);
    Workspace ws(spec);
    Rng rng(dropout_seed);
    const std::vector<double>& logits =
        ws.forward(weights, std::span<const Tensor>(&input, 1), mode, mode == Mode::train ? &rng : nullptr);
    return sigmoid(logits[0]);
}

std::vector<double> forward_batch(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Tensor> inputs) {
    check_weights(spec, weights);
    Workspace ws(spec);
    std::vector<double> scores = ws.forward(weights, inputs, Mode::infer);
    for (double& s : scores) s = sigmoid(s);
    return scores;
}

LossGradient loss_and_gradient(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Tensor> inputs,
                               std::span<const int> labels, Mode mode) {
    Workspace ws(spec);
    LossGradient out;
    out.logits = ws.forward(weights, inputs, mode);
    const auto n = static_cast<double>(inputs.size());
    std::vector<double> dlogits(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        out.loss += bce_from_logit(out.logits[i], labels[i]) / n;
        dlogits[i] = (sigmoid(out.logits[i]) - labels[i]) / n;
    }
    out.gradient = zero_gradients(weights);
    ws.backward(weights, dlogits, out.gradient);
    return out;
}

double mean_loss(const NetworkSpec& spec, const WeightBundle& weights, std::span<const Tensor> inputs,
                 std::span<const int> labels, Mode mode) {
    Workspace ws(spec);
    const std::vector<double>& logits = ws.forward(weights, inputs, mode);
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) loss += bce_from_logit(logits[i], labels[i]);
    return loss / static_cast<double>(inputs.size());
}

}  // namespace vcascade::nn

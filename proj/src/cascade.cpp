#include "vcascade/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "vcascade/error.hpp"
#include "vcascade/nn/engine.hpp"

namespace vcascade {

void InvocationStats::merge(const InvocationStats& other) {
    if (forwards.size() < other.forwards.size()) forwards.resize(other.forwards.size(), 0);
    for (std::size_t i = 0; i < other.forwards.size(); ++i) forwards[i] += other.forwards[i];
}

Cascade::Cascade(std::vector<CascadeStage> stages) : stages_(std::move(stages)) {
    if (stages_.empty()) throw std::invalid_argument("cascade needs at least one stage");
    const nn::Dims& first = stages_.front().spec.input_dims();
    if (first.height != first.width) throw ConfigMismatch("stage 1 model input is not square");
    int prev_channels = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < stages_.size(); ++i) {
        const CascadeStage& s = stages_[i];
        const std::string tag = "stage " + std::to_string(i + 1) + ": ";
        const nn::Dims& in = s.spec.input_dims();
        if (in.channels != output_channels(s.projection)) {
            throw ConfigMismatch(tag + "projection " + to_string(s.projection) + " yields " +
                                 std::to_string(output_channels(s.projection)) + " channel(s) but the model expects " +
                                 std::to_string(in.channels));
        }
        if (in.height != first.height || in.width != first.width) {
            throw ConfigMismatch(tag + "model input side differs from stage 1");
        }
        if (in.channels > prev_channels) {
            throw ConfigMismatch(tag + "channel count grows along the cascade (" + std::to_string(prev_channels) +
                                 " -> " + std::to_string(in.channels) + ")");
        }
        if (!(s.threshold > 0.0 && s.threshold < 1.0)) {
            throw std::invalid_argument(tag + "threshold must lie in (0, 1)");
        }
        nn::check_weights(s.spec, s.weights);
        prev_channels = in.channels;
    }
}

double Cascade::stage_score(std::size_t stage, const Frame& frame) const {
    const CascadeStage& s = stages_.at(stage);
    const int side = input_side();
    if (frame.width != side || frame.height != side) {
        throw InputError("frame " + std::to_string(frame.index) + " is " + std::to_string(frame.width) + "x" +
                         std::to_string(frame.height) + ", cascade expects " + std::to_string(side) + "x" +
                         std::to_string(side));
    }
    return nn::forward(s.spec, s.weights, to_tensor(project(frame, s.projection)));
}

Prediction Cascade::classify_image(const Frame& frame, InvocationStats* stats) const {
    if (stats != nullptr && stats->forwards.size() < stages_.size()) stats->forwards.resize(stages_.size(), 0);
    Prediction p;
    p.label = Label::positive;
    for (std::size_t i = 0; i < stages_.size(); ++i) {
        const double score = stage_score(i, frame);
        if (stats != nullptr) ++stats->forwards[i];
        p.stage_scores.push_back(score);
        p.score = score;
        p.stage_reached = static_cast<int>(i + 1);
        if (score < stages_[i].threshold) {
            p.label = Label::negative;
            break;
        }
    }
    return p;
}

std::vector<Prediction> Cascade::classify_images(std::span<const Frame> frames, InvocationStats* stats,
                                                 unsigned workers) const {
    std::vector<Prediction> out(frames.size());
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(frames.size(), 1))));
    std::vector<InvocationStats> local(workers);
    for (InvocationStats& s : local) s.forwards.assign(stages_.size(), 0);

    auto run = [&](unsigned w) {
        for (std::size_t i = w; i < frames.size(); i += workers) out[i] = classify_image(frames[i], &local[w]);
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(workers);
        for (unsigned w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    run(w);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : threads) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    if (stats != nullptr) {
        if (stats->forwards.size() < stages_.size()) stats->forwards.resize(stages_.size(), 0);
        for (const InvocationStats& s : local) stats->merge(s);
    }
    return out;
}

SequenceResult Cascade::classify_sequence(std::span<const Frame> frames, double fps,
                                          const SequenceOptions& options) const {
    if (frames.empty()) throw std::invalid_argument("classify_sequence needs at least one frame");
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
    const std::size_t n = frames.size();

    SequenceResult result;
    result.stats.forwards.assign(stages_.size(), 0);
    PredictionTrack fused;

    for (std::size_t s = 0; s < stages_.size(); ++s) {
        std::vector<bool> wanted(n, true);
        if (options.lazy && s > 0) {
            std::fill(wanted.begin(), wanted.end(), false);
            // Stage 2 looks around raw stage-1 positives; deeper stages around
            // the positives of the track fused so far.
            const PredictionTrack& anchor = s == 1 ? result.tracks[0] : fused;
            const long long reach = s == 1 ? lazy_verifier_distance(options.window, options.radius) : options.radius;
            for (std::size_t i = 0; i < n; ++i) {
                if (!is_positive(anchor.labels[i])) continue;
                const auto ii = static_cast<long long>(i);
                const long long lo = reach >= ii ? 0 : ii - reach;
                const auto last = static_cast<long long>(n) - 1;
                const long long hi = reach >= last - ii ? last : ii + reach;
                for (long long j = lo; j <= hi; ++j) wanted[static_cast<std::size_t>(j)] = true;
            }
        }

        PredictionTrack track;
        track.fps_effective = fps;
        track.labels.assign(n, Label::negative);
        track.scores.assign(n, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < n; ++i) {
            if (!wanted[i]) continue;
            const double score = stage_score(s, frames[i]);
            ++result.stats.forwards[s];
            track.scores[i] = score;
            track.labels[i] = label_of(score >= stages_[s].threshold);
        }
        result.tracks.push_back(std::move(track));

        if (s == 0) {
            fused = majority_vote(result.tracks[0], options.window);
        } else {
            fused = neighbor_validate(fused, result.tracks[s], options.radius);
        }
    }
    result.final_track = std::move(fused);
    return result;
}

PredictionTrack image_fusion(std::span<const PredictionTrack> tracks) {
    if (tracks.empty()) throw std::invalid_argument("image_fusion needs at least one track");
    PredictionTrack out = tracks.front();
    for (std::size_t s = 1; s < tracks.size(); ++s) {
        if (tracks[s].size() != out.size()) throw std::invalid_argument("image_fusion: track length mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.labels[i] = label_of(is_positive(out.labels[i]) && is_positive(tracks[s].labels[i]));
        }
    }
    return out;
}

}  // namespace vcascade

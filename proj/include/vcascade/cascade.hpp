#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vcascade/nn/network.hpp"
#include "vcascade/nn/weights.hpp"
#include "vcascade/preprocess.hpp"
#include "vcascade/temporal.hpp"

namespace vcascade {

inline constexpr double kDefaultThreshold = 0.9;

struct Prediction {
    double score = 0.0;  // score of the last stage that ran
    Label label = Label::negative;
    int stage_reached = 0;
    std::vector<double> stage_scores;
};

struct CascadeStage {
    ChannelProjection projection = ChannelProjection::identity_rgb;
    nn::NetworkSpec spec;
    nn::WeightBundle weights;
    double threshold = kDefaultThreshold;  // score >= threshold is positive
};

// Forward passes per stage.
struct InvocationStats {
    std::vector<std::uint64_t> forwards;

    void merge(const InvocationStats& other);
    bool operator==(const InvocationStats&) const = default;
};

struct SequenceOptions {
    int window = 3;
    long long radius = 1;
    // Evaluate the verifier only near primary positives (see
    // lazy_verifier_distance). The final track is unchanged.
    bool lazy = false;
};

struct SequenceResult {
    std::vector<PredictionTrack> tracks;  // one per stage, index-aligned with the frames
    PredictionTrack final_track;
    InvocationStats stats;
};

// A verification hierarchy: stage k + 1 only re-checks samples stage k
// called positive. Stages see non-increasing channel counts and share one
// input side.
class Cascade {
public:
    explicit Cascade(std::vector<CascadeStage> stages);

    const std::vector<CascadeStage>& stages() const { return stages_; }
    int input_side() const { return stages_.front().spec.input_dims().height; }

    // Runs stages in order and stops at the first negative.
    Prediction classify_image(const Frame& frame, InvocationStats* stats = nullptr) const;

    // Image mode over many frames, `workers` threads. Output order follows
    // the input order; counters are merged per worker.
    std::vector<Prediction> classify_images(std::span<const Frame> frames, InvocationStats* stats = nullptr,
                                            unsigned workers = 1) const;

    // Video mode: per-stage tracks plus the temporally fused decision.
    SequenceResult classify_sequence(std::span<const Frame> frames, double fps, const SequenceOptions& options = {}) const;

    double stage_score(std::size_t stage, const Frame& frame) const;

private:
    std::vector<CascadeStage> stages_;
};

// Image-mode fusion of aligned per-stage tracks: positive iff every stage is.
PredictionTrack image_fusion(std::span<const PredictionTrack> tracks);

}  // namespace vcascade

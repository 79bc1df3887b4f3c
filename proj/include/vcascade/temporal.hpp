#pragma once

#include <string>
#include <vector>

namespace vcascade {

enum class Label { negative, positive };

inline bool is_positive(Label l) { return l == Label::positive; }
inline Label label_of(bool positive) { return positive ? Label::positive : Label::negative; }

// Per-frame labels and scores for one model (or a fused result). A NaN
// score marks a frame the model was not run on.
struct PredictionTrack {
    std::vector<Label> labels;
    std::vector<double> scores;
    double fps_effective = 1.0;

    std::size_t size() const { return labels.size(); }
    void validate() const;  // throws std::invalid_argument
};

PredictionTrack make_track(const std::vector<Label>& labels, double fps = 1.0);

// Frame i is positive iff strictly more than half of the labels in the
// window centred at i are positive. Windows are truncated at the track
// ends and the majority is taken over the frames that exist, so a
// two-frame boundary window needs both frames and a one-frame window
// passes its label through. window must be odd and positive.
PredictionTrack majority_vote(const PredictionTrack& track, int window = 3);

// final[i] is positive iff c[i] is positive and any of l[i - radius ..
// i + radius] (clipped) is positive.
PredictionTrack neighbor_validate(const PredictionTrack& c, const PredictionTrack& l, long long radius = 1);

// neighbor_validate(majority_vote(c, window), l, radius).
PredictionTrack pipeline_video(const PredictionTrack& c, const PredictionTrack& l, int window = 3,
                               long long radius = 1);

// Smallest distance d such that pipeline_video only ever reads l at frames
// within d of a raw positive in c. Evaluating the verifier at those frames
// alone gives the same final track.
int lazy_verifier_distance(int window, long long radius);

struct Event {
    double start_s = 0.0;
    double end_s = 0.0;

    bool operator==(const Event&) const = default;
};

// Maximal runs of positive frames; run [a, b] becomes [a / fps, (b + 1) / fps].
std::vector<Event> track_to_events(const PredictionTrack& track);

// CSV rows frame_index,score_C,label_C,score_L,label_L,final_label with a
// header line. Unevaluated scores are written as empty fields.
std::string track_csv(const PredictionTrack& c, const PredictionTrack& l, const PredictionTrack& final_track);

}  // namespace vcascade

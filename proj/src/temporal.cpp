#include "vcascade/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace vcascade {

void PredictionTrack::validate() const {
    if (labels.size() != scores.size()) throw std::invalid_argument("track labels and scores differ in length");
    if (!(fps_effective > 0.0)) throw std::invalid_argument("track fps_effective must be positive");
}

PredictionTrack make_track(const std::vector<Label>& labels, double fps) {
    PredictionTrack t;
    t.labels = labels;
    t.scores.reserve(labels.size());
    for (Label l : labels) t.scores.push_back(is_positive(l) ? 1.0 : 0.0);
    t.fps_effective = fps;
    return t;
}

PredictionTrack majority_vote(const PredictionTrack& track, int window) {
    track.validate();
    if (track.labels.empty()) throw std::invalid_argument("majority_vote on an empty track");
    if (window <= 0 || window % 2 == 0) throw std::invalid_argument("majority window must be odd and positive");

    const auto n = static_cast<long long>(track.size());
    const long long half = window / 2;
    // prefix[i] = positives among labels[0, i)
    std::vector<long long> prefix(track.size() + 1, 0);
    for (std::size_t i = 0; i < track.size(); ++i) prefix[i + 1] = prefix[i] + (is_positive(track.labels[i]) ? 1 : 0);

    PredictionTrack out = track;
    for (long long i = 0; i < n; ++i) {
        const long long lo = std::max(0LL, i - half);
        const long long hi = std::min(n - 1, i + half);
        const long long available = hi - lo + 1;
        const long long votes = prefix[hi + 1] - prefix[lo];
        out.labels[i] = label_of(2 * votes > available);
    }
    return out;
}

PredictionTrack neighbor_validate(const PredictionTrack& c, const PredictionTrack& l, long long radius) {
    c.validate();
    l.validate();
    if (c.size() != l.size()) {
        throw std::invalid_argument("track length mismatch: " + std::to_string(c.size()) + " vs " +
                                    std::to_string(l.size()));
    }
    if (radius < 0) throw std::invalid_argument("radius must be non-negative");

    const auto n = static_cast<long long>(c.size());
    std::vector<long long> prefix(c.size() + 1, 0);
    for (std::size_t i = 0; i < l.size(); ++i) prefix[i + 1] = prefix[i] + (is_positive(l.labels[i]) ? 1 : 0);

    PredictionTrack out = c;
    for (long long i = 0; i < n; ++i) {
        if (!is_positive(c.labels[i])) continue;
        const long long lo = radius >= i ? 0 : i - radius;
        const long long hi = radius >= n - 1 - i ? n - 1 : i + radius;
        out.labels[i] = label_of(prefix[hi + 1] - prefix[lo] > 0);
    }
    return out;
}

PredictionTrack pipeline_video(const PredictionTrack& c, const PredictionTrack& l, int window, long long radius) {
    return neighbor_validate(majority_vote(c, window), l, radius);
}

int lazy_verifier_distance(int window, long long radius) {
    if (window <= 0 || window % 2 == 0) throw std::invalid_argument("majority window must be odd and positive");
    if (radius < 0) throw std::invalid_argument("radius must be non-negative");
    const long long capped = std::min<long long>(radius, std::numeric_limits<int>::max());
    // A smoothed positive whose own raw label is negative has raw positives
    // on both sides, so every frame it reads is within max(radius, 1).
    return static_cast<int>(window == 1 ? capped : std::max<long long>(capped, 1));
}

std::vector<Event> track_to_events(const PredictionTrack& track) {
    track.validate();
    std::vector<Event> events;
    const std::size_t n = track.size();
    std::size_t i = 0;
    while (i < n) {
        if (!is_positive(track.labels[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && is_positive(track.labels[j + 1])) ++j;
        events.push_back({static_cast<double>(i) / track.fps_effective,
                          static_cast<double>(j + 1) / track.fps_effective});
        i = j + 1;
    }
    return events;
}

std::string track_csv(const PredictionTrack& c, const PredictionTrack& l, const PredictionTrack& final_track) {
    if (c.size() != l.size() || c.size() != final_track.size()) {
        throw std::invalid_argument("track_csv needs equal-length tracks");
    }
    auto score = [](double s) -> std::string {
        if (std::isnan(s)) return "";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", s);
        return buf;
    };
    std::string out = "frame_index,score_C,label_C,score_L,label_L,final_label\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        out += std::to_string(i) + "," + score(c.scores[i]) + "," + (is_positive(c.labels[i]) ? "1" : "0") + "," +
               score(l.scores[i]) + "," + (is_positive(l.labels[i]) ? "1" : "0") + "," +
               (is_positive(final_track.labels[i]) ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace vcascade

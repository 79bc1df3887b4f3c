#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcascade/temporal.hpp"

namespace vcascade {

inline constexpr double kDefaultToleranceSeconds = 1.0;

struct GroundTruthInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string label = "explosion";

    bool operator==(const GroundTruthInterval&) const = default;
};

// Gap between two closed intervals; zero when they overlap.
double interval_distance(double a_start, double a_end, double b_start, double b_end);

struct EventMatch {
    Event event;
    std::optional<std::size_t> interval;  // index into the truth list
    bool duplicate = false;               // interval was already claimed by an earlier event
};

struct MatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<EventMatch> matches;  // events in time order
};

// Scene-level matching. An interval is a true positive when at least one
// event lies within `tolerance_s` of it; an event with no interval in
// reach is a false positive; unreached intervals are false negatives.
// Extra events on an already-hit interval count as neither. The match list
// assigns each event, in time order, to the earliest unclaimed interval in
// reach, falling back to the earliest claimed one (marked duplicate).
MatchResult match_events(std::span<const Event> events, std::span<const GroundTruthInterval> truth,
                         double tolerance_s = kDefaultToleranceSeconds);

struct VideoMetrics {
    std::string name;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 1.0;  // 0/0 is 1
    double recall = 1.0;     // 0/0 is 1
    double f1 = 1.0;         // 0 when precision + recall is 0
    bool degenerate = false;  // no events and no truth intervals
    std::vector<EventMatch> matches;
};

VideoMetrics metrics_from_counts(int tp, int fp, int fn);

struct VideoInput {
    std::string name;
    std::vector<Event> events;
    std::vector<GroundTruthInterval> truth;
};

struct EvalReport {
    double tolerance_s = kDefaultToleranceSeconds;
    std::vector<VideoMetrics> videos;
    double median_precision = 0.0;
    double median_recall = 0.0;
    double median_f1 = 0.0;
};

// Even-length input averages the two middle values. Throws on empty input.
double median(std::vector<double> values);

EvalReport evaluate_corpus(std::span<const VideoInput> videos, double tolerance_s = kDefaultToleranceSeconds);

nlohmann::json to_json(const EvalReport& report);

// CSV with header `start_s,end_s,label`. Throws InputError naming the line.
std::vector<GroundTruthInterval> parse_truth_csv(std::istream& in);
std::string truth_csv(std::span<const GroundTruthInterval> truth);

}  // namespace vcascade

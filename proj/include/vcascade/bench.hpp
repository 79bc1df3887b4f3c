#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcascade/cascade.hpp"

namespace vcascade::bench {

// Published parameter count of torchvision's ResNet-50, used as a fixed
// external reference. Not computed here.
inline constexpr std::uint64_t kResNet50Params = 25'557'032;

struct ParamReport {
    std::vector<std::uint64_t> per_model;
    std::uint64_t reference = kResNet50Params;
    double ratio = 0.0;  // reference / sum(per_model)
};

ParamReport bench_params(std::span<const nn::NetworkSpec> specs);

struct LatencyOptions {
    int warmup = 3;
    int repetitions = 30;

    void validate() const;  // warmup >= 3, repetitions >= 30
};

// Milliseconds. p95 is the nearest-rank percentile.
struct LatencyStats {
    double median_ms = 0.0;
    double mean_ms = 0.0;
    double p95_ms = 0.0;
    double min_ms = 0.0;
    int repetitions = 0;
};

LatencyStats summarize(std::vector<double> samples_ms);

// Runs `body` warmup times untimed, then `repetitions` times timed.
LatencyStats time_repeated(const std::function<void()>& body, const LatencyOptions& options);

// Times several bodies round-robin within each repetition, so slow periods
// on a shared machine hit every measurement alike.
std::vector<LatencyStats> time_interleaved(const std::vector<std::function<void()>>& bodies,
                                           const LatencyOptions& options);

struct BenchReport {
    ParamReport params;
    std::size_t frames = 0;
    LatencyOptions options;
    // All latencies are per frame: one timed repetition processes the whole
    // stream and is divided by its length.
    std::vector<LatencyStats> stage;  // stage k alone on every frame
    LatencyStats cascade;             // short-circuiting image mode
    LatencyStats every_stage;         // all stages on every frame
    InvocationStats invocations;      // from one cascade pass
    std::vector<double> reach_rate;   // fraction of frames reaching each stage
    double positive_rate = 0.0;       // stage-1 positives / frames
    double predicted_ms = 0.0;        // sum_k stage[k].median * reach_rate[k]
    double speedup_vs_every_stage = 0.0;
    std::string machine;
    bool parallel = false;
};

// Throws std::invalid_argument for streams shorter than 100 frames.
BenchReport bench_latency(const Cascade& cascade, std::span<const Frame> stream, const LatencyOptions& options = {});

std::string machine_description();

// Latency figures go under "latency" so deterministic fields can be
// compared separately.
nlohmann::json to_json(const BenchReport& report);
nlohmann::json to_json(const ParamReport& report);

}  // namespace vcascade::bench

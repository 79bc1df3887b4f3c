#include "vcascade/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace vcascade::bench {

namespace {

constexpr std::size_t kMinStreamFrames = 100;

nlohmann::json latency_json(const LatencyStats& s) {
    return {{"median_ms", s.median_ms}, {"mean_ms", s.mean_ms}, {"p95_ms", s.p95_ms},
            {"min_ms", s.min_ms}, {"repetitions", s.repetitions}};
}

}  // namespace

ParamReport bench_params(std::span<const nn::NetworkSpec> specs) {
    ParamReport r;
    std::uint64_t sum = 0;
    for (const nn::NetworkSpec& s : specs) {
        r.per_model.push_back(nn::count_params(s).total);
        sum += r.per_model.back();
    }
    r.ratio = sum == 0 ? 0.0 : static_cast<double>(r.reference) / static_cast<double>(sum);
    return r;
}

void LatencyOptions::validate() const {
    if (warmup < 3) throw std::invalid_argument("latency benchmark needs at least 3 warm-up runs");
    if (repetitions < 30) throw std::invalid_argument("latency benchmark needs at least 30 timed repetitions");
}

LatencyStats summarize(std::vector<double> samples_ms) {
    if (samples_ms.empty()) throw std::invalid_argument("summarize: no samples");
    std::sort(samples_ms.begin(), samples_ms.end());
    const std::size_t n = samples_ms.size();
    LatencyStats s;
    s.repetitions = static_cast<int>(n);
    s.median_ms = n % 2 == 1 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
    s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(n);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
    s.min_ms = samples_ms.front();
    return s;
}

LatencyStats time_repeated(const std::function<void()>& body, const LatencyOptions& options) {
    return time_interleaved({body}, options).front();
}

std::vector<LatencyStats> time_interleaved(const std::vector<std::function<void()>>& bodies,
                                           const LatencyOptions& options) {
    options.validate();
    for (int i = 0; i < options.warmup; ++i) {
        for (const auto& body : bodies) body();
    }
    std::vector<std::vector<double>> ms(bodies.size());
    for (auto& m : ms) m.reserve(static_cast<std::size_t>(options.repetitions));
    for (int i = 0; i < options.repetitions; ++i) {
        for (std::size_t b = 0; b < bodies.size(); ++b) {
            const auto t0 = std::chrono::steady_clock::now();
            bodies[b]();
            ms[b].push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        }
    }
    std::vector<LatencyStats> out;
    for (auto& m : ms) out.push_back(summarize(std::move(m)));
    return out;
}

BenchReport bench_latency(const Cascade& cascade, std::span<const Frame> stream, const LatencyOptions& options) {
    if (stream.size() < kMinStreamFrames) {
        throw std::invalid_argument("latency benchmark needs a stream of at least 100 frames, got " +
                                    std::to_string(stream.size()));
    }
    options.validate();

    BenchReport r;
    std::vector<nn::NetworkSpec> specs;
    for (const CascadeStage& s : cascade.stages()) specs.push_back(s.spec);
    r.params = bench_params(specs);
    r.frames = stream.size();
    r.options = options;
    r.machine = machine_description();

    const double per_frame = 1.0 / static_cast<double>(stream.size());
    auto scaled = [per_frame](LatencyStats s) {
        s.median_ms *= per_frame;
        s.mean_ms *= per_frame;
        s.p95_ms *= per_frame;
        s.min_ms *= per_frame;
        return s;
    };

    volatile double sink = 0.0;
    const std::size_t stages = cascade.stages().size();
    std::vector<std::function<void()>> bodies;
    for (std::size_t k = 0; k < stages; ++k) {
        bodies.emplace_back([&, k] {
            for (const Frame& f : stream) sink = sink + cascade.stage_score(k, f);
        });
    }
    bodies.emplace_back([&] {
        for (const Frame& f : stream) sink = sink + cascade.classify_image(f).score;
    });
    bodies.emplace_back([&] {
        for (const Frame& f : stream) {
            for (std::size_t k = 0; k < stages; ++k) sink = sink + cascade.stage_score(k, f);
        }
    });
    const std::vector<LatencyStats> timed = time_interleaved(bodies, options);
    for (std::size_t k = 0; k < stages; ++k) r.stage.push_back(scaled(timed[k]));
    r.cascade = scaled(timed[stages]);
    r.every_stage = scaled(timed[stages + 1]);

    const std::vector<Prediction> preds = cascade.classify_images(stream, &r.invocations, 1);
    (void)preds;
    for (std::size_t k = 0; k < r.invocations.forwards.size(); ++k) {
        r.reach_rate.push_back(static_cast<double>(r.invocations.forwards[k]) * per_frame);
        r.predicted_ms += r.stage[k].median_ms * r.reach_rate.back();
    }
    r.positive_rate = r.reach_rate.size() > 1 ? r.reach_rate[1] : 0.0;
    if (r.reach_rate.size() == 1) {
        std::size_t positives = 0;
        for (const Prediction& p : preds) positives += is_positive(p.label) ? 1 : 0;
        r.positive_rate = static_cast<double>(positives) * per_frame;
    }
    r.speedup_vs_every_stage = r.cascade.median_ms > 0.0 ? r.every_stage.median_ms / r.cascade.median_ms : 0.0;
    return r;
}

std::string machine_description() {
    std::string cpu = "unknown cpu";
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
            break;
        }
    }
    return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

nlohmann::json to_json(const ParamReport& report) {
    return {{"per_model", report.per_model}, {"reference_resnet50", report.reference}, {"ratio", std::round(report.ratio * 100.0) / 100.0}};
}

nlohmann::json to_json(const BenchReport& r) {
    nlohmann::json stages = nlohmann::json::array();
    for (const LatencyStats& s : r.stage) stages.push_back(latency_json(s));
    return {
        {"banner", "single-threaded CPU timing on synthetic frames; reports cascade vs every-stage cost only, no Faster R-CNN/ResNet-50 baseline is run"},
        {"params", to_json(r.params)},
        {"frames", r.frames},
        {"warmup", r.options.warmup},
        {"repetitions", r.options.repetitions},
        {"invocations", r.invocations.forwards},
        {"reach_rate", r.reach_rate},
        {"positive_rate", r.positive_rate},
        {"parallel", r.parallel},
        {"latency",
         {{"unit", "ms per frame"},
          {"machine", r.machine},
          {"stage", stages},
          {"cascade", latency_json(r.cascade)},
          {"every_stage", latency_json(r.every_stage)},
          {"predicted_cascade_ms", r.predicted_ms},
          {"speedup_vs_every_stage", r.speedup_vs_every_stage}}},
    };
}

}  // namespace vcascade::bench

#include <doctest.h>

#include <cmath>

#include "vcascade/bench.hpp"
#include "vcascade/rng.hpp"

using namespace vcascade;
using namespace vcascade::bench;

namespace {

constexpr int kSide = 24;

// A small conv net whose output is pinned to `bias` so the positive rate is
// under test control while every forward still does the full work.
CascadeStage pinned_stage(ChannelProjection proj, double bias) {
    nn::NetworkSpec spec({kSide, kSide, output_channels(proj)},
                         {nn::LayerSpec::conv(16, 3), nn::LayerSpec::maxpool(), nn::LayerSpec::conv(16, 3),
                          nn::LayerSpec::flatten(), nn::LayerSpec::dense(1, nn::Activation::sigmoid)});
    nn::WeightBundle w = nn::init_weights(spec, 3);
    auto& dense = w.layers.back();
    std::fill(dense.kernel.begin(), dense.kernel.end(), 0.0);
    dense.bias[0] = bias;
    return {proj, spec, w, kDefaultThreshold};
}

Cascade pinned_cascade(bool c_fires) {
    return Cascade({pinned_stage(ChannelProjection::identity_rgb, c_fires ? 10.0 : -10.0),
                    pinned_stage(ChannelProjection::grayscale, 10.0)});
}

std::vector<Frame> stream(std::size_t n) {
    Rng rng(51);
    std::vector<Frame> out;
    for (std::size_t i = 0; i < n; ++i) {
        Frame f(kSide, kSide, 3, i);
        for (auto& p : f.pixels) p = static_cast<std::uint8_t>(rng.below(256));
        out.push_back(f);
    }
    return out;
}

}  // namespace

TEST_CASE("parameter report") {
    const nn::NetworkSpec c = nn::build_paper_model(3, 300);
    const nn::NetworkSpec l = nn::build_paper_model(1, 300);
    const std::vector<nn::NetworkSpec> both{c, l};
    const ParamReport r = bench_params(both);
    REQUIRE(r.per_model.size() == 2);
    CHECK(r.per_model[0] == nn::count_params(c).total);
    CHECK(r.per_model[0] == 1'211'649);
    CHECK(r.per_model[0] - r.per_model[1] == 1600);
    CHECK(r.reference == 25'557'032);
    CHECK(r.ratio == doctest::Approx(25'557'032.0 / (r.per_model[0] + r.per_model[1])));
    const double shown = to_json(r)["ratio"].get<double>();
    CHECK(shown == std::round(r.ratio * 100.0) / 100.0);
}

TEST_CASE("summary statistics") {
    const LatencyStats s = summarize({5.0, 1.0, 3.0, 2.0, 4.0});
    CHECK(s.median_ms == 3.0);
    CHECK(s.mean_ms == 3.0);
    CHECK(s.min_ms == 1.0);
    CHECK(s.p95_ms == 5.0);
    CHECK(s.repetitions == 5);
    CHECK(summarize({1.0, 2.0, 3.0, 4.0}).median_ms == 2.5);
    std::vector<double> hundred;
    for (int i = 1; i <= 100; ++i) hundred.push_back(i);
    CHECK(summarize(hundred).p95_ms == 95.0);
    CHECK_THROWS(summarize({}));

    CHECK_THROWS_AS((LatencyOptions{2, 30}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((LatencyOptions{3, 29}.validate()), std::invalid_argument);
    int calls = 0;
    const LatencyStats t = time_repeated([&] { ++calls; }, {3, 30});
    CHECK(calls == 33);
    CHECK(t.repetitions == 30);
}

TEST_CASE("short streams are rejected") {
    const auto frames = stream(99);
    CHECK_THROWS_AS(bench_latency(pinned_cascade(false), frames), std::invalid_argument);
}

TEST_CASE("cascade cost tracks the stage-1 positive rate") {
    const auto frames = stream(100);

    const BenchReport none = bench_latency(pinned_cascade(false), frames);
    CHECK(none.invocations.forwards == std::vector<std::uint64_t>{100, 0});
    CHECK(none.positive_rate == 0.0);
    CHECK(none.reach_rate == std::vector<double>{1.0, 0.0});
    const double rel0 = std::abs(none.cascade.median_ms - none.stage[0].median_ms) / none.stage[0].median_ms;
    MESSAGE("rate 0: cascade ", none.cascade.median_ms, " ms/frame, stage 1 ", none.stage[0].median_ms);
    CHECK(rel0 < 0.2);

    const BenchReport all = bench_latency(pinned_cascade(true), frames);
    CHECK(all.invocations.forwards == std::vector<std::uint64_t>{100, 100});
    CHECK(all.positive_rate == 1.0);
    const double both = all.stage[0].median_ms + all.stage[1].median_ms;
    MESSAGE("rate 1: cascade ", all.cascade.median_ms, " ms/frame, stage sum ", both);
    CHECK(std::abs(all.cascade.median_ms - both) / both < 0.2);
    CHECK(all.cascade.median_ms > none.cascade.median_ms);

    const nlohmann::json j = to_json(none);
    CHECK(j.contains("latency"));
    CHECK(j["params"]["per_model"].size() == 2);
    CHECK(j["parallel"] == false);
    CHECK_FALSE(j["latency"]["machine"].get<std::string>().empty());
}

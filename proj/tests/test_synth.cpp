#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "vcascade/error.hpp"
#include "vcascade/io/manifest.hpp"
#include "vcascade/io/ppm.hpp"
#include "vcascade/synth.hpp"

using namespace vcascade;
using namespace vcascade::synth;

namespace {

double saturation(const Frame& f, int x, int y) {
    const int r = f.at(x, y, 0);
    const int g = f.at(x, y, 1);
    const int b = f.at(x, y, 2);
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    return mx == 0 ? 0.0 : static_cast<double>(mx - mn) / mx;
}

// Hue in degrees, or -1 for achromatic pixels.
double hue(const Frame& f, int x, int y) {
    const double r = f.at(x, y, 0);
    const double g = f.at(x, y, 1);
    const double b = f.at(x, y, 2);
    const double mx = std::max({r, g, b});
    const double d = mx - std::min({r, g, b});
    if (d < 1.0) return -1.0;
    double h = 0.0;
    if (mx == r) {
        h = std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
        h = (b - r) / d + 2.0;
    } else {
        h = (r - g) / d + 4.0;
    }
    h *= 60.0;
    return h < 0.0 ? h + 360.0 : h;
}

// 12 hue bins plus one achromatic bin over pixels with mask above 0.5.
std::array<double, 13> hue_histogram(const SceneRender& r) {
    std::array<double, 13> h{};
    double n = 0.0;
    for (int y = 0; y < r.frame.height; ++y) {
        for (int x = 0; x < r.frame.width; ++x) {
            if (r.blob_mask[static_cast<std::size_t>(y * r.frame.width + x)] <= 0.5f) continue;
            const double hv = hue(r.frame, x, y);
            h[hv < 0.0 ? 12 : static_cast<std::size_t>(hv / 30.0) % 12] += 1.0;
            n += 1.0;
        }
    }
    for (double& v : h) v /= std::max(n, 1.0);
    return h;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> gray_values(const Frame& f) {
    const Frame g = project(f, ChannelProjection::grayscale);
    return {g.pixels.begin(), g.pixels.end()};
}

SceneRecipe recipe(SceneClass c, std::uint64_t seed) {
    SceneRecipe r;
    r.scene = c;
    r.seed = seed;
    return r;
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("vcascade_test_synth_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("identical recipes give identical bytes") {
    for (SceneClass c : kAllClasses) {
        for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
            CHECK(gen_image(recipe(c, seed)) == gen_image(recipe(c, seed)));
        }
        CHECK(gen_image(recipe(c, 1)) != gen_image(recipe(c, 2)));
    }
    SceneRecipe flat = recipe(SceneClass::explosion, 3);
    flat.background = BackgroundKind::flat;
    flat.size = 300;
    const Frame big = gen_image(flat);
    CHECK(big.width == 300);
    CHECK(big == gen_image(flat));
}

TEST_CASE("class names round-trip") {
    for (SceneClass c : kAllClasses) CHECK(parse_scene_class(to_string(c)) == c);
    CHECK(parse_scene_class("plain") == SceneClass::plain_negative);
    CHECK(parse_scene_class("light") == SceneClass::light_source_confuser);
    CHECK(parse_scene_class("structure") == SceneClass::structure_confuser);
    CHECK_THROWS(parse_scene_class("smoke"));
    CHECK(label_of(SceneClass::explosion) == 1);
    CHECK(label_of(SceneClass::light_source_confuser) == 0);
}

TEST_CASE("degenerate sizes are rejected") {
    SceneRecipe r = recipe(SceneClass::explosion, 1);
    r.size = 15;
    CHECK_THROWS_AS(gen_image(r), std::invalid_argument);
    r.size = 16;
    CHECK(gen_image(r).width == 16);
}

TEST_CASE("explosion blobs are more saturated than their background") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SceneRender r = render_scene(recipe(SceneClass::explosion, seed));
        double blob = 0.0;
        double bg = 0.0;
        int nb = 0;
        int ng = 0;
        for (int y = 0; y < r.frame.height; ++y) {
            for (int x = 0; x < r.frame.width; ++x) {
                const float m = r.blob_mask[static_cast<std::size_t>(y * r.frame.width + x)];
                if (m > 0.5f) {
                    blob += saturation(r.frame, x, y);
                    ++nb;
                } else if (m == 0.0f) {
                    bg += saturation(r.frame, x, y);
                    ++ng;
                }
            }
        }
        REQUIRE(nb > 0);
        REQUIRE(ng > 0);
        CHECK(blob / nb > bg / ng + 0.2);
    }
}

TEST_CASE("structure confusers match explosions in gray but not in hue") {
    double worst_corr = 1.0;
    double least_tv = 1.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SceneRender e = render_scene(recipe(SceneClass::explosion, seed));
        const SceneRender s = render_scene(recipe(SceneClass::structure_confuser, seed));
        CHECK(e.blob_mask == s.blob_mask);
        worst_corr = std::min(worst_corr, pearson(gray_values(e.frame), gray_values(s.frame)));
        const auto he = hue_histogram(e);
        const auto hs = hue_histogram(s);
        double tv = 0.0;
        for (std::size_t i = 0; i < he.size(); ++i) tv += std::abs(he[i] - hs[i]);
        least_tv = std::min(least_tv, 0.5 * tv);
    }
    MESSAGE("worst gray correlation ", worst_corr, ", smallest hue distance ", least_tv);
    CHECK(worst_corr > 0.95);
    CHECK(least_tv > 0.5);
}

TEST_CASE("dataset split arithmetic, determinism and disjointness") {
    const SplitDataset d = gen_dataset(100, 0.2, 7, 32);
    CHECK(d.train.size() == 320);
    CHECK(d.val.size() == 80);
    for (SceneClass c : kAllClasses) {
        CHECK(std::count_if(d.train.begin(), d.train.end(), [c](const LabeledFrame& f) { return f.scene == c; }) == 80);
        CHECK(std::count_if(d.val.begin(), d.val.end(), [c](const LabeledFrame& f) { return f.scene == c; }) == 20);
    }
    for (const auto* split : {&d.train, &d.val}) {
        for (const LabeledFrame& f : *split) CHECK(f.label == label_of(f.scene));
    }
    std::set<std::uint64_t> train_seeds;
    for (const LabeledFrame& f : d.train) train_seeds.insert(f.seed);
    CHECK(train_seeds.size() == d.train.size());
    for (const LabeledFrame& f : d.val) CHECK(train_seeds.count(f.seed) == 0);

    const SplitDataset again = gen_dataset(100, 0.2, 7, 32);
    REQUIRE(again.train.size() == d.train.size());
    for (std::size_t i = 0; i < d.train.size(); ++i) CHECK(again.train[i].frame == d.train[i].frame);
    CHECK(gen_dataset(10, 0.2, 8, 32).train.front().frame != d.train.front().frame);

    const SceneClass two[] = {SceneClass::explosion, SceneClass::plain_negative};
    const SplitDataset sub = gen_dataset(10, 0.3, 7, 32, two);
    CHECK(sub.train.size() == 14);
    CHECK(sub.val.size() == 6);

    CHECK_THROWS(gen_dataset(9, 0.2, 7, 32));
    CHECK_THROWS(gen_dataset(10, 1.0, 7, 32));

    const auto samples = make_samples(d.val, ChannelProjection::grayscale);
    REQUIRE(samples.size() == d.val.size());
    CHECK(samples[0].input.dims == nn::Dims{32, 32, 1});
    CHECK(samples[0].label == d.val[0].label);
}

TEST_CASE("timeline arithmetic") {
    const auto tl = parse_timeline("plain:2,explosion:1,plain:2");
    REQUIRE(tl.size() == 3);
    const Sequence s = gen_sequence(tl, 10.0, 5, 32);
    CHECK(s.frames.size() == 50);
    REQUIRE(s.truth.size() == 1);
    CHECK(s.truth[0].start_s == 2.0);
    CHECK(s.truth[0].end_s == 3.0);
    CHECK(s.fps == 10.0);
    for (std::size_t i = 0; i < s.frames.size(); ++i) CHECK(s.frames[i].index == i);

    CHECK(gen_sequence(parse_timeline("plain:3"), 10.0, 5, 32).truth.empty());
    CHECK(gen_sequence(parse_timeline("light:1,structure:1"), 5.0, 5, 32).truth.empty());

    const Sequence again = gen_sequence(tl, 10.0, 5, 32);
    for (std::size_t i = 0; i < s.frames.size(); ++i) CHECK(again.frames[i] == s.frames[i]);

    const Sequence merged = gen_sequence(parse_timeline("explosion:1,explosion:0.5,plain:1,explosion:2"), 4.0, 1, 32);
    REQUIRE(merged.truth.size() == 2);
    CHECK(merged.truth[0].end_s == 1.5);
    CHECK(merged.truth[1].start_s == 2.5);
    for (std::size_t i = 1; i < merged.truth.size(); ++i) CHECK(merged.truth[i - 1].end_s < merged.truth[i].start_s);

    CHECK_THROWS_AS(parse_timeline(""), InputError);
    CHECK_THROWS_AS(parse_timeline("plain"), InputError);
    CHECK_THROWS_AS(parse_timeline("plain:-1"), InputError);
    CHECK_THROWS_AS(parse_timeline("fog:1"), InputError);
    CHECK_THROWS_AS(gen_sequence(std::vector<TimelineSegment>{}, 10.0, 1, 32), InputError);
}

TEST_CASE("emitted files read back") {
    const auto dir = temp_dir("emit");
    const SplitDataset d = gen_dataset(10, 0.2, 3, 16);
    emit_dataset(dir.string(), d);
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "pos")) pos += e.path().extension() == ".ppm";
    for (const auto& e : std::filesystem::directory_iterator(dir / "neg")) neg += e.path().extension() == ".ppm";
    CHECK(pos == 10);
    CHECK(neg == 30);

    const Sequence s = gen_sequence(parse_timeline("plain:1,explosion:1"), 5.0, 2, 16);
    emit_sequence((dir / "seq").string(), s);
    const io::FrameManifest m = io::read_frame_manifest((dir / "seq" / "frames.txt").string());
    CHECK(m.paths.size() == 10);
    CHECK(m.fps_effective() == 5.0);
    CHECK(io::read_pnm(m.paths[3]).pixels == s.frames[3].pixels);
    std::ifstream truth(dir / "seq" / "truth.csv");
    CHECK(parse_truth_csv(truth) == s.truth);
    std::filesystem::remove_all(dir);
}

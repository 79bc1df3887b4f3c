#include "vcascade/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vcascade/error.hpp"
#include "vcascade/io/manifest.hpp"
#include "vcascade/io/ppm.hpp"
#include "vcascade/rng.hpp"

namespace vcascade::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kHarmonics = 4;  // lobes k = 2..5

// Zero-luma tint directions: 0.299 r + 0.587 g + 0.114 b == 0.
constexpr std::array<double, 3> kOliveTint = {-0.3, 0.25, (0.3 * 0.299 - 0.25 * 0.587) / 0.114};
constexpr std::array<double, 3> kBlueTint = {-0.3, -0.05, (0.3 * 0.299 + 0.05 * 0.587) / 0.114};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double smoothstep(double e0, double e1, double x) {
    const double t = clamp01((x - e0) / (e1 - e0));
    return t * t * (3.0 - 2.0 * t);
}

double lattice(std::uint64_t seed, long long ix, long long iy) {
    const std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL) ^
                                       (static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, double x, double y) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<long long>(fx);
    const auto iy = static_cast<long long>(fy);
    const double tx = smoothstep(0.0, 1.0, x - fx);
    const double ty = smoothstep(0.0, 1.0, y - fy);
    const double a = lattice(seed, ix, iy);
    const double b = lattice(seed, ix + 1, iy);
    const double c = lattice(seed, ix, iy + 1);
    const double d = lattice(seed, ix + 1, iy + 1);
    return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
}

// Three octaves, normalised to [0, 1].
double fbm(std::uint64_t seed, double x, double y) {
    double sum = 0.0;
    double amp = 1.0;
    double norm = 0.0;
    for (int o = 0; o < 3; ++o) {
        sum += amp * value_noise(seed + static_cast<std::uint64_t>(o), x, y);
        norm += amp;
        amp *= 0.5;
        x *= 2.0;
        y *= 2.0;
    }
    return sum / norm;
}

// t in [0, 1]: deep red at the rim through orange to pale yellow.
std::array<double, 3> fire(double t) {
    return {std::min(1.0, 0.6 + 0.8 * t), 0.95 * clamp01(1.1 * t - 0.05), 0.8 * clamp01(1.6 * t - 0.9)};
}

double luma(const std::array<double, 3>& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

// Grey at luma y pushed along a zero-luma direction, shrunk so no channel
// clips and the luma stays exact.
std::array<double, 3> tinted_grey(double y, const std::array<double, 3>& dir, double k) {
    for (double d : dir) {
        if (d > 0.0 && y > 0.0) k = std::min(k, (1.0 - y) / (y * d));
        if (d < 0.0 && y > 0.0) k = std::min(k, 1.0 / -d);
    }
    k = std::max(k, 0.0);
    return {y * (1.0 + k * dir[0]), y * (1.0 + k * dir[1]), y * (1.0 + k * dir[2])};
}

struct Blob {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    std::array<double, kHarmonics> lobe_amp{};
    std::array<double, kHarmonics> lobe_phase{};
    std::uint64_t texture_seed = 0;
    double texture_amp = 0.0;
    double texture_dx = 0.0;
    double texture_dy = 0.0;
    double brightness = 1.0;
    double tint = 0.0;  // strength along the class's tint direction
};

struct Background {
    BackgroundKind kind = BackgroundKind::value_noise;
    std::uint64_t seed = 0;
    std::array<double, 3> base{};
    double amp = 0.0;
    double dx = 0.0;
    double dy = 0.0;
};

struct SceneState {
    SceneClass scene = SceneClass::plain_negative;
    Background background;
    std::vector<Blob> blobs;
    bool glow = false;  // plain_negative only
};

Background make_background(std::uint64_t seed, BackgroundKind kind) {
    Rng rng(seed);
    Background bg;
    bg.kind = kind;
    bg.seed = rng.next();
    const double v = rng.uniform(0.08, 0.30);
    for (double& c : bg.base) c = v * (1.0 + rng.uniform(-0.15, 0.15));
    bg.amp = rng.uniform(0.2, 0.6);
    bg.dx = rng.uniform(0.0, 1000.0);
    bg.dy = rng.uniform(0.0, 1000.0);
    return bg;
}

Blob make_blob(Rng& rng, int size, double rmin, double rmax) {
    Blob b;
    b.cx = size * rng.uniform(0.3, 0.7);
    b.cy = size * rng.uniform(0.3, 0.7);
    b.radius = size * rng.uniform(rmin, rmax);
    for (int k = 0; k < kHarmonics; ++k) {
        b.lobe_amp[static_cast<std::size_t>(k)] = rng.uniform(0.06, 0.16);
        b.lobe_phase[static_cast<std::size_t>(k)] = rng.uniform(0.0, kTwoPi);
    }
    b.texture_seed = rng.next();
    b.texture_amp = rng.uniform(0.2, 0.45);
    b.texture_dx = rng.uniform(0.0, 1000.0);
    b.texture_dy = rng.uniform(0.0, 1000.0);
    b.brightness = rng.uniform(0.85, 1.0);
    b.tint = rng.uniform(0.1, 0.35);
    return b;
}

void check_recipe(const SceneRecipe& r) {
    if (r.size < 16) throw std::invalid_argument("scene size must be at least 16 px, got " + std::to_string(r.size));
    if (r.blob_count < 1) throw std::invalid_argument("blob_count must be >= 1");
    if (!(r.radius_min > 0.0) || !(r.radius_max >= r.radius_min) || r.radius_max > 0.5) {
        throw std::invalid_argument("radius range must satisfy 0 < min <= max <= 0.5");
    }
}

// Geometry, texture and background depend only on the seed, never on the
// class, so paired recipes differ in rendering alone.
SceneState derive_state(const SceneRecipe& r) {
    SceneState s;
    s.scene = r.scene;
    s.background = make_background(derive_seed(r.seed, 2), r.background);
    Rng geo(derive_seed(r.seed, 1));
    for (int i = 0; i < r.blob_count; ++i) s.blobs.push_back(make_blob(geo, r.size, r.radius_min, r.radius_max));
    Rng glow(derive_seed(r.seed, 3));
    s.glow = glow.uniform() < 0.5;
    return s;
}

std::array<double, 3> background_at(const Background& bg, double x, double y, int size) {
    if (bg.kind == BackgroundKind::flat) return bg.base;
    const double scale = 4.0 / size;
    const double n = fbm(bg.seed, bg.dx + x * scale, bg.dy + y * scale);
    const double f = 1.0 - bg.amp + 2.0 * bg.amp * n;
    return {clamp01(bg.base[0] * f), clamp01(bg.base[1] * f), clamp01(bg.base[2] * f)};
}

struct Sample {
    std::array<double, 3> color{};
    double alpha = 0.0;
};

// Irregular textured blob: explosion and structure confuser.
Sample irregular_at(const Blob& b, SceneClass scene, double x, double y, int size) {
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    const double dist = std::hypot(dx, dy);
    const double theta = std::atan2(dy, dx);
    double shape = 1.0;
    for (int k = 0; k < kHarmonics; ++k) {
        shape += b.lobe_amp[static_cast<std::size_t>(k)] * std::cos((k + 2) * theta + b.lobe_phase[static_cast<std::size_t>(k)]);
    }
    const double d = dist / (b.radius * shape);
    Sample s;
    s.alpha = smoothstep(1.0, 0.8, d);
    if (s.alpha <= 0.0) return s;
    const double scale = 8.0 / size;
    const double tex = fbm(b.texture_seed, b.texture_dx + x * scale, b.texture_dy + y * scale);
    const double core = clamp01(1.0 - d);
    const double t = clamp01((0.25 + 0.75 * std::sqrt(core)) * (1.0 + b.texture_amp * (2.0 * tex - 1.0)) * b.brightness);
    const std::array<double, 3> hot = fire(t);
    s.color = scene == SceneClass::explosion ? hot : tinted_grey(luma(hot), kOliveTint, b.tint);
    return s;
}

// Smooth circular disc: light source (fire palette) or neutral glow.
Sample disc_at(const Blob& b, bool neutral, double x, double y) {
    const double d = std::hypot(x - b.cx, y - b.cy) / b.radius;
    Sample s;
    s.alpha = smoothstep(1.0, 0.8, d);
    if (s.alpha <= 0.0) return s;
    const double t = clamp01((0.25 + 0.75 * std::sqrt(clamp01(1.0 - d))) * b.brightness);
    const std::array<double, 3> hot = fire(t);
    s.color = neutral ? tinted_grey(luma(hot), kBlueTint, b.tint) : hot;
    return s;
}

SceneRender render(const SceneState& s, int size, std::uint64_t index) {
    SceneRender out{Frame(size, size, 3, index), std::vector<float>(static_cast<std::size_t>(size) * size, 0.0f)};
    const bool irregular = s.scene == SceneClass::explosion || s.scene == SceneClass::structure_confuser;
    const bool disc = s.scene == SceneClass::light_source_confuser || (s.scene == SceneClass::plain_negative && s.glow);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            std::array<double, 3> c = background_at(s.background, px, py, size);
            double mask = 0.0;
            for (const Blob& b : s.blobs) {
                Sample fg;
                if (irregular) {
                    fg = irregular_at(b, s.scene, px, py, size);
                } else if (disc) {
                    fg = disc_at(b, s.scene == SceneClass::plain_negative, px, py);
                }
                if (fg.alpha <= 0.0) continue;
                for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = fg.alpha * fg.color[ch] + (1.0 - fg.alpha) * c[ch];
                mask = std::max(mask, fg.alpha);
            }
            for (int ch = 0; ch < 3; ++ch) {
                out.frame.at(x, y, ch) = static_cast<std::uint8_t>(std::floor(clamp01(c[static_cast<std::size_t>(ch)]) * 255.0 + 0.5));
            }
            out.blob_mask[static_cast<std::size_t>(y) * size + x] = static_cast<float>(mask);
        }
    }
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::string to_string(SceneClass c) {
    switch (c) {
        case SceneClass::explosion: return "explosion";
        case SceneClass::light_source_confuser: return "light_source_confuser";
        case SceneClass::structure_confuser: return "structure_confuser";
        case SceneClass::plain_negative: return "plain_negative";
    }
    return "?";
}

SceneClass parse_scene_class(const std::string& name) {
    const std::string n = lower(name);
    if (n == "explosion") return SceneClass::explosion;
    if (n == "light_source_confuser" || n == "light") return SceneClass::light_source_confuser;
    if (n == "structure_confuser" || n == "structure") return SceneClass::structure_confuser;
    if (n == "plain_negative" || n == "plain") return SceneClass::plain_negative;
    throw std::invalid_argument("unknown scene class '" + name + "'");
}

SceneRender render_scene(const SceneRecipe& recipe) {
    check_recipe(recipe);
    return render(derive_state(recipe), recipe.size, 0);
}

Frame gen_image(const SceneRecipe& recipe) { return render_scene(recipe).frame; }

SplitDataset gen_dataset(int n_per_class, double val_fraction, std::uint64_t seed, int size,
                         std::span<const SceneClass> classes) {
    if (n_per_class < 10) throw std::invalid_argument("gen_dataset needs n_per_class >= 10");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must lie in [0, 1)");
    if (classes.empty()) throw std::invalid_argument("gen_dataset needs at least one class");
    const int n_val = static_cast<int>(std::llround(n_per_class * val_fraction));
    SplitDataset out;
    for (SceneClass c : classes) {
        const auto class_tag = static_cast<std::uint64_t>(c) << 32;
        for (int i = 0; i < n_per_class; ++i) {
            SceneRecipe r;
            r.scene = c;
            r.size = size;
            r.seed = derive_seed(seed, class_tag | static_cast<std::uint64_t>(i));
            LabeledFrame lf{gen_image(r), label_of(c), c, r.seed};
            (i < n_val ? out.val : out.train).push_back(std::move(lf));
        }
    }
    return out;
}

std::vector<nn::Sample> make_samples(std::span<const LabeledFrame> frames, ChannelProjection projection) {
    std::vector<nn::Sample> out;
    out.reserve(frames.size());
    for (const LabeledFrame& f : frames) out.push_back(nn::Sample{to_tensor(project(f.frame, projection)), f.label});
    return out;
}

std::vector<TimelineSegment> parse_timeline(const std::string& text) {
    std::vector<TimelineSegment> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InputError("timeline segment '" + item + "' is not class:seconds");
        TimelineSegment seg;
        try {
            seg.scene = parse_scene_class(item.substr(0, colon));
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        const std::string dur = item.substr(colon + 1);
        std::size_t used = 0;
        try {
            seg.duration_s = std::stod(dur, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != dur.size() || !(seg.duration_s > 0.0) || !std::isfinite(seg.duration_s)) {
            throw InputError("timeline segment '" + item + "' needs a positive duration");
        }
        out.push_back(seg);
    }
    if (out.empty()) throw InputError("timeline is empty");
    return out;
}

Sequence gen_sequence(std::span<const TimelineSegment> timeline, double fps, std::uint64_t seed, int size) {
    if (timeline.empty()) throw InputError("timeline is empty");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw std::invalid_argument("fps must be positive");
    if (size < 16) throw std::invalid_argument("scene size must be at least 16 px");

    Sequence seq;
    seq.fps = fps;
    const Background bg = make_background(derive_seed(seed, 0xb9), BackgroundKind::value_noise);
    Rng drift(derive_seed(seed, 0xd1));
    const double bg_vx = drift.uniform(-0.3, 0.3);
    const double bg_vy = drift.uniform(-0.3, 0.3);

    double t0 = 0.0;
    for (std::size_t k = 0; k < timeline.size(); ++k) {
        const TimelineSegment& seg = timeline[k];
        const double t1 = t0 + seg.duration_s;
        const auto first = static_cast<std::size_t>(std::llround(t0 * fps));
        const auto last = static_cast<std::size_t>(std::llround(t1 * fps));

        SceneRecipe r;
        r.scene = seg.scene;
        r.size = size;
        r.seed = derive_seed(seed, 0x1000 + k);
        SceneState base = derive_state(r);
        Rng motion(derive_seed(r.seed, 4));
        const double vx = size * motion.uniform(-0.04, 0.04);
        const double vy = size * motion.uniform(-0.04, 0.04);
        const double flicker_hz = motion.uniform(2.0, 4.0);
        const double flicker_phase = motion.uniform(0.0, kTwoPi);

        for (std::size_t i = first; i < last; ++i) {
            const double t = static_cast<double>(i) / fps;
            const double local = t - t0;
            SceneState s = base;
            s.background = bg;
            s.background.dx += bg_vx * t;
            s.background.dy += bg_vy * t;
            const double grow = 0.75 + 0.25 * std::min(1.0, local / std::max(seg.duration_s * 0.5, 1e-9));
            for (Blob& b : s.blobs) {
                b.cx += vx * local;
                b.cy += vy * local;
                b.radius *= grow;
                b.texture_dx += 0.8 * local;
                b.texture_dy -= 0.5 * local;
                b.brightness = std::min(1.0, b.brightness * (1.0 + 0.06 * std::sin(kTwoPi * flicker_hz * t + flicker_phase)));
            }
            seq.frames.push_back(render(s, size, i).frame);
        }

        if (seg.scene == SceneClass::explosion) {
            if (!seq.truth.empty() && k > 0 && timeline[k - 1].scene == SceneClass::explosion) {
                seq.truth.back().end_s = t1;
            } else {
                seq.truth.push_back(GroundTruthInterval{t0, t1, "explosion"});
            }
        }
        t0 = t1;
    }
    return seq;
}

void emit_dataset(const std::string& dir, const SplitDataset& data) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "pos");
    fs::create_directories(root / "neg");
    auto emit = [&](const std::vector<LabeledFrame>& frames, const char* split) {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const LabeledFrame& f = frames[i];
            char name[96];
            std::snprintf(name, sizeof name, "%s_%s_%05zu.ppm", split, to_string(f.scene).c_str(), i);
            io::write_pnm((root / (f.label ? "pos" : "neg") / name).string(), f.frame);
        }
    };
    emit(data.train, "train");
    emit(data.val, "val");
}

void emit_sequence(const std::string& dir, const Sequence& seq) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "frames");
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.ppm", i);
        io::write_pnm((root / "frames" / name).string(), seq.frames[i]);
        paths.push_back(std::string("frames/") + name);
    }
    std::ofstream manifest(root / "frames.txt");
    if (!manifest) throw InputError("cannot write '" + (root / "frames.txt").string() + "'");
    manifest << io::format_frame_manifest(paths, seq.fps);
    std::ofstream truth(root / "truth.csv");
    if (!truth) throw InputError("cannot write '" + (root / "truth.csv").string() + "'");
    truth << truth_csv(seq.truth);
}

}  // namespace vcascade::synth

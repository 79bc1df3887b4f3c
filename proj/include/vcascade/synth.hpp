#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcascade/evalkit.hpp"
#include "vcascade/nn/train.hpp"
#include "vcascade/preprocess.hpp"

namespace vcascade::synth {

// Scene archetypes. Only `explosion` is a positive.
//  explosion              irregular lobed blob, fire palette, internal texture
//  light_source_confuser  smooth circular disc in the fire palette (a lamp)
//  structure_confuser     explosion geometry recoloured grey-green at equal luminance
//  plain_negative         textured background, half of them with a neutral glow whose
//                         luminance profile matches a light source
enum class SceneClass { explosion, light_source_confuser, structure_confuser, plain_negative };

inline constexpr SceneClass kAllClasses[] = {SceneClass::explosion, SceneClass::light_source_confuser,
                                             SceneClass::structure_confuser, SceneClass::plain_negative};

std::string to_string(SceneClass c);
SceneClass parse_scene_class(const std::string& name);  // also accepts plain, light, structure
inline int label_of(SceneClass c) { return c == SceneClass::explosion ? 1 : 0; }

enum class BackgroundKind { value_noise, flat };

struct SceneRecipe {
    SceneClass scene = SceneClass::plain_negative;
    std::uint64_t seed = 0;
    int size = 64;
    int blob_count = 1;
    double radius_min = 0.17;  // fractions of size
    double radius_max = 0.27;
    BackgroundKind background = BackgroundKind::value_noise;
};

struct SceneRender {
    Frame frame;
    std::vector<float> blob_mask;  // per-pixel blob opacity in [0, 1]
};

// Bit-for-bit deterministic in the recipe. Explosion and structure
// confuser recipes with equal seeds share geometry and background.
SceneRender render_scene(const SceneRecipe& recipe);
Frame gen_image(const SceneRecipe& recipe);

struct LabeledFrame {
    Frame frame;
    int label = 0;
    SceneClass scene = SceneClass::plain_negative;
    std::uint64_t seed = 0;
};

struct SplitDataset {
    std::vector<LabeledFrame> train;
    std::vector<LabeledFrame> val;
};

// n_per_class images for each class, split per class so exactly
// round(n * val_fraction) of each land in val.
SplitDataset gen_dataset(int n_per_class, double val_fraction, std::uint64_t seed, int size = 64,
                         std::span<const SceneClass> classes = kAllClasses);

std::vector<nn::Sample> make_samples(std::span<const LabeledFrame> frames, ChannelProjection projection);

struct TimelineSegment {
    SceneClass scene = SceneClass::plain_negative;
    double duration_s = 0.0;
};

// "plain:2,explosion:1,plain:2"
std::vector<TimelineSegment> parse_timeline(const std::string& text);

struct Sequence {
    std::vector<Frame> frames;
    std::vector<GroundTruthInterval> truth;  // sorted, non-overlapping
    double fps = 0.0;
};

// round(total_duration * fps) frames with drifting background and, inside
// blob segments, moving, growing and flickering blobs. Adjacent explosion
// segments merge into one truth interval.
Sequence gen_sequence(std::span<const TimelineSegment> timeline, double fps, std::uint64_t seed, int size = 64);

// <dir>/pos/*.ppm and <dir>/neg/*.ppm, all splits together.
void emit_dataset(const std::string& dir, const SplitDataset& data);

// <dir>/frames/NNNNNN.ppm, <dir>/frames.txt (manifest with fps) and <dir>/truth.csv.
void emit_sequence(const std::string& dir, const Sequence& seq);

}  // namespace vcascade::synth

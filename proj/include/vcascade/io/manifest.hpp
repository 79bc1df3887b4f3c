#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vcascade/cascade.hpp"

namespace vcascade::io {

// Text file: optional `fps=<real>` and `stride=<int>` header lines, then
// one frame path per line (relative paths resolve against the manifest's
// directory). `#` starts a comment line.
struct FrameManifest {
    std::vector<std::string> paths;  // already resolved and strided
    std::optional<double> fps;
    int stride = 1;

    // fps / stride; throws InputError when fps is missing.
    double fps_effective() const;
};

FrameManifest read_frame_manifest(const std::string& path);
std::string format_frame_manifest(const std::vector<std::string>& paths, std::optional<double> fps, int stride = 1);

// One stage per line: `projection=<kind> weights=<path> threshold=<real>`,
// plus an optional `spec=<path>` naming the network description (defaults
// to `<weights>.json`). `#` starts a comment.
struct StageEntry {
    ChannelProjection projection = ChannelProjection::identity_rgb;
    std::string weights_path;
    std::string spec_path;
    double threshold = kDefaultThreshold;
};

std::vector<StageEntry> read_cascade_manifest(const std::string& path);
std::string format_cascade_manifest(const std::vector<StageEntry>& stages);

// Loads every stage's network description and weights.
Cascade load_cascade(const std::string& manifest_path);

// Writes `<weights_path>` and its `<weights_path>.json` network description.
void save_model(const std::string& weights_path, const nn::NetworkSpec& spec, const nn::WeightBundle& weights);
nn::NetworkSpec read_network_file(const std::string& path);

}  // namespace vcascade::io

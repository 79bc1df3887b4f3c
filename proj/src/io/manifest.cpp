#include "vcascade/io/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vcascade/error.hpp"

namespace vcascade::io {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string resolve(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path.string() : (base_dir / path).lexically_normal().string();
}

std::vector<std::string> read_lines(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw InputError(std::string("cannot read ") + what + " '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

double parse_real(const std::string& text, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InputError(context + ": '" + text + "' is not a number");
    }
}

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double FrameManifest::fps_effective() const {
    if (!fps) throw InputError("frame manifest has no fps= header (required in video mode)");
    return *fps / stride;
}

FrameManifest read_frame_manifest(const std::string& path) {
    const fs::path dir = fs::path(path).parent_path();
    FrameManifest m;
    std::vector<std::string> all;
    int line_no = 0;
    for (const std::string& raw : read_lines(path, "frame manifest")) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::string ctx = path + ":" + std::to_string(line_no);
        if (line.rfind("fps=", 0) == 0) {
            const double fps = parse_real(line.substr(4), ctx);
            if (!(fps > 0.0)) throw InputError(ctx + ": fps must be positive");
            m.fps = fps;
        } else if (line.rfind("stride=", 0) == 0) {
            const double stride = parse_real(line.substr(7), ctx);
            if (stride < 1 || stride != static_cast<int>(stride)) {
                throw InputError(ctx + ": stride must be an integer >= 1");
            }
            m.stride = static_cast<int>(stride);
        } else {
            all.push_back(resolve(dir, line));
        }
    }
    for (std::size_t i = 0; i < all.size(); i += static_cast<std::size_t>(m.stride)) m.paths.push_back(all[i]);
    if (m.paths.empty()) throw InputError("frame manifest '" + path + "' lists no frames");
    return m;
}

std::string format_frame_manifest(const std::vector<std::string>& paths, std::optional<double> fps, int stride) {
    std::string out;
    if (fps) out += "fps=" + fmt_real(*fps) + "\n";
    if (stride != 1) out += "stride=" + std::to_string(stride) + "\n";
    for (const std::string& p : paths) out += p + "\n";
    return out;
}

std::vector<StageEntry> read_cascade_manifest(const std::string& path) {
    const fs::path dir = fs::path(path).parent_path();
    std::vector<StageEntry> stages;
    int line_no = 0;
    for (const std::string& raw : read_lines(path, "cascade manifest")) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string ctx = path + ":" + std::to_string(line_no);

        StageEntry e;
        bool have_proj = false;
        bool have_weights = false;
        bool have_threshold = false;
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw InputError(ctx + ": expected key=value, got '" + tok + "'");
            const std::string key = tok.substr(0, eq);
            const std::string value = tok.substr(eq + 1);
            if (key == "projection") {
                try {
                    e.projection = parse_projection(value);
                } catch (const std::invalid_argument& ex) {
                    throw InputError(ctx + ": " + ex.what());
                }
                have_proj = true;
            } else if (key == "weights") {
                e.weights_path = resolve(dir, value);
                have_weights = true;
            } else if (key == "threshold") {
                e.threshold = parse_real(value, ctx);
                have_threshold = true;
            } else if (key == "spec") {
                e.spec_path = resolve(dir, value);
            } else {
                throw InputError(ctx + ": unknown key '" + key + "'");
            }
        }
        if (!have_proj || !have_weights || !have_threshold) {
            throw InputError(ctx + ": each stage needs projection=, weights= and threshold=");
        }
        if (e.spec_path.empty()) e.spec_path = e.weights_path + ".json";
        stages.push_back(std::move(e));
    }
    if (stages.empty()) throw InputError("cascade manifest '" + path + "' has no stages");
    return stages;
}

std::string format_cascade_manifest(const std::vector<StageEntry>& stages) {
    std::string out;
    for (const StageEntry& s : stages) {
        out += "projection=" + to_string(s.projection) + " weights=" + s.weights_path +
               " threshold=" + fmt_real(s.threshold);
        if (!s.spec_path.empty() && s.spec_path != s.weights_path + ".json") out += " spec=" + s.spec_path;
        out += "\n";
    }
    return out;
}

nn::NetworkSpec read_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read network description '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return nn::network_from_json_string(ss.str());
    } catch (const std::invalid_argument& e) {
        throw InputError("'" + path + "': " + e.what());
    }
}

Cascade load_cascade(const std::string& manifest_path) {
    std::vector<CascadeStage> stages;
    for (const StageEntry& e : read_cascade_manifest(manifest_path)) {
        nn::NetworkSpec spec = read_network_file(e.spec_path);
        nn::WeightBundle weights = nn::read_weight_file(e.weights_path, spec);
        stages.push_back(CascadeStage{e.projection, std::move(spec), std::move(weights), e.threshold});
    }
    return Cascade(std::move(stages));
}

void save_model(const std::string& weights_path, const nn::NetworkSpec& spec, const nn::WeightBundle& weights) {
    nn::write_weight_file(weights_path, weights);
    std::ofstream out(weights_path + ".json");
    if (!out) throw InputError("cannot write '" + weights_path + ".json'");
    out << nn::to_json_string(spec) << "\n";
}

}  // namespace vcascade::io

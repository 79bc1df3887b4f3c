#include "vcascade/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vcascade/bench.hpp"
#include "vcascade/cascade.hpp"
#include "vcascade/error.hpp"
#include "vcascade/evalkit.hpp"
#include "vcascade/io/manifest.hpp"
#include "vcascade/io/ppm.hpp"
#include "vcascade/nn/train.hpp"
#include "vcascade/synth.hpp"

namespace vcascade::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TrainArgs {
    int class_channels = 3;
    std::string projection;
    std::string data_dir;
    int epochs = 400;
    std::uint64_t seed = 0;
    std::string out;
    int side = 64;
    std::string widths = "desk";
    int batch_size = 16;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double val_fraction = 0.2;
    std::string history;
};

struct ClassifyArgs {
    std::string cascade;
    std::string frames;
    std::string mode = "image";
    std::string report;
    std::string track_csv;
    bool lazy = false;
    int window = 3;
    long long radius = 1;
    unsigned workers = 1;
};

struct EvaluateArgs {
    std::vector<std::string> events;
    std::vector<std::string> truth;
    double tolerance = kDefaultToleranceSeconds;
    std::string out;
};

struct GenArgs {
    std::string out;
    std::uint64_t seed = 0;
    int size = 64;
    std::string timeline;
    double fps = 10.0;
    int n_per_class = 100;
    double val_fraction = 0.2;
    std::string classes = "explosion,light_source_confuser,structure_confuser,plain_negative";
};

struct BenchArgs {
    std::string cascade;
    std::string frames;
    int stream = 100;
    double positive_rate = 0.0;
    std::uint64_t seed = 0;
    int warmup = 3;
    int repetitions = 30;
    std::string out;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void emit(const json& doc, const std::string& path, std::ostream& out) {
    const std::string text = doc.dump(2) + "\n";
    if (path.empty()) {
        out << text;
    } else {
        write_text(path, text);
    }
}

std::vector<std::string> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("data directory '" + dir.string() + "' does not exist");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")) {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw InputError("data directory '" + dir.string() + "' holds no PPM images");
    return paths;
}

Frame load_frame(const std::string& path, int side, std::uint64_t index) {
    Frame f = io::read_pnm(path);
    f.index = index;
    if (f.width != side || f.height != side) {
        f = resize_antialiased(f, side);
        f.index = index;
    }
    return f;
}

ChannelProjection train_projection(const TrainArgs& a) {
    if (!a.projection.empty()) {
        try {
            const ChannelProjection p = parse_projection(a.projection);
            if (output_channels(p) != a.class_channels) {
                throw ConfigMismatch("--projection " + a.projection + " yields " + std::to_string(output_channels(p)) +
                                     " channel(s), --class-channels is " + std::to_string(a.class_channels));
            }
            return p;
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }
    if (a.class_channels == 3) return ChannelProjection::identity_rgb;
    if (a.class_channels == 1) return ChannelProjection::grayscale;
    throw InputError("--class-channels " + std::to_string(a.class_channels) + " needs an explicit --projection");
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    nn::TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch_size;
    cfg.learning_rate = a.learning_rate;
    cfg.momentum = a.momentum;
    cfg.val_fraction = a.val_fraction;
    cfg.seed = a.seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("invalid training config: ") + e.what());
    }
    if (a.widths != "desk" && a.widths != "paper") throw InputError("--widths must be desk or paper");

    const ChannelProjection proj = train_projection(a);
    const fs::path root(a.data_dir);
    std::vector<nn::Sample> data;
    for (const auto& [sub, label] : {std::pair<const char*, int>{"pos", 1}, {"neg", 0}}) {
        for (const std::string& p : list_images(root / sub)) {
            const Frame f = load_frame(p, a.side, data.size());
            if (f.channels != 3) throw ConfigMismatch("'" + p + "' is not an RGB image");
            data.push_back(nn::Sample{to_tensor(project(f, proj)), label});
        }
    }

    const nn::NetworkSpec spec = nn::build_paper_model(
        a.class_channels, a.side, a.widths == "paper" ? nn::ModelWidths::paper() : nn::ModelWidths::desk());
    const nn::TrainResult r = nn::train(spec, data, cfg);
    io::save_model(a.out, spec, r.weights);

    const nn::EpochStats& best = r.history[static_cast<std::size_t>(r.best_epoch - 1)];
    const nn::EpochStats& last = r.history.back();
    char line[256];
    std::snprintf(line, sizeof line, "trained %zu samples, %d epochs, projection %s, %llu parameters\n", data.size(),
                  cfg.epochs, to_string(proj).c_str(),
                  static_cast<unsigned long long>(nn::count_params(spec).total));
    out << line;
    std::snprintf(line, sizeof line, "best epoch %d: val_loss %.6f val_accuracy %.4f\n", best.epoch, best.val_loss,
                  best.val_accuracy);
    out << line;
    std::snprintf(line, sizeof line, "last epoch %d: train_loss %.6f val_loss %.6f val_accuracy %.4f\n", last.epoch,
                  last.train_loss, last.val_loss, last.val_accuracy);
    out << line;
    out << "wrote " << a.out << " and " << a.out << ".json\n";

    if (!a.history.empty()) {
        std::string csv = "epoch,train_loss,val_loss,val_accuracy\n";
        for (const nn::EpochStats& e : r.history) {
            std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss,
                          e.val_accuracy);
            csv += line;
        }
        write_text(a.history, csv);
    }
    return kExitOk;
}

json score_list(const std::vector<double>& scores) {
    json arr = json::array();
    for (double s : scores) arr.push_back(std::isfinite(s) ? json(s) : json(nullptr));
    return arr;
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
    if (a.mode != "image" && a.mode != "video") throw InputError("--mode must be image or video");
    const Cascade cascade = io::load_cascade(a.cascade);
    const io::FrameManifest manifest = io::read_frame_manifest(a.frames);
    const double fps = a.mode == "video" ? manifest.fps_effective() : 0.0;

    std::vector<Frame> frames;
    int width = 0;
    int height = 0;
    for (const std::string& p : manifest.paths) {
        Frame raw = io::read_pnm(p);
        if (frames.empty()) {
            width = raw.width;
            height = raw.height;
        } else if (raw.width != width || raw.height != height) {
            throw InputError("'" + p + "' is " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                             ", earlier frames are " + std::to_string(width) + "x" + std::to_string(height));
        }
        if (raw.channels != 3) {
            throw ConfigMismatch("'" + p + "' has " + std::to_string(raw.channels) +
                                 " channel(s); the cascade projections read RGB frames");
        }
        const std::uint64_t index = frames.size();
        Frame f = raw.width == cascade.input_side() && raw.height == cascade.input_side()
                      ? std::move(raw)
                      : resize_antialiased(raw, cascade.input_side());
        f.index = index;
        frames.push_back(std::move(f));
    }

    json report;
    report["mode"] = a.mode;
    report["frame_count"] = frames.size();
    json stages = json::array();
    for (const CascadeStage& s : cascade.stages()) {
        stages.push_back({{"projection", to_string(s.projection)},
                          {"threshold", s.threshold},
                          {"params", nn::count_params(s.spec).total}});
    }
    report["stages"] = stages;

    json rows = json::array();
    if (a.mode == "image") {
        InvocationStats stats;
        const std::vector<Prediction> preds = cascade.classify_images(frames, &stats, a.workers);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            rows.push_back({{"index", i},
                            {"path", manifest.paths[i]},
                            {"label", is_positive(preds[i].label) ? 1 : 0},
                            {"stage_reached", preds[i].stage_reached},
                            {"scores", score_list(preds[i].stage_scores)}});
        }
        report["invocations"] = stats.forwards;
    } else {
        SequenceOptions opt;
        opt.window = a.window;
        opt.radius = a.radius;
        opt.lazy = a.lazy;
        const SequenceResult r = cascade.classify_sequence(frames, fps, opt);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            std::vector<double> scores;
            std::vector<int> labels;
            for (const PredictionTrack& t : r.tracks) {
                scores.push_back(t.scores[i]);
                labels.push_back(is_positive(t.labels[i]) ? 1 : 0);
            }
            rows.push_back({{"index", i},
                            {"path", manifest.paths[i]},
                            {"label", is_positive(r.final_track.labels[i]) ? 1 : 0},
                            {"stage_labels", labels},
                            {"scores", score_list(scores)}});
        }
        report["fps_effective"] = fps;
        report["window"] = a.window;
        report["radius"] = a.radius;
        report["lazy"] = a.lazy;
        report["invocations"] = r.stats.forwards;
        json events = json::array();
        for (const Event& e : track_to_events(r.final_track)) events.push_back({{"start_s", e.start_s}, {"end_s", e.end_s}});
        report["events"] = events;
        if (!a.track_csv.empty()) {
            const PredictionTrack& c = r.tracks.front();
            const PredictionTrack& l = r.tracks.size() > 1 ? r.tracks[1] : r.tracks.front();
            write_text(a.track_csv, track_csv(c, l, r.final_track));
        }
    }
    report["predictions"] = rows;
    emit(report, a.report, out);
    return kExitOk;
}

std::vector<Event> read_events(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc.contains("events") || !doc["events"].is_array()) {
        throw InputError("'" + path + "' has no \"events\" array (expected a video-mode classify report)");
    }
    std::vector<Event> events;
    for (const json& e : doc["events"]) {
        if (!e.contains("start_s") || !e.contains("end_s") || !e["start_s"].is_number() || !e["end_s"].is_number()) {
            throw InputError("'" + path + "': event entries need numeric start_s and end_s");
        }
        events.push_back(Event{e["start_s"].get<double>(), e["end_s"].get<double>()});
    }
    return events;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    if (a.events.size() != a.truth.size()) {
        throw InputError("--events and --truth must be given the same number of times");
    }
    if (!(a.tolerance >= 0.0) || !std::isfinite(a.tolerance)) throw InputError("--tolerance must be non-negative");
    std::vector<VideoInput> videos;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        VideoInput v;
        v.name = a.events[i];
        v.events = read_events(a.events[i]);
        std::ifstream truth(a.truth[i]);
        if (!truth) throw InputError("cannot read truth CSV '" + a.truth[i] + "'");
        try {
            v.truth = parse_truth_csv(truth);
        } catch (const InputError& e) {
            throw InputError("'" + a.truth[i] + "': " + e.what());
        }
        videos.push_back(std::move(v));
    }
    if (videos.empty()) throw InputError("evaluate needs at least one --events/--truth pair");
    json report = to_json(evaluate_corpus(videos, a.tolerance));
    json inputs = json::array();
    for (std::size_t i = 0; i < a.events.size(); ++i) inputs.push_back({{"events", a.events[i]}, {"truth", a.truth[i]}});
    report["inputs"] = inputs;
    emit(report, a.out, out);
    return kExitOk;
}

std::vector<synth::SceneClass> parse_classes(const std::string& text) {
    std::vector<synth::SceneClass> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(synth::parse_scene_class(item));
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }
    if (out.empty()) throw InputError("--classes is empty");
    return out;
}

int cmd_gen(const GenArgs& a, const json& flags, std::ostream& out) {
    if (a.size < 16) throw InputError("--size must be at least 16");
    fs::create_directories(a.out);
    json meta;
    meta["flags"] = flags;
    if (!a.timeline.empty()) {
        if (!(a.fps > 0.0)) throw InputError("--fps must be positive");
        const std::vector<synth::TimelineSegment> timeline = synth::parse_timeline(a.timeline);
        const synth::Sequence seq = synth::gen_sequence(timeline, a.fps, a.seed, a.size);
        synth::emit_sequence(a.out, seq);
        meta["kind"] = "sequence";
        meta["frame_count"] = seq.frames.size();
        json truth = json::array();
        for (const GroundTruthInterval& t : seq.truth) truth.push_back({{"start_s", t.start_s}, {"end_s", t.end_s}});
        meta["truth"] = truth;
        out << "wrote " << seq.frames.size() << " frames and " << seq.truth.size() << " truth interval(s) to "
            << a.out << "\n";
    } else {
        const std::vector<synth::SceneClass> classes = parse_classes(a.classes);
        if (a.n_per_class < 10) throw InputError("--n-per-class must be at least 10");
        const synth::SplitDataset data = synth::gen_dataset(a.n_per_class, a.val_fraction, a.seed, a.size, classes);
        synth::emit_dataset(a.out, data);
        // Manifest and labels for image-mode classification of the same files.
        std::vector<std::string> paths;
        std::string labels = "path,label,scene,split\n";
        auto add = [&](const std::vector<synth::LabeledFrame>& frames, const char* split) {
            for (std::size_t i = 0; i < frames.size(); ++i) {
                char name[96];
                std::snprintf(name, sizeof name, "%s/%s_%s_%05zu.ppm", frames[i].label ? "pos" : "neg", split,
                              synth::to_string(frames[i].scene).c_str(), i);
                paths.push_back(name);
                labels += std::string(name) + "," + std::to_string(frames[i].label) + "," +
                          synth::to_string(frames[i].scene) + "," + split + "\n";
            }
        };
        add(data.train, "train");
        add(data.val, "val");
        write_text((fs::path(a.out) / "frames.txt").string(), io::format_frame_manifest(paths, std::nullopt));
        write_text((fs::path(a.out) / "labels.csv").string(), labels);
        meta["kind"] = "dataset";
        meta["train_count"] = data.train.size();
        meta["val_count"] = data.val.size();
        out << "wrote " << data.train.size() << " train and " << data.val.size() << " val images to " << a.out
            << "\n";
    }
    write_text((fs::path(a.out) / "gen.json").string(), meta.dump(2) + "\n");
    return kExitOk;
}

int cmd_bench(const BenchArgs& a, const json& flags, std::ostream& out) {
    const Cascade cascade = io::load_cascade(a.cascade);
    const int side = cascade.input_side();
    std::vector<Frame> stream;
    if (!a.frames.empty()) {
        const io::FrameManifest m = io::read_frame_manifest(a.frames);
        for (const std::string& p : m.paths) stream.push_back(load_frame(p, side, stream.size()));
    } else {
        if (!(a.positive_rate >= 0.0 && a.positive_rate <= 1.0)) throw InputError("--positive-rate must lie in [0, 1]");
        const auto positives = static_cast<int>(std::llround(a.stream * a.positive_rate));
        for (int i = 0; i < a.stream; ++i) {
            synth::SceneRecipe r;
            r.scene = i < positives ? synth::SceneClass::explosion : synth::SceneClass::plain_negative;
            r.seed = derive_seed(a.seed, static_cast<std::uint64_t>(i));
            r.size = side;
            Frame f = synth::gen_image(r);
            f.index = static_cast<std::uint64_t>(i);
            stream.push_back(std::move(f));
        }
    }
    bench::LatencyOptions opt;
    opt.warmup = a.warmup;
    opt.repetitions = a.repetitions;
    bench::BenchReport r;
    try {
        r = bench::bench_latency(cascade, stream, opt);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    json doc = bench::to_json(r);
    doc["flags"] = flags;
    emit(doc, a.out, out);
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"vcascade: verification cascade of lightweight CNNs for explosion detection"};
    app.require_subcommand(1);

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "train one cascade model on a pos/ neg/ PPM directory");
    train->add_option("--class-channels", ta.class_channels, "input channels: 3 (RGB) or 1 (grayscale)")->required();
    train->add_option("--projection", ta.projection, "channel projection, defaults from --class-channels");
    train->add_option("--data-dir", ta.data_dir, "directory with pos/ and neg/ subdirectories")->required();
    train->add_option("--epochs", ta.epochs, "training epochs")->capture_default_str();
    train->add_option("--seed", ta.seed, "initialization and shuffling seed")->capture_default_str();
    train->add_option("--out", ta.out, "weight file to write (plus <out>.json)")->required();
    train->add_option("--side", ta.side, "model input side")->capture_default_str();
    train->add_option("--widths", ta.widths, "desk or paper layer widths")->capture_default_str();
    train->add_option("--batch-size", ta.batch_size)->capture_default_str();
    train->add_option("--lr", ta.learning_rate)->capture_default_str();
    train->add_option("--momentum", ta.momentum)->capture_default_str();
    train->add_option("--val", ta.val_fraction, "validation fraction")->capture_default_str();
    train->add_option("--history", ta.history, "write per-epoch history CSV");

    ClassifyArgs ca;
    CLI::App* classify = app.add_subcommand("classify", "run a cascade over a frame manifest");
    classify->add_option("--cascade", ca.cascade, "cascade manifest")->required();
    classify->add_option("--frames", ca.frames, "frame manifest")->required();
    classify->add_option("--mode", ca.mode, "image or video")->capture_default_str();
    classify->add_option("--report", ca.report, "report JSON path (stdout when omitted)");
    classify->add_option("--track-csv", ca.track_csv, "video mode: per-frame track CSV");
    classify->add_flag("--lazy", ca.lazy, "video mode: evaluate the verifier only near primary positives");
    classify->add_option("--window", ca.window, "majority window")->capture_default_str();
    classify->add_option("--radius", ca.radius, "neighbour validation radius")->capture_default_str();
    classify->add_option("--workers", ca.workers, "image mode threads")->capture_default_str();

    EvaluateArgs ea;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score detected events against truth intervals");
    evaluate->add_option("--events", ea.events, "video-mode classify report (repeatable)")->required();
    evaluate->add_option("--truth", ea.truth, "truth CSV, paired with --events in order (repeatable)")->required();
    evaluate->add_option("--tolerance", ea.tolerance, "match tolerance in seconds")->capture_default_str();
    evaluate->add_option("--out", ea.out, "report JSON path (stdout when omitted)");

    GenArgs ga;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset or sequence");
    gen->add_option("--out", ga.out, "output directory")->required();
    gen->add_option("--seed", ga.seed)->capture_default_str();
    gen->add_option("--size", ga.size, "image side")->capture_default_str();
    gen->add_option("--timeline", ga.timeline, "sequence mode, e.g. plain:2,explosion:1,plain:2");
    gen->add_option("--fps", ga.fps, "sequence frame rate")->capture_default_str();
    gen->add_option("--n-per-class", ga.n_per_class, "dataset mode images per class")->capture_default_str();
    gen->add_option("--val", ga.val_fraction, "dataset mode validation fraction")->capture_default_str();
    gen->add_option("--classes", ga.classes, "dataset mode classes, comma separated")->capture_default_str();

    BenchArgs ba;
    CLI::App* benchcmd = app.add_subcommand("bench", "parameter counts and per-stage latency");
    benchcmd->add_option("--cascade", ba.cascade, "cascade manifest")->required();
    benchcmd->add_option("--frames", ba.frames, "frame manifest (synthetic stream when omitted)");
    benchcmd->add_option("--stream", ba.stream, "synthetic stream length")->capture_default_str();
    benchcmd->add_option("--positive-rate", ba.positive_rate, "synthetic explosion fraction")->capture_default_str();
    benchcmd->add_option("--seed", ba.seed)->capture_default_str();
    benchcmd->add_option("--warmup", ba.warmup)->capture_default_str();
    benchcmd->add_option("--reps", ba.repetitions)->capture_default_str();
    benchcmd->add_option("--out", ba.out, "report JSON path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    auto echo = [](const CLI::App* sub) {
        json flags = json::object();
        for (const CLI::Option* o : sub->get_options()) {
            if (o->get_name() == "--help") continue;
            const std::string value = o->count() > 0 ? o->as<std::string>() : o->get_default_str();
            flags[o->get_name()] = value;
        }
        return flags;
    };

    try {
        if (*train) return cmd_train(ta, out);
        if (*classify) return cmd_classify(ca, out);
        if (*evaluate) return cmd_evaluate(ea, out);
        if (*gen) return cmd_gen(ga, echo(gen), out);
        if (*benchcmd) return cmd_bench(ba, echo(benchcmd), out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const WeightFormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericError& e) {
        err << "error: " << e.what();
        if (e.epoch()) err << " (epoch " << *e.epoch() << ")";
        err << "\n";
        return kExitNumeric;
    } catch (const ConfigMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInput;
}

}  // namespace vcascade::cli

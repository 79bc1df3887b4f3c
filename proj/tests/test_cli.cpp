#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vcascade/cli.hpp"
#include "vcascade/io/ppm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "vcascade");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = vcascade::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Relative path -> contents for every regular file under `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return files;
}

// Shared fixture: a small dataset, two trained models, a cascade manifest
// and a generated test sequence. Built once for the whole binary.
struct Workspace {
    fs::path root;
    fs::path data;
    fs::path seq;
    fs::path cascade;

    Workspace() {
        root = fs::temp_directory_path() / "vcascade_test_cli";
        fs::remove_all(root);
        fs::create_directories(root);
        data = root / "data";
        seq = root / "seq";
        cascade = root / "cascade.txt";
        REQUIRE(run({"gen", "--out", data.string(), "--seed", "3", "--size", "32", "--n-per-class", "12",
                     "--classes", "explosion,plain"})
                    .code == 0);
        for (const char* ch : {"3", "1"}) {
            const std::string name = std::string(ch) == "3" ? "c.cgw" : "l.cgw";
            const Result r = run({"train", "--class-channels", ch, "--data-dir", data.string(), "--epochs", "2",
                                  "--side", "32", "--seed", "7", "--batch-size", "8", "--out", (root / name).string()});
            REQUIRE_MESSAGE(r.code == 0, r.err);
        }
        write_text(cascade, "projection=identity_rgb weights=c.cgw threshold=0.9\n"
                            "projection=grayscale weights=l.cgw threshold=0.9\n");
        REQUIRE(run({"gen", "--out", seq.string(), "--seed", "4", "--size", "32", "--timeline",
                     "plain:2,explosion:1,plain:2", "--fps", "10"})
                    .code == 0);
    }
    ~Workspace() { fs::remove_all(root); }
};

Workspace& workspace() {
    static Workspace w;
    return w;
}

}  // namespace

TEST_CASE("usage errors exit 2, help exits 0") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"train", "--class-channels", "3"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("gen: timeline arithmetic, echoed flags and stable output") {
    const Workspace& w = workspace();
    CHECK(fs::exists(w.seq / "frames" / "000049.ppm"));
    CHECK_FALSE(fs::exists(w.seq / "frames" / "000050.ppm"));
    CHECK(slurp(w.seq / "truth.csv") == "start_s,end_s,label\n2,3,explosion\n");
    const json meta = json::parse(slurp(w.seq / "gen.json"));
    CHECK(meta["flags"]["--seed"] == "4");
    CHECK(meta["flags"]["--fps"] == "10");

    const fs::path again = w.root / "seq_again";
    REQUIRE(run({"gen", "--out", again.string(), "--seed", "4", "--size", "32", "--timeline",
                 "plain:2,explosion:1,plain:2", "--fps", "10"})
                .code == 0);
    auto a = tree(w.seq);
    auto b = tree(again);
    // gen.json echoes --out, the one flag that differs.
    json ma = json::parse(a.at("gen.json"));
    json mb = json::parse(b.at("gen.json"));
    ma["flags"].erase("--out");
    mb["flags"].erase("--out");
    CHECK(ma == mb);
    a.erase("gen.json");
    b.erase("gen.json");
    CHECK(a.size() == 52);
    CHECK(a == b);
    fs::remove_all(again);

    CHECK(run({"gen", "--out", (w.root / "x").string(), "--timeline", "plain:0"}).code == 2);
    CHECK(run({"gen", "--out", (w.root / "x").string(), "--classes", "fog"}).code == 2);
}

TEST_CASE("train: deterministic weights and config errors") {
    const Workspace& w = workspace();
    const fs::path again = w.root / "c_again.cgw";
    REQUIRE(run({"train", "--class-channels", "3", "--data-dir", w.data.string(), "--epochs", "2", "--side", "32",
                 "--seed", "7", "--batch-size", "8", "--out", again.string()})
                .code == 0);
    CHECK(slurp(again) == slurp(w.root / "c.cgw"));
    CHECK(slurp(again.string() + ".json") == slurp(w.root / "c.cgw.json"));

    CHECK(run({"train", "--class-channels", "3", "--data-dir", w.data.string(), "--epochs", "0", "--side", "32",
               "--out", again.string()})
              .code == 2);
    const fs::path empty = w.root / "empty";
    fs::create_directories(empty / "pos");
    fs::create_directories(empty / "neg");
    const Result r = run({"train", "--class-channels", "3", "--data-dir", empty.string(), "--epochs", "1",
                          "--side", "32", "--out", again.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find((empty / "pos").string()) != std::string::npos);
    CHECK(run({"train", "--class-channels", "2", "--data-dir", w.data.string(), "--out", again.string()}).code == 2);
}

TEST_CASE("classify: reproducible reports, video/image identity on one frame, errors") {
    const Workspace& w = workspace();
    const std::string frames = (w.seq / "frames.txt").string();
    const fs::path r1 = w.root / "r1.json";
    const fs::path r2 = w.root / "r2.json";
    const fs::path csv = w.root / "track.csv";
    REQUIRE(run({"classify", "--cascade", w.cascade.string(), "--frames", frames, "--mode", "video", "--report",
                 r1.string(), "--track-csv", csv.string()})
                .code == 0);
    REQUIRE(run({"classify", "--cascade", w.cascade.string(), "--frames", frames, "--mode", "video", "--report",
                 r2.string()})
                .code == 0);
    CHECK(slurp(r1) == slurp(r2));
    const json rep = json::parse(slurp(r1));
    CHECK(rep["frame_count"] == 50);
    CHECK(rep["predictions"].size() == 50);
    CHECK(rep.contains("events"));
    CHECK(slurp(csv).rfind("frame_index,score_C,label_C,score_L,label_L,final_label\n", 0) == 0);

    // Lazy mode writes the same final labels.
    const fs::path lazy = w.root / "lazy.json";
    REQUIRE(run({"classify", "--cascade", w.cascade.string(), "--frames", frames, "--mode", "video", "--lazy",
                 "--report", lazy.string()})
                .code == 0);
    const json lz = json::parse(slurp(lazy));
    CHECK(lz["events"] == rep["events"]);

    // One-frame manifest: video mode equals image mode.
    for (const char* frame : {"000000.ppm", "000025.ppm"}) {
        write_text(w.root / "one.txt", "fps=10\n" + (w.seq / "frames" / frame).string() + "\n");
        const Result img = run({"classify", "--cascade", w.cascade.string(), "--frames",
                                (w.root / "one.txt").string(), "--mode", "image"});
        const Result vid = run({"classify", "--cascade", w.cascade.string(), "--frames",
                                (w.root / "one.txt").string(), "--mode", "video"});
        REQUIRE(img.code == 0);
        REQUIRE(vid.code == 0);
        CHECK(json::parse(img.out)["predictions"][0]["label"] == json::parse(vid.out)["predictions"][0]["label"]);
    }

    // Image mode with several workers matches one worker byte for byte.
    const Result one = run({"classify", "--cascade", w.cascade.string(), "--frames", frames, "--mode", "image"});
    const Result four = run({"classify", "--cascade", w.cascade.string(), "--frames", frames, "--mode", "image",
                             "--workers", "4"});
    CHECK(one.code == 0);
    CHECK(one.out == four.out);

    write_text(w.root / "nofps.txt", (w.seq / "frames" / "000000.ppm").string() + "\n");
    CHECK(run({"classify", "--cascade", w.cascade.string(), "--frames", (w.root / "nofps.txt").string(), "--mode",
               "video"})
              .code == 2);

    write_text(w.root / "missing.txt", "fps=10\n" + (w.root / "nope.ppm").string() + "\n");
    const Result miss = run({"classify", "--cascade", w.cascade.string(), "--frames",
                             (w.root / "missing.txt").string()});
    CHECK(miss.code == 2);
    CHECK(miss.err.find("nope.ppm") != std::string::npos);

    write_text(w.root / "crossed.txt", "projection=grayscale weights=c.cgw threshold=0.9\n");
    CHECK(run({"classify", "--cascade", (w.root / "crossed.txt").string(), "--frames", frames}).code == 4);

    vcascade::Frame gray(32, 32, 1);
    vcascade::io::write_pnm((w.root / "gray.pgm").string(), gray);
    write_text(w.root / "gray.txt", (w.root / "gray.pgm").string() + "\n");
    CHECK(run({"classify", "--cascade", w.cascade.string(), "--frames", (w.root / "gray.txt").string()}).code == 4);

    CHECK(run({"classify", "--cascade", w.cascade.string(), "--frames", frames, "--mode", "audio"}).code == 2);
}

TEST_CASE("evaluate: worked scenario, degenerate case, defaults and CSV errors") {
    const Workspace& w = workspace();
    write_text(w.root / "ev.json", R"({"events": [{"start_s": 10.5, "end_s": 11.0}, {"start_s": 11.2, "end_s": 11.4},
                                                  {"start_s": 31.8, "end_s": 32.5}]})");
    write_text(w.root / "truth.csv", "start_s,end_s,label\n10,12,explosion\n30,31,explosion\n50,52,explosion\n");
    const Result r = run({"evaluate", "--events", (w.root / "ev.json").string(), "--truth",
                          (w.root / "truth.csv").string()});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["tolerance_s"] == 1.0);
    CHECK(j["videos"][0]["tp"] == 2);
    CHECK(j["videos"][0]["fp"] == 0);
    CHECK(j["videos"][0]["fn"] == 1);
    CHECK(j["videos"][0]["precision"] == 1.0);
    CHECK(j["videos"][0]["recall"].get<double>() == doctest::Approx(2.0 / 3.0));
    CHECK(j["videos"][0]["f1"].get<double>() == doctest::Approx(0.8));

    write_text(w.root / "none.json", R"({"events": []})");
    write_text(w.root / "none.csv", "start_s,end_s,label\n");
    const json d = json::parse(run({"evaluate", "--events", (w.root / "none.json").string(), "--truth",
                                    (w.root / "none.csv").string()})
                                   .out);
    CHECK(d["videos"][0]["degenerate"] == true);
    CHECK(d["videos"][0]["precision"] == 1.0);
    CHECK(d["videos"][0]["recall"] == 1.0);

    // The classify report feeds evaluate directly.
    REQUIRE(run({"classify", "--cascade", w.cascade.string(), "--frames", (w.seq / "frames.txt").string(), "--mode",
                 "video", "--report", (w.root / "seqrep.json").string()})
                .code == 0);
    CHECK(run({"evaluate", "--events", (w.root / "seqrep.json").string(), "--truth", (w.seq / "truth.csv").string(),
               "--tolerance", "0.5"})
              .code == 0);

    write_text(w.root / "bad.csv", "start_s,end_s,label\n1,2,explosion\n3,x,explosion\n");
    const Result bad = run({"evaluate", "--events", (w.root / "ev.json").string(), "--truth",
                            (w.root / "bad.csv").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("line 3") != std::string::npos);
    CHECK(run({"evaluate", "--events", (w.root / "ev.json").string(), "--truth", (w.root / "truth.csv").string(),
               "--tolerance", "-1"})
              .code == 2);
}

TEST_CASE("bench: schema and echoed flags") {
    const Workspace& w = workspace();
    const Result r = run({"bench", "--cascade", w.cascade.string(), "--stream", "100", "--positive-rate", "0.1",
                          "--seed", "2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json j = json::parse(r.out);
    for (const char* key : {"params", "frames", "invocations", "reach_rate", "positive_rate", "latency", "flags"}) {
        CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(j["frames"] == 100);
    CHECK(j["invocations"][0] == 100);
    CHECK(j["latency"]["stage"].size() == 2);
    CHECK(j["latency"]["cascade"]["repetitions"] == 30);
    CHECK(j["flags"]["--positive-rate"] == "0.1");
    CHECK(run({"bench", "--cascade", w.cascade.string(), "--stream", "50"}).code == 2);
    CHECK(run({"bench", "--cascade", w.cascade.string(), "--reps", "5"}).code == 2);
}

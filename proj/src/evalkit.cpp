#include "vcascade/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vcascade/error.hpp"

namespace vcascade {

namespace {

void check_interval(double start, double end, const char* what) {
    if (!std::isfinite(start) || !std::isfinite(end)) throw std::invalid_argument(std::string(what) + " is not finite");
    if (start < 0.0) throw std::invalid_argument(std::string(what) + " starts before 0");
    if (start > end) throw std::invalid_argument(std::string(what) + " has start > end");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

double interval_distance(double a_start, double a_end, double b_start, double b_end) {
    return std::max(0.0, std::max(b_start - a_end, a_start - b_end));
}

MatchResult match_events(std::span<const Event> events, std::span<const GroundTruthInterval> truth,
                         double tolerance_s) {
    if (!(tolerance_s >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
    for (const Event& e : events) check_interval(e.start_s, e.end_s, "event");
    for (const GroundTruthInterval& t : truth) check_interval(t.start_s, t.end_s, "truth interval");

    std::vector<std::size_t> truth_order(truth.size());
    std::iota(truth_order.begin(), truth_order.end(), 0);
    std::stable_sort(truth_order.begin(), truth_order.end(), [&](std::size_t a, std::size_t b) {
        return truth[a].start_s < truth[b].start_s;
    });
    std::vector<Event> sorted(events.begin(), events.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const Event& a, const Event& b) { return a.start_s < b.start_s; });

    auto in_reach = [&](const Event& e, const GroundTruthInterval& t) {
        return interval_distance(e.start_s, e.end_s, t.start_s, t.end_s) <= tolerance_s;
    };

    MatchResult r;
    std::vector<bool> claimed(truth.size(), false);
    std::vector<bool> detected(truth.size(), false);
    for (const Event& e : sorted) {
        EventMatch m{e, std::nullopt, false};
        std::optional<std::size_t> first_claimed;
        for (std::size_t idx : truth_order) {
            if (!in_reach(e, truth[idx])) continue;
            detected[idx] = true;
            if (!claimed[idx] && !m.interval) m.interval = idx;
            if (claimed[idx] && !first_claimed) first_claimed = idx;
        }
        if (m.interval) {
            claimed[*m.interval] = true;
        } else if (first_claimed) {
            m.interval = first_claimed;
            m.duplicate = true;
        } else {
            ++r.fp;
        }
        r.matches.push_back(m);
    }
    r.tp = static_cast<int>(std::count(detected.begin(), detected.end(), true));
    r.fn = static_cast<int>(truth.size()) - r.tp;
    return r;
}

VideoMetrics metrics_from_counts(int tp, int fp, int fn) {
    VideoMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
    m.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    m.degenerate = tp + fp + fn == 0;
    return m;
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EvalReport evaluate_corpus(std::span<const VideoInput> videos, double tolerance_s) {
    if (videos.empty()) throw std::invalid_argument("evaluation corpus is empty");
    EvalReport report;
    report.tolerance_s = tolerance_s;
    std::vector<double> p;
    std::vector<double> r;
    std::vector<double> f;
    for (const VideoInput& v : videos) {
        MatchResult mr = match_events(v.events, v.truth, tolerance_s);
        VideoMetrics m = metrics_from_counts(mr.tp, mr.fp, mr.fn);
        m.name = v.name;
        m.matches = std::move(mr.matches);
        p.push_back(m.precision);
        r.push_back(m.recall);
        f.push_back(m.f1);
        report.videos.push_back(std::move(m));
    }
    report.median_precision = median(p);
    report.median_recall = median(r);
    report.median_f1 = median(f);
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json videos = nlohmann::json::array();
    for (const VideoMetrics& v : report.videos) {
        nlohmann::json matches = nlohmann::json::array();
        for (const EventMatch& m : v.matches) {
            matches.push_back({{"event", {m.event.start_s, m.event.end_s}},
                               {"interval", m.interval ? nlohmann::json(*m.interval) : nlohmann::json(nullptr)},
                               {"duplicate", m.duplicate}});
        }
        videos.push_back({{"name", v.name},
                          {"tp", v.tp},
                          {"fp", v.fp},
                          {"fn", v.fn},
                          {"precision", v.precision},
                          {"recall", v.recall},
                          {"f1", v.f1},
                          {"degenerate", v.degenerate},
                          {"matches", std::move(matches)}});
    }
    return {{"tolerance_s", report.tolerance_s},
            {"videos", std::move(videos)},
            {"aggregate",
             {{"median_precision", report.median_precision},
              {"median_recall", report.median_recall},
              {"median_f1", report.median_f1},
              {"video_count", report.videos.size()}}}};
}

std::vector<GroundTruthInterval> parse_truth_csv(std::istream& in) {
    std::vector<GroundTruthInterval> out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            if (t != "start_s,end_s,label") {
                throw InputError("truth CSV line " + std::to_string(line_no) + ": expected header start_s,end_s,label");
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (t.back() == ',') fields.emplace_back();
        if (fields.size() != 3) {
            throw InputError("truth CSV line " + std::to_string(line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        }
        GroundTruthInterval g;
        try {
            std::size_t used = 0;
            g.start_s = std::stod(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument("trailing characters");
            g.end_s = std::stod(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw InputError("truth CSV line " + std::to_string(line_no) + ": start_s/end_s are not numbers");
        }
        g.label = fields[2];
        try {
            check_interval(g.start_s, g.end_s, "interval");
        } catch (const std::invalid_argument& e) {
            throw InputError("truth CSV line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(g));
    }
    if (!header_seen) throw InputError("truth CSV line 1: missing header start_s,end_s,label");
    return out;
}

std::string truth_csv(std::span<const GroundTruthInterval> truth) {
    std::string out = "start_s,end_s,label\n";
    auto put = [&out](double v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        out.append(buf, res.ptr);
    };
    for (const GroundTruthInterval& t : truth) {
        put(t.start_s);
        out += ',';
        put(t.end_s);
        out += ',' + t.label + '\n';
    }
    return out;
}

}  // namespace vcascade

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zslice/volume.hpp"

// Line-delimited JSON exchange format. Every non-blank line is one object:
//
//   header (optional, first line only):
//     {"format":"zslice","version":1,"mode":"<text>","studies":[{"study_id":..,"slice_count":..},..]}
//   slice record:
//     {"study_id":"s1","slice_count":10,"slice_index":3,
//      "boxes":[{"x1":..,"y1":..,"x2":..,"y2":..,"score":..,"track_id":..},..]}
//
// See docs/format.md for the grammar.

namespace zslice::io {

inline constexpr const char* kFormatName = "zslice";
inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
public:
    FormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class ScorePolicy {
    required,  // detector output
    optional,  // ground truth; an absent score reads as 1.0
};

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(line, std::string("missing field '") + key + "'");
    return *it;
}

inline std::size_t unsigned_field(const json& obj, const char* key, std::size_t line) {
    const json& v = field(obj, key, line);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw FormatError(line, std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

inline double number_field(const json& obj, const char* key, std::size_t line) {
    const json& v = field(obj, key, line);
    if (!v.is_number()) throw FormatError(line, std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

inline std::string study_field(const json& obj, std::size_t line) {
    const json& v = field(obj, "study_id", line);
    if (!v.is_string()) throw FormatError(line, "field 'study_id' must be a string");
    return v.get<std::string>();
}

inline Detection parse_box(const json& b, std::size_t slice_index, ScorePolicy policy, std::size_t line) {
    if (!b.is_object()) throw FormatError(line, "box entries must be objects");
    const double x1 = number_field(b, "x1", line);
    const double y1 = number_field(b, "y1", line);
    const double x2 = number_field(b, "x2", line);
    const double y2 = number_field(b, "y2", line);

    double score = 1.0;
    if (b.contains("score")) {
        score = number_field(b, "score", line);
        if (!(score >= 0.0 && score <= 1.0)) {
            throw FormatError(line, "score " + std::to_string(score) + " outside [0, 1]");
        }
    } else if (policy == ScorePolicy::required) {
        throw FormatError(line, "missing field 'score'");
    }

    std::optional<TrackId> track_id;
    if (b.contains("track_id")) {
        const std::size_t id = unsigned_field(b, "track_id", line);
        if (id == 0) throw FormatError(line, "track_id must be positive");
        track_id = id;
    }

    try {
        return Detection{BoundingBox(x1, y1, x2, y2), score, slice_index, track_id};
    } catch (const std::invalid_argument& e) {
        throw FormatError(line, std::string("invalid box: ") + e.what());
    }
}

/// Fixed six-decimal rendering; negative zero prints as 0.000000.
inline std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

/// The value a reader recovers from format_fixed(v).
inline double canonical(double v) { return std::strtod(format_fixed(v).c_str(), nullptr); }

}  // namespace detail

/// Parses a stream of records into studies ordered by first appearance (the
/// header's roster comes first when present). Slices without a record are empty.
inline Corpus parse(std::istream& in, ScorePolicy policy = ScorePolicy::required) {
    using detail::json;

    Corpus corpus;
    std::map<std::string, std::size_t> index;
    std::set<std::pair<std::size_t, std::size_t>> seen;

    auto study = [&](const std::string& id, std::size_t slice_count, std::size_t line) -> VolumeDetections& {
        if (slice_count == 0) throw FormatError(line, "slice_count must be >= 1");
        const auto it = index.find(id);
        if (it == index.end()) {
            index.emplace(id, corpus.size());
            corpus.emplace_back(id, slice_count);
            return corpus.back();
        }
        VolumeDetections& v = corpus[it->second];
        if (v.slice_count() != slice_count) {
            throw FormatError(line, "study '" + id + "' declared with slice_count " + std::to_string(slice_count) +
                                        " but earlier with " + std::to_string(v.slice_count()));
        }
        return v;
    };

    std::string text;
    std::size_t line = 0;
    bool first_record = true;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;

        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw FormatError(line, std::string("malformed record: ") + e.what());
        }
        if (!obj.is_object()) throw FormatError(line, "record must be a JSON object");

        if (obj.contains("format")) {
            if (!first_record) throw FormatError(line, "header must be the first record");
            first_record = false;
            if (obj["format"] != kFormatName) throw FormatError(line, "unknown format tag");
            if (!obj.contains("version") || obj["version"] != kFormatVersion) {
                throw FormatError(line, "unsupported format version");
            }
            if (obj.contains("studies")) {
                const json& roster = obj["studies"];
                if (!roster.is_array()) throw FormatError(line, "header 'studies' must be an array");
                for (const json& s : roster) {
                    if (!s.is_object()) throw FormatError(line, "header study entries must be objects");
                    const std::string id = detail::study_field(s, line);
                    if (index.contains(id)) throw FormatError(line, "duplicate study '" + id + "' in header");
                    study(id, detail::unsigned_field(s, "slice_count", line), line);
                }
            }
            continue;
        }
        first_record = false;

        const std::string id = detail::study_field(obj, line);
        const std::size_t slice_count = detail::unsigned_field(obj, "slice_count", line);
        const std::size_t slice_index = detail::unsigned_field(obj, "slice_index", line);
        VolumeDetections& vol = study(id, slice_count, line);
        if (slice_index >= slice_count) {
            throw FormatError(line, "slice_index " + std::to_string(slice_index) + " >= slice_count " +
                                        std::to_string(slice_count));
        }
        if (!seen.emplace(index.at(id), slice_index).second) {
            throw FormatError(line, "duplicate record for study '" + id + "' slice " + std::to_string(slice_index));
        }

        const json& boxes = detail::field(obj, "boxes", line);
        if (!boxes.is_array()) throw FormatError(line, "field 'boxes' must be an array");
        for (const json& b : boxes) vol.add(slice_index, detail::parse_box(b, slice_index, policy, line));
    }
    return corpus;
}

inline Corpus parse_string(const std::string& text, ScorePolicy policy = ScorePolicy::required) {
    std::istringstream in(text);
    return parse(in, policy);
}

inline Corpus read_file(const std::filesystem::path& path, ScorePolicy policy = ScorePolicy::required) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    try {
        return parse(in, policy);
    } catch (const FormatError& e) {
        throw std::runtime_error(path.string() + ":" + e.what());
    }
}

struct OutputOptions {
    /// Free-form provenance written to the header ("mode" field).
    std::string mode = "detections";
    /// Ground-truth files omit scores.
    bool write_scores = true;
};

/// Canonical within-slice order: descending score, then box coordinates,
/// then track id (untracked first); compared on the rendered values.
inline void sort_canonical(SliceDetections& dets) {
    using detail::canonical;
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        const double sa = canonical(a.score), sb = canonical(b.score);
        if (sa != sb) return sa > sb;
        const double ka[4] = {canonical(a.box.x1()), canonical(a.box.y1()), canonical(a.box.x2()), canonical(a.box.y2())};
        const double kb[4] = {canonical(b.box.x1()), canonical(b.box.y1()), canonical(b.box.x2()), canonical(b.box.y2())};
        for (int i = 0; i < 4; ++i) {
            if (ka[i] != kb[i]) return ka[i] < kb[i];
        }
        return a.track_id < b.track_id;
    });
}

/// Writes the header plus one record per non-empty slice, studies in corpus order.
inline void write(std::ostream& out, const Corpus& corpus, const OutputOptions& options = {}) {
    using detail::format_fixed;
    using detail::json;

    out << "{\"format\":" << json(kFormatName).dump() << ",\"version\":" << kFormatVersion
        << ",\"mode\":" << json(options.mode).dump() << ",\"studies\":[";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (i) out << ',';
        out << "{\"study_id\":" << json(corpus[i].study_id()).dump() << ",\"slice_count\":" << corpus[i].slice_count()
            << '}';
    }
    out << "]}\n";

    for (const auto& vol : corpus) {
        const std::string sid = json(vol.study_id()).dump();
        for (std::size_t z = 0; z < vol.slice_count(); ++z) {
            if (vol.slice(z).empty()) continue;
            SliceDetections dets = vol.slice(z);
            sort_canonical(dets);
            out << "{\"study_id\":" << sid << ",\"slice_count\":" << vol.slice_count() << ",\"slice_index\":" << z
                << ",\"boxes\":[";
            for (std::size_t k = 0; k < dets.size(); ++k) {
                const Detection& d = dets[k];
                if (k) out << ',';
                out << "{\"x1\":" << format_fixed(d.box.x1()) << ",\"y1\":" << format_fixed(d.box.y1())
                    << ",\"x2\":" << format_fixed(d.box.x2()) << ",\"y2\":" << format_fixed(d.box.y2());
                if (options.write_scores) out << ",\"score\":" << format_fixed(d.score);
                if (d.track_id) out << ",\"track_id\":" << *d.track_id;
                out << '}';
            }
            out << "]}\n";
        }
    }
}

inline std::string to_string(const Corpus& corpus, const OutputOptions& options = {}) {
    std::ostringstream out;
    write(out, corpus, options);
    return out.str();
}

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

}  // namespace zslice::io

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "zslice/io.hpp"
#include "zslice/pipeline.hpp"
#include "zslice/synth.hpp"

using namespace zslice;

namespace {

std::size_t error_line(const std::string& text, io::ScorePolicy policy = io::ScorePolicy::required) {
    try {
        io::parse_string(text, policy);
    } catch (const io::FormatError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return 0;
}

std::string record(const std::string& study, int count, int slice, const std::string& boxes) {
    return "{\"study_id\":\"" + study + "\",\"slice_count\":" + std::to_string(count) +
           ",\"slice_index\":" + std::to_string(slice) + ",\"boxes\":[" + boxes + "]}\n";
}

// A valid file with shuffled records, unrounded values and a random mix of
// key orders, blank lines and empty-box records.
std::string random_file(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(0, 400), size(1, 60), score(0, 1);
    std::vector<std::string> lines;
    const int studies = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < studies; ++s) {
        const int count = 1 + static_cast<int>(rng() % 8);
        for (int z = 0; z < count; ++z) {
            if (rng() % 3 == 0) continue;
            std::string boxes;
            const int n = static_cast<int>(rng() % 4);
            for (int k = 0; k < n; ++k) {
                const double x = pos(rng), y = pos(rng);
                std::ostringstream b;
                b.precision(17);
                if (k) b << ',';
                if (rng() % 2) {
                    b << "{\"score\":" << score(rng) << ",\"x1\":" << x << ",\"y1\":" << y << ",\"x2\":" << x + size(rng)
                      << ",\"y2\":" << y + size(rng);
                } else {
                    b << "{\"x1\":" << x << ",\"y1\":" << y << ",\"x2\":" << x + size(rng) << ",\"y2\":" << y + size(rng)
                      << ",\"score\":" << score(rng);
                }
                if (rng() % 2) b << ",\"track_id\":" << 1 + rng() % 50;
                b << '}';
                boxes += b.str();
            }
            lines.push_back(record("st" + std::to_string(s), count, z, boxes));
        }
    }
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string out;
    for (const auto& l : lines) out += (rng() % 5 == 0 ? "\n" : "") + l;
    return out;
}

}  // namespace

TEST(Parse, EmptyInput) {
    EXPECT_TRUE(io::parse_string("").empty());
    EXPECT_TRUE(io::parse_string("\n  \n").empty());
}

TEST(Parse, SingleRecord) {
    const auto c = io::parse_string(record("s1", 3, 1, R"({"x1":0,"y1":0,"x2":10,"y2":10,"score":0.9})"));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].study_id(), "s1");
    ASSERT_EQ(c[0].slice_count(), 3u);
    EXPECT_TRUE(c[0].slice(0).empty());
    ASSERT_EQ(c[0].slice(1).size(), 1u);
    EXPECT_EQ(c[0].slice(1)[0].box, BoundingBox(0, 0, 10, 10));
    EXPECT_DOUBLE_EQ(c[0].slice(1)[0].score, 0.9);
    EXPECT_EQ(c[0].slice(1)[0].slice_index, 1u);
    EXPECT_TRUE(c[0].slice(2).empty());
}

TEST(Parse, StudiesInFirstAppearanceOrderAndBoxOrderPreserved) {
    const std::string text = record("b", 2, 0, R"({"x1":5,"y1":5,"x2":6,"y2":6,"score":0.1},{"x1":0,"y1":0,"x2":1,"y2":1,"score":0.9})") +
                             record("a", 1, 0, "") + record("b", 2, 1, "");
    const auto c = io::parse_string(text);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].study_id(), "b");
    EXPECT_EQ(c[1].study_id(), "a");
    EXPECT_DOUBLE_EQ(c[0].slice(0)[0].score, 0.1);
}

TEST(Parse, ErrorsCarryLineNumbers) {
    const std::string ok = record("s", 3, 0, R"({"x1":0,"y1":0,"x2":1,"y2":1,"score":0.5})");
    EXPECT_EQ(error_line(ok + "\n{not json\n"), 3u);
    EXPECT_EQ(error_line(ok + ok), 2u);  // duplicate (study, slice)
    EXPECT_EQ(error_line(record("s", 3, 3, "")), 1u);
    EXPECT_EQ(error_line(ok + record("s", 3, 1, R"({"x1":0,"y1":0,"x2":1,"y2":1,"score":1.5})")), 2u);
    EXPECT_EQ(error_line(record("s", 3, 1, R"({"x1":0,"y1":0,"x2":1,"y2":1,"score":-0.1})")), 1u);
    EXPECT_EQ(error_line(record("s", 3, 1, R"({"x1":5,"y1":0,"x2":1,"y2":1,"score":0.5})")), 1u);
    EXPECT_EQ(error_line(record("s", 3, 1, R"({"x1":0,"y1":0,"x2":1,"y2":1})")), 1u);
    EXPECT_EQ(error_line(ok + record("s", 4, 1, "")), 2u);
    EXPECT_EQ(error_line(record("s", 0, 0, "")), 1u);
    EXPECT_EQ(error_line(R"({"study_id":"s","slice_count":2,"slice_index":-1,"boxes":[]})"), 1u);
    EXPECT_EQ(error_line(R"({"study_id":7,"slice_count":2,"slice_index":0,"boxes":[]})"), 1u);
    EXPECT_EQ(error_line(R"({"study_id":"s","slice_count":2,"slice_index":0})"), 1u);
    EXPECT_EQ(error_line(ok + R"({"format":"zslice","version":1})"), 2u);
    EXPECT_EQ(error_line(R"({"format":"zslice","version":2})"), 1u);
    EXPECT_EQ(error_line("[1,2]"), 1u);
    EXPECT_EQ(error_line(record("s", 3, 1, R"({"x1":0,"y1":0,"x2":1,"y2":1,"score":0.5,"track_id":0})")), 1u);
}

TEST(Parse, TruthScoresOptional) {
    const std::string text = record("s", 2, 0, R"({"x1":0,"y1":0,"x2":1,"y2":1})");
    EXPECT_THROW(io::parse_string(text), io::FormatError);
    const auto c = io::parse_string(text, io::ScorePolicy::optional);
    EXPECT_DOUBLE_EQ(c[0].slice(0)[0].score, 1.0);
}

TEST(Parse, HeaderRosterKeepsEmptyStudies) {
    const std::string text =
        R"({"format":"zslice","version":1,"mode":"x","studies":[{"study_id":"quiet","slice_count":4},{"study_id":"s","slice_count":2}]})"
        "\n" +
        record("s", 2, 1, R"({"x1":0,"y1":0,"x2":1,"y2":1,"score":0.5})");
    const auto c = io::parse_string(text);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].study_id(), "quiet");
    EXPECT_EQ(c[0].slice_count(), 4u);
    EXPECT_EQ(c[0].total_boxes(), 0u);
}

TEST(Serialize, EmptyVolumeIsHeaderOnly) {
    const std::string out = io::to_string(Corpus{VolumeDetections("s1", 5)}, {"hybrid", true});
    EXPECT_EQ(out, R"({"format":"zslice","version":1,"mode":"hybrid","studies":[{"study_id":"s1","slice_count":5}]})"
                   "\n");
}

TEST(Serialize, CanonicalOrderAndFixedDecimals) {
    VolumeDetections v("s", 2);
    v.add(1, Detection{BoundingBox(5, 0, 6, 1), 0.5, 1, {}});
    v.add(1, Detection{BoundingBox(1, 0, 2, 1), 0.5, 1, TrackId{3}});
    v.add(1, Detection{BoundingBox(9, 9, 10, 10), 0.75, 1, {}});
    const std::string out = io::to_string(Corpus{v}, {"m", true});
    const std::string line2 = out.substr(out.find('\n') + 1);
    EXPECT_EQ(line2,
              R"({"study_id":"s","slice_count":2,"slice_index":1,"boxes":[)"
              R"({"x1":9.000000,"y1":9.000000,"x2":10.000000,"y2":10.000000,"score":0.750000},)"
              R"({"x1":1.000000,"y1":0.000000,"x2":2.000000,"y2":1.000000,"score":0.500000,"track_id":3},)"
              R"({"x1":5.000000,"y1":0.000000,"x2":6.000000,"y2":1.000000,"score":0.500000}]})"
              "\n");
    EXPECT_EQ(out, io::to_string(Corpus{v}, {"m", true}));
    const std::string truth = io::to_string(Corpus{v}, {"truth", false});
    EXPECT_EQ(truth.find("score"), std::string::npos);
}

TEST(Serialize, StudyIdsAreEscaped) {
    VolumeDetections v("we\"ird,id", 1);
    v.add(0, Detection{BoundingBox(0, 0, 1, 1), 0.5, 0, {}});
    const auto back = io::parse_string(io::to_string(Corpus{v}));
    EXPECT_EQ(back[0].study_id(), "we\"ird,id");
}

TEST(RoundTrip, SerializeParseIsCanonical) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::string text = random_file(rng);
        const Corpus parsed = io::parse_string(text);
        const std::string normalized = io::to_string(parsed);
        const Corpus reparsed = io::parse_string(normalized);
        ASSERT_EQ(io::to_string(reparsed), normalized) << text;

        ASSERT_EQ(reparsed.size(), parsed.size());
        for (std::size_t s = 0; s < parsed.size(); ++s) {
            ASSERT_EQ(reparsed[s].study_id(), parsed[s].study_id());
            ASSERT_EQ(reparsed[s].slice_count(), parsed[s].slice_count());
            for (std::size_t z = 0; z < parsed[s].slice_count(); ++z) {
                ASSERT_EQ(reparsed[s].slice(z).size(), parsed[s].slice(z).size());
                for (const auto& d : parsed[s].slice(z)) {
                    const auto& r = reparsed[s].slice(z);
                    const bool found = std::any_of(r.begin(), r.end(), [&](const Detection& e) {
                        return std::abs(e.box.x1() - d.box.x1()) <= 5e-7 && std::abs(e.box.y2() - d.box.y2()) <= 5e-7 &&
                               std::abs(e.score - d.score) <= 5e-7 && e.track_id == d.track_id;
                    });
                    ASSERT_TRUE(found);
                }
            }
        }
    }
}

TEST(RoundTrip, TrackIdsFromTrackerSurvive) {
    const auto corpus = io::read_file(ZSLICE_FIXTURE_DIR "/two_slice.jsonl");
    MethodConfig cfg;
    cfg.mode = Mode::bytetrack;
    const auto tracked = run_mode(corpus, cfg);
    const auto back = io::parse_string(io::to_string(tracked, {"bytetrack", true}));
    ASSERT_EQ(back[0].slice(1).size(), 1u);
    EXPECT_EQ(back[0].slice(1)[0].track_id, TrackId{1});
    EXPECT_EQ(back[0].slice(0)[0].track_id, TrackId{1});
}

TEST(WriteFileAtomic, ReplacesContent) {
    const auto dir = std::filesystem::temp_directory_path() / "zslice_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.jsonl";
    io::write_file_atomic(path, "first\n");
    io::write_file_atomic(path, "second\n");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "second\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "out.jsonl.tmp"));
    EXPECT_THROW(io::write_file_atomic(dir / "missing" / "x.jsonl", "x"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST(ReadFile, MissingPathNamed) {
    try {
        io::read_file("/nonexistent/dets.jsonl");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dets.jsonl"), std::string::npos);
    }
}

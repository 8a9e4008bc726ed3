// zslice: track, evaluate, sweep and synthesize slice-stream detections.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zslice/io.hpp"
#include "zslice/metrics.hpp"
#include "zslice/pipeline.hpp"
#include "zslice/sweep.hpp"
#include "zslice/synth.hpp"
#include "zslice/tables.hpp"

namespace {

using namespace zslice;

struct MethodFlags {
    std::string mode = "hybrid";
    double track_activation = 0.35;
    double min_match = 0.95;
    std::size_t lost_buffer = 5;
    double confidence = 0.20;
    double dedup_iou = 0.7;
    std::string hybrid_base = "bidirectional";
    bool st_confidence_cut = true;

    void attach(CLI::App* cmd, bool with_mode = true) {
        if (with_mode) {
            cmd->add_option("--mode", mode, "Post-processing method")
                ->check(CLI::IsMember({"baseline", "bytetrack", "bidirectional", "hybrid", "spatiotemporal"}))
                ->capture_default_str();
        }
        cmd->add_option("--track-activation", track_activation, "High/low split and spawn threshold")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--min-match", min_match, "Association gate on 1 - IoU")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--lost-buffer", lost_buffer, "Slices a lost track survives")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--confidence", confidence, "Baseline/hybrid retention floor (strict)")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--dedup-iou", dedup_iou, "IoU at which union members collapse")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--hybrid-base", hybrid_base, "Tracker output the hybrid union builds on")
            ->check(CLI::IsMember({"bidirectional", "forward"}))
            ->capture_default_str();
        cmd->add_flag("--st-confidence-cut,!--no-st-confidence-cut", st_confidence_cut,
                      "Apply the confidence floor before the spatiotemporal filter");
    }

    MethodConfig config() const {
        MethodConfig c;
        c.mode = parse_mode(mode);
        c.tracker = TrackerConfig{track_activation, min_match, lost_buffer};
        c.confidence = confidence;
        c.dedup_iou = dedup_iou;
        c.hybrid_base = hybrid_base == "forward" ? HybridBase::forward : HybridBase::bidirectional;
        c.spatiotemporal_confidence_cut = st_confidence_cut;
        c.validate();
        return c;
    }
};

void emit(const std::optional<std::string>& output, const std::string& content) {
    if (output) {
        io::write_file_atomic(*output, content);
    } else {
        std::cout << content;
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad list value '" + item + "'");
        values.push_back(v);
    }
    if (values.empty()) throw std::invalid_argument("empty list");
    return values;
}

nlohmann::json report_json(const EvalReport& r) {
    return {{"scope", r.scope},         {"tp", r.counts.tp},  {"fp", r.counts.fp}, {"fn", r.counts.fn},
            {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tracking-based post-processing for slice-wise volumetric detections"};
    app.require_subcommand(1);

    std::size_t jobs = 1;
    std::string input, truth_path;
    std::optional<std::string> output;

    // track
    auto* track = app.add_subcommand("track", "Run one post-processing method over a detection file");
    MethodFlags track_flags;
    track->add_option("--input", input, "Detections file")->required();
    track->add_option("--output", output, "Result file")->required();
    track->add_option("--jobs", jobs, "Studies processed in parallel")->check(CLI::PositiveNumber);
    track_flags.attach(track);

    // eval
    auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    eval->add_option("--input", input, "Predictions file")->required();
    eval->add_option("--truth", truth_path, "Ground-truth file")->required();
    eval->add_option("--output", output, "Write a JSON report here");
    eval->add_option("--jobs", jobs, "Studies evaluated in parallel")->check(CLI::PositiveNumber);

    // compare
    auto* compare = app.add_subcommand("compare", "Evaluate all five methods on one corpus");
    MethodFlags compare_flags;
    compare->add_option("--input", input, "Raw detections file")->required();
    compare->add_option("--truth", truth_path, "Ground-truth file")->required();
    compare->add_option("--output", output, "Write the table here instead of stdout");
    compare->add_option("--jobs", jobs, "Studies processed in parallel")->check(CLI::PositiveNumber);
    compare_flags.attach(compare, false);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Grid search tracker settings or tune the confidence threshold");
    MethodFlags sweep_flags;
    std::string kind = "grid";
    std::optional<std::string> activations, min_matches, buffers, thresholds, test_input, test_truth;
    sweep_cmd->add_option("--input", input, "Raw detections file")->required();
    sweep_cmd->add_option("--truth", truth_path, "Ground-truth file")->required();
    sweep_cmd->add_option("--output", output, "Write the table here instead of stdout");
    sweep_cmd->add_option("--jobs", jobs, "Grid points evaluated in parallel")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--kind", kind, "grid or threshold")
        ->check(CLI::IsMember({"grid", "threshold"}))
        ->capture_default_str();
    sweep_cmd->add_option("--activations", activations, "Comma list (default 0.20..1.00 step 0.05)");
    sweep_cmd->add_option("--min-matches", min_matches, "Comma list (default 0.50..1.00 step 0.05)");
    sweep_cmd->add_option("--buffers", buffers, "Comma list (default 3,5,7,9)");
    sweep_cmd->add_option("--thresholds", thresholds, "Comma list (default 0.05,0.10,0.20,...,0.80)");
    auto* test_in_opt = sweep_cmd->add_option("--test-input", test_input, "Held-out detections scored with every row");
    auto* test_truth_opt = sweep_cmd->add_option("--test-truth", test_truth, "Ground truth for --test-input");
    test_in_opt->needs(test_truth_opt);
    test_truth_opt->needs(test_in_opt);
    sweep_flags.attach(sweep_cmd);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
    std::uint64_t seed = 0;
    std::size_t studies = 20;
    synth::Params params;
    params.clutter_rate = 0.2;
    params.dropout = 0.1;
    std::string synth_truth;
    synth_cmd->add_option("--seed", seed, "Random seed")->required();
    synth_cmd->add_option("--output", output, "Detections file")->required();
    synth_cmd->add_option("--truth", synth_truth, "Ground-truth file")->required();
    synth_cmd->add_option("--studies", studies, "Number of studies")->capture_default_str();
    synth_cmd->add_option("--slices", params.slice_count, "Slices per study")->capture_default_str();
    synth_cmd->add_option("--lesions", params.lesion_count, "Lesions per study")->capture_default_str();
    synth_cmd->add_option("--span-min", params.span_min, "Shortest lesion run")->capture_default_str();
    synth_cmd->add_option("--span-max", params.span_max, "Longest lesion run")->capture_default_str();
    synth_cmd->add_option("--clutter-rate", params.clutter_rate, "Per-slice clutter probability")
        ->capture_default_str();
    synth_cmd->add_option("--dropout", params.dropout, "Per-box miss probability")->capture_default_str();
    synth_cmd->add_option("--jitter", params.jitter, "Coordinate jitter in pixels")->capture_default_str();
    synth_cmd->add_option("--score-min", params.score.lo, "Lowest lesion detection score")->capture_default_str();
    synth_cmd->add_option("--score-max", params.score.hi, "Highest lesion detection score")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (track->parsed()) {
            const MethodConfig config = track_flags.config();
            const Corpus corpus = io::read_file(input);
            const Corpus result = run_mode(corpus, config, jobs);
            emit(output, io::to_string(result, {std::string(to_string(config.mode)), true}));
        } else if (eval->parsed()) {
            const Corpus pred = io::read_file(input);
            const Corpus truth = io::read_file(truth_path, io::ScorePolicy::optional);
            const CorpusReport report = evaluate(pred, truth, jobs);
            tables::write_eval(std::cout, report);
            if (output) {
                nlohmann::json j;
                j["studies"] = nlohmann::json::array();
                for (const auto& s : report.studies) j["studies"].push_back(report_json(s));
                j["corpus"] = report_json(report.corpus);
                io::write_file_atomic(*output, j.dump(2) + "\n");
            }
        } else if (compare->parsed()) {
            const MethodConfig base = compare_flags.config();
            const Corpus corpus = io::read_file(input);
            const Corpus truth = io::read_file(truth_path, io::ScorePolicy::optional);
            std::vector<tables::MethodRow> rows;
            for (Mode m : {Mode::baseline, Mode::bytetrack, Mode::bidirectional, Mode::hybrid, Mode::spatiotemporal}) {
                MethodConfig c = base;
                c.mode = m;
                rows.push_back({c, evaluate(run_mode(corpus, c, jobs), truth, jobs).corpus});
            }
            std::ostringstream out;
            tables::write_methods(out, rows);
            emit(output, out.str());
        } else if (sweep_cmd->parsed()) {
            const MethodConfig base = sweep_flags.config();
            const Corpus corpus = io::read_file(input);
            const Corpus truth = io::read_file(truth_path, io::ScorePolicy::optional);
            std::optional<Corpus> test_dets, test_gt;
            if (test_input) {
                test_dets = io::read_file(*test_input);
                test_gt = io::read_file(*test_truth, io::ScorePolicy::optional);
            }
            auto held_out = [&](const auto& rows) {
                return test_dets ? sweep::evaluate_configs(sweep::configs_of(rows), *test_dets, *test_gt, jobs)
                                 : std::vector<EvalReport>{};
            };
            std::ostringstream out;
            if (kind == "grid") {
                sweep::Grid grid = sweep::Grid::standard();
                if (activations) grid.activation = parse_list(*activations);
                if (min_matches) grid.min_match = parse_list(*min_matches);
                if (buffers) {
                    grid.buffer.clear();
                    for (double b : parse_list(*buffers)) {
                        if (b < 1 || b != static_cast<double>(static_cast<std::size_t>(b))) {
                            throw std::invalid_argument("buffers must be positive integers");
                        }
                        grid.buffer.push_back(static_cast<std::size_t>(b));
                    }
                }
                const auto rows = sweep::grid_search(corpus, truth, grid, base, jobs);
                tables::write_grid(out, rows, held_out(rows));
            } else {
                const auto t = thresholds ? parse_list(*thresholds) : sweep::standard_thresholds();
                const auto rows = sweep::threshold_tune(corpus, truth, t, jobs);
                tables::write_thresholds(out, rows, held_out(rows));
            }
            emit(output, out.str());
        } else if (synth_cmd->parsed()) {
            const synth::SynthCorpus corpus = synth::generate_corpus(seed, params, studies);
            const std::string detections = io::to_string(corpus.detections(), {"synthetic-detections", true});
            const std::string truth = io::to_string(corpus.truth(), {"synthetic-truth", false});
            io::write_file_atomic(synth_truth, truth);
            io::write_file_atomic(*output, detections);
        }
    } catch (const std::exception& e) {
        std::cerr << "zslice: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

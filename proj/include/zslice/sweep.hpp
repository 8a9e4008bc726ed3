#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "zslice/metrics.hpp"
#include "zslice/parallel.hpp"
#include "zslice/pipeline.hpp"
#include "zslice/volume.hpp"

namespace zslice::sweep {

/// Values lo, lo+step, ..., hi in hundredths; built from integers so the
/// grid points are exactly k/100.
inline std::vector<double> hundredths(int lo, int hi, int step) {
    std::vector<double> v;
    for (int k = lo; k <= hi; k += step) v.push_back(static_cast<double>(k) / 100.0);
    return v;
}

struct Grid {
    std::vector<double> activation;
    std::vector<double> min_match;
    std::vector<std::size_t> buffer;

    std::size_t size() const noexcept { return activation.size() * min_match.size() * buffer.size(); }

    /// Activation 0.20..1.00 and min-match 0.50..1.00 in steps of 0.05
    /// (both ends inclusive), buffers {3, 5, 7, 9}: 17 x 11 x 4 points.
    static Grid standard() { return {hundredths(20, 100, 5), hundredths(50, 100, 5), {3, 5, 7, 9}}; }

    static Grid single(const TrackerConfig& c) { return {{c.track_activation}, {c.min_match}, {c.lost_buffer}}; }
};

struct GridRow {
    MethodConfig config;
    EvalReport report;
};

/// Strict weak order: F1 desc, recall desc, then activation, min-match and buffer ascending.
inline bool ranks_before(const GridRow& a, const GridRow& b) {
    if (a.report.f1 != b.report.f1) return a.report.f1 > b.report.f1;
    if (a.report.recall != b.report.recall) return a.report.recall > b.report.recall;
    const auto& ta = a.config.tracker;
    const auto& tb = b.config.tracker;
    if (ta.track_activation != tb.track_activation) return ta.track_activation < tb.track_activation;
    if (ta.min_match != tb.min_match) return ta.min_match < tb.min_match;
    return ta.lost_buffer < tb.lost_buffer;
}

/// Evaluates every grid point with `base` supplying the mode and the
/// non-tracker settings. Returns all points, best first.
inline std::vector<GridRow> grid_search(const Corpus& detections, const Corpus& truth, const Grid& grid,
                                        const MethodConfig& base, std::size_t jobs = 1) {
    if (grid.size() == 0) throw std::invalid_argument("grid_search: empty grid");
    if (truth.empty()) throw std::invalid_argument("grid_search: empty corpus");

    std::vector<MethodConfig> points;
    points.reserve(grid.size());
    for (double a : grid.activation) {
        for (double m : grid.min_match) {
            for (std::size_t b : grid.buffer) {
                MethodConfig c = base;
                c.tracker = TrackerConfig{a, m, b};
                c.validate();
                points.push_back(c);
            }
        }
    }

    std::vector<GridRow> rows(points.size());
    parallel_for(points.size(), jobs, [&](std::size_t i) {
        const Corpus out = run_mode(detections, points[i]);
        rows[i] = GridRow{points[i], evaluate(out, truth).corpus};
    });
    std::stable_sort(rows.begin(), rows.end(), ranks_before);
    return rows;
}

/// Baseline confidence thresholds 0.05, 0.10, 0.20, 0.30, ..., 0.80.
inline std::vector<double> standard_thresholds() {
    std::vector<double> t{0.05, 0.10};
    for (int k = 20; k <= 80; k += 10) t.push_back(static_cast<double>(k) / 100.0);
    return t;
}

struct ThresholdRow {
    double threshold;
    EvalReport report;
    bool best = false;
};

/// Baseline-mode evaluation at each threshold, rows ascending in threshold.
/// The first row attaining the maximum F1 is marked best.
inline std::vector<ThresholdRow> threshold_tune(const Corpus& detections, const Corpus& truth,
                                                std::vector<double> thresholds = standard_thresholds(),
                                                std::size_t jobs = 1) {
    if (thresholds.empty()) throw std::invalid_argument("threshold_tune: no thresholds");
    std::sort(thresholds.begin(), thresholds.end());

    std::vector<ThresholdRow> rows(thresholds.size());
    parallel_for(thresholds.size(), jobs, [&](std::size_t i) {
        MethodConfig c;
        c.mode = Mode::baseline;
        c.confidence = thresholds[i];
        c.validate();
        rows[i] = ThresholdRow{thresholds[i], evaluate(run_mode(detections, c), truth).corpus};
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].report.f1 > rows[best].report.f1) best = i;
    }
    rows[best].best = true;
    return rows;
}

/// Scores already-chosen configurations on a second corpus, e.g. settings
/// tuned on a training split applied to a test split. Result i belongs to configs[i].
inline std::vector<EvalReport> evaluate_configs(const std::vector<MethodConfig>& configs, const Corpus& detections,
                                                const Corpus& truth, std::size_t jobs = 1) {
    std::vector<EvalReport> out(configs.size());
    parallel_for(configs.size(), jobs,
                 [&](std::size_t i) { out[i] = evaluate(run_mode(detections, configs[i]), truth).corpus; });
    return out;
}

inline std::vector<MethodConfig> configs_of(const std::vector<GridRow>& rows) {
    std::vector<MethodConfig> c;
    for (const auto& r : rows) c.push_back(r.config);
    return c;
}

inline std::vector<MethodConfig> configs_of(const std::vector<ThresholdRow>& rows) {
    std::vector<MethodConfig> c;
    for (const auto& r : rows) {
        MethodConfig m;
        m.mode = Mode::baseline;
        m.confidence = r.threshold;
        c.push_back(m);
    }
    return c;
}

}  // namespace zslice::sweep

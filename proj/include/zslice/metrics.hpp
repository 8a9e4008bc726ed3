#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zslice/geometry.hpp"
#include "zslice/parallel.hpp"
#include "zslice/volume.hpp"

namespace zslice {

inline constexpr double kEvalIouThreshold = 0.5;

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend Counts operator+(Counts a, const Counts& b) { return a += b; }
    friend bool operator==(const Counts&, const Counts&) = default;
};

struct EvalReport {
    std::string scope;
    Counts counts;
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;

    /// With nothing predicted and nothing to find, all three metrics are 1;
    /// otherwise a 0/0 ratio is 0.
    static EvalReport from_counts(std::string scope, const Counts& c) {
        EvalReport r{std::move(scope), c};
        if (c.tp + c.fp + c.fn == 0) return r;
        r.precision = (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        r.recall = (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        r.f1 = f1_score(r.precision, r.recall);
        return r;
    }

    /// Harmonic mean; 0 when both inputs are 0.
    static double f1_score(double precision, double recall) {
        const double s = precision + recall;
        return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
    }
};

/// Greedy slice-level matching. Predictions are visited by descending score
/// (stable for ties); each takes the still-unmatched truth of highest IoU and
/// counts as TP only if that IoU strictly exceeds the threshold.
inline Counts match_slice(std::span<const Detection> predictions, std::span<const BoundingBox> truths,
                          double iou_threshold = kEvalIouThreshold) {
    std::vector<std::size_t> order(predictions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return predictions[a].score > predictions[b].score;
    });

    std::vector<char> taken(truths.size(), 0);
    Counts c;
    for (std::size_t p : order) {
        std::optional<std::size_t> best;
        double best_iou = -1.0;
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (taken[t]) continue;
            const double v = iou(predictions[p].box, truths[t]);
            if (v > best_iou) {
                best_iou = v;
                best = t;
            }
        }
        if (best && best_iou > iou_threshold) {
            taken[*best] = 1;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    c.fn = truths.size() - c.tp;
    return c;
}

inline Counts match_slice(std::span<const Detection> predictions, std::span<const Detection> truths,
                          double iou_threshold = kEvalIouThreshold) {
    std::vector<BoundingBox> boxes;
    boxes.reserve(truths.size());
    for (const auto& t : truths) boxes.push_back(t.box);
    return match_slice(predictions, std::span<const BoundingBox>(boxes), iou_threshold);
}

inline Counts count_volume(const VolumeDetections& pred, const VolumeDetections& truth,
                           double iou_threshold = kEvalIouThreshold) {
    if (pred.study_id() != truth.study_id()) {
        throw std::invalid_argument("study id mismatch: prediction '" + pred.study_id() + "' vs truth '" +
                                    truth.study_id() + "'");
    }
    if (pred.slice_count() != truth.slice_count()) {
        throw std::invalid_argument("slice count mismatch for study '" + truth.study_id() + "': prediction " +
                                    std::to_string(pred.slice_count()) + " vs truth " +
                                    std::to_string(truth.slice_count()));
    }
    Counts c;
    for (std::size_t z = 0; z < truth.slice_count(); ++z) {
        c += match_slice(std::span<const Detection>(pred.slice(z)), std::span<const Detection>(truth.slice(z)),
                         iou_threshold);
    }
    return c;
}

inline EvalReport evaluate(const VolumeDetections& pred, const VolumeDetections& truth,
                           double iou_threshold = kEvalIouThreshold) {
    return EvalReport::from_counts(truth.study_id(), count_volume(pred, truth, iou_threshold));
}

struct CorpusReport {
    std::vector<EvalReport> studies;  // truth order
    EvalReport corpus;
};

/// Pairs studies by id. Every truth study must have a prediction study and
/// vice versa; slice counts must agree.
inline CorpusReport evaluate(const Corpus& pred, const Corpus& truth, std::size_t jobs = 1,
                             double iou_threshold = kEvalIouThreshold) {
    std::map<std::string, std::size_t> pred_index;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!pred_index.emplace(pred[i].study_id(), i).second) {
            throw std::invalid_argument("duplicate prediction study '" + pred[i].study_id() + "'");
        }
    }
    std::map<std::string, std::size_t> truth_index;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth_index.emplace(truth[i].study_id(), i).second) {
            throw std::invalid_argument("duplicate truth study '" + truth[i].study_id() + "'");
        }
        if (!pred_index.contains(truth[i].study_id())) {
            throw std::invalid_argument("study '" + truth[i].study_id() + "' missing from predictions");
        }
    }
    for (const auto& p : pred) {
        if (!truth_index.contains(p.study_id())) {
            throw std::invalid_argument("study '" + p.study_id() + "' missing from ground truth");
        }
    }

    std::vector<Counts> per(truth.size());
    parallel_for(truth.size(), jobs, [&](std::size_t i) {
        per[i] = count_volume(pred[pred_index.at(truth[i].study_id())], truth[i], iou_threshold);
    });

    CorpusReport report;
    Counts total;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        report.studies.push_back(EvalReport::from_counts(truth[i].study_id(), per[i]));
        total += per[i];
    }
    report.corpus = EvalReport::from_counts("corpus", total);
    return report;
}

}  // namespace zslice

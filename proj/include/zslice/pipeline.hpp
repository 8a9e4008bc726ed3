#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zslice/bytetrack.hpp"
#include "zslice/geometry.hpp"
#include "zslice/parallel.hpp"
#include "zslice/volume.hpp"

namespace zslice {

/// The five evaluated post-processing methods.
enum class Mode { baseline, bytetrack, bidirectional, hybrid, spatiotemporal };

/// Which tracker output the hybrid union is built on.
enum class HybridBase { bidirectional, forward };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::baseline: return "baseline";
        case Mode::bytetrack: return "bytetrack";
        case Mode::bidirectional: return "bidirectional";
        case Mode::hybrid: return "hybrid";
        case Mode::spatiotemporal: return "spatiotemporal";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    for (Mode m : {Mode::baseline, Mode::bytetrack, Mode::bidirectional, Mode::hybrid, Mode::spatiotemporal}) {
        if (to_string(m) == s) return m;
    }
    throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

inline std::string_view to_string(HybridBase b) {
    return b == HybridBase::bidirectional ? "bidirectional" : "forward";
}

struct MethodConfig {
    Mode mode = Mode::hybrid;
    TrackerConfig tracker;
    /// Baseline/hybrid retention keeps scores strictly above this.
    double confidence = 0.20;
    /// Union merge collapses pairs with IoU >= dedup_iou.
    double dedup_iou = 0.7;
    HybridBase hybrid_base = HybridBase::bidirectional;
    /// Apply the baseline confidence cut before the spatiotemporal filter.
    bool spatiotemporal_confidence_cut = true;

    void validate() const {
        tracker.validate();
        if (!(confidence >= 0.0 && confidence <= 1.0)) throw std::invalid_argument("confidence must be in [0, 1]");
        if (!(dedup_iou >= 0.0 && dedup_iou <= 1.0)) throw std::invalid_argument("dedup_iou must be in [0, 1]");
    }

    friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

/// Raw detections with score strictly greater than `confidence`.
inline VolumeDetections baseline(const VolumeDetections& volume, double confidence) {
    VolumeDetections out = volume.empty_like();
    for (std::size_t z = 0; z < volume.slice_count(); ++z) {
        for (const auto& d : volume.slice(z)) {
            if (d.score > confidence) out.add(z, d);
        }
    }
    return out;
}

/// Reverses the slice order, tracks forward, and maps indices back (i -> N-1-i).
inline VolumeDetections run_backward(const VolumeDetections& volume, const TrackerConfig& config,
                                     TrackId first_id = 1) {
    const std::size_t n = volume.slice_count();
    VolumeDetections reversed = volume.empty_like();
    for (std::size_t z = 0; z < n; ++z) reversed.set_slice(n - 1 - z, volume.slice(z));

    const VolumeDetections tracked = run_forward(reversed, config, first_id);
    VolumeDetections out = volume.empty_like();
    for (std::size_t z = 0; z < n; ++z) out.set_slice(n - 1 - z, tracked.slice(z));
    return out;
}

/// Union of two same-slice lists with greedy suppression: candidates are
/// visited by descending score (ties keep `a` before `b`, then input order)
/// and a candidate is dropped when it has IoU >= dedup_iou with one already kept.
inline SliceDetections merge_dedup(const SliceDetections& a, const SliceDetections& b, double dedup_iou) {
    std::vector<const Detection*> candidates;
    candidates.reserve(a.size() + b.size());
    for (const auto& d : a) candidates.push_back(&d);
    for (const auto& d : b) candidates.push_back(&d);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Detection* x, const Detection* y) { return x->score > y->score; });

    SliceDetections kept;
    for (const Detection* c : candidates) {
        const bool duplicate = std::any_of(kept.begin(), kept.end(),
                                           [&](const Detection& k) { return iou(k.box, c->box) >= dedup_iou; });
        if (!duplicate) kept.push_back(*c);
    }
    return kept;
}

inline VolumeDetections merge_volumes(const VolumeDetections& a, const VolumeDetections& b, double dedup_iou) {
    if (a.slice_count() != b.slice_count()) throw std::invalid_argument("merge_volumes: slice count mismatch");
    VolumeDetections out = a.empty_like();
    for (std::size_t z = 0; z < a.slice_count(); ++z) out.set_slice(z, merge_dedup(a.slice(z), b.slice(z), dedup_iou));
    return out;
}

inline TrackId max_track_id(const VolumeDetections& volume) {
    TrackId m = 0;
    for (const auto& s : volume.slices()) {
        for (const auto& d : s) {
            if (d.track_id) m = std::max(m, *d.track_id);
        }
    }
    return m;
}

/// Slice-wise union of the forward and backward passes. Backward-pass ids
/// continue after the largest forward id so ids stay unique per volume.
inline VolumeDetections bidirectional(const VolumeDetections& volume, const TrackerConfig& config,
                                      double dedup_iou) {
    const VolumeDetections forward = run_forward(volume, config);
    const VolumeDetections backward = run_backward(volume, config, max_track_id(forward) + 1);
    return merge_volumes(forward, backward, dedup_iou);
}

/// Tracker output unioned with every raw detection scoring above the confidence floor.
inline VolumeDetections hybrid(const VolumeDetections& volume, const MethodConfig& config) {
    const VolumeDetections tracked = config.hybrid_base == HybridBase::bidirectional
                                         ? bidirectional(volume, config.tracker, config.dedup_iou)
                                         : run_forward(volume, config.tracker);
    return merge_volumes(tracked, baseline(volume, config.confidence), config.dedup_iou);
}

/// True iff `box` on slice z overlaps (IoU > 0) some box of `volume` on z-1 or z+1.
inline bool has_adjacent_support(const VolumeDetections& volume, std::size_t z, const BoundingBox& box) {
    auto overlaps = [&](std::size_t nz) {
        const auto& s = volume.slice(nz);
        return std::any_of(s.begin(), s.end(), [&](const Detection& o) { return iou(box, o.box) > 0.0; });
    };
    return (z > 0 && overlaps(z - 1)) || (z + 1 < volume.slice_count() && overlaps(z + 1));
}

/// Drops boxes with no overlapping box on an adjacent slice. Neighbours are
/// always read from the unfiltered input; a single-slice volume is returned as is.
inline VolumeDetections spatiotemporal_filter(const VolumeDetections& volume) {
    if (volume.slice_count() == 1) return volume;
    VolumeDetections out = volume.empty_like();
    for (std::size_t z = 0; z < volume.slice_count(); ++z) {
        for (const auto& d : volume.slice(z)) {
            if (has_adjacent_support(volume, z, d.box)) out.add(z, d);
        }
    }
    return out;
}

inline VolumeDetections run_mode(const VolumeDetections& volume, const MethodConfig& config) {
    switch (config.mode) {
        case Mode::baseline: return baseline(volume, config.confidence);
        case Mode::bytetrack: return run_forward(volume, config.tracker);
        case Mode::bidirectional: return bidirectional(volume, config.tracker, config.dedup_iou);
        case Mode::hybrid: return hybrid(volume, config);
        case Mode::spatiotemporal:
            return spatiotemporal_filter(config.spatiotemporal_confidence_cut ? baseline(volume, config.confidence)
                                                                              : volume);
    }
    throw std::logic_error("run_mode: unhandled mode");
}

/// Applies run_mode to every study; output order matches input regardless of `jobs`.
inline Corpus run_mode(const Corpus& corpus, const MethodConfig& config, std::size_t jobs = 1) {
    config.validate();
    std::vector<std::optional<VolumeDetections>> slots(corpus.size());
    parallel_for(corpus.size(), jobs, [&](std::size_t i) { slots[i] = run_mode(corpus[i], config); });
    Corpus out;
    out.reserve(corpus.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace zslice

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "zslice/geometry.hpp"
#include "zslice/pipeline.hpp"
#include "zslice/volume.hpp"

namespace zslice::synth {

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Range {
    double lo;
    double hi;
};

struct Params {
    std::size_t slice_count = 40;
    std::size_t lesion_count = 2;
    std::size_t span_min = 2;
    std::size_t span_max = 12;
    double image_size = 512.0;
    /// Width/height of a lesion at its widest slice.
    Range lesion_size{16.0, 48.0};
    /// Per-slice bound on center movement (each axis). Together with jitter it
    /// must stay below the smallest possible box side (profile_floor *
    /// lesion_size.lo) so consecutive truth boxes always overlap.
    double center_drift = 2.0;
    /// Per-slice bound on change of the widest-slice size (random walk, clamped to lesion_size).
    double size_drift = 1.0;
    /// Smallest fraction of full size at the ends of a lesion's run.
    double profile_floor = 0.4;
    Range score{0.195, 1.0};
    double dropout = 0.0;
    /// Per-slice probability of one clutter box.
    double clutter_rate = 0.0;
    Range clutter_score{0.05, 0.9};
    Range clutter_size{8.0, 32.0};
    /// Uniform per-coordinate perturbation of detection boxes, in pixels.
    double jitter = 1.0;
    std::size_t max_retries = 1000;

    void validate() const {
        auto fail = [](const std::string& m) { throw std::invalid_argument("synth params: " + m); };
        if (slice_count < 1) fail("slice_count must be >= 1");
        if (span_min < 1 || span_min > span_max) fail("need 1 <= span_min <= span_max");
        if (lesion_count > 0 && span_min > slice_count) fail("span_min exceeds slice_count");
        if (!(lesion_size.lo > 0 && lesion_size.lo <= lesion_size.hi)) fail("bad lesion_size range");
        if (!(clutter_size.lo > 0 && clutter_size.lo <= clutter_size.hi)) fail("bad clutter_size range");
        if (clutter_size.hi >= image_size) fail("clutter_size must fit in the image");
        if (!(profile_floor > 0 && profile_floor <= 1)) fail("profile_floor must be in (0, 1]");
        if (!(score.lo >= 0 && score.lo <= score.hi && score.hi <= 1)) fail("score range must lie in [0, 1]");
        if (!(clutter_score.lo >= 0 && clutter_score.lo <= clutter_score.hi && clutter_score.hi <= 1)) {
            fail("clutter_score range must lie in [0, 1]");
        }
        if (!(dropout >= 0 && dropout <= 1)) fail("dropout must be in [0, 1]");
        if (!(clutter_rate >= 0 && clutter_rate <= 1)) fail("clutter_rate must be in [0, 1]");
        if (center_drift < 0 || size_drift < 0 || jitter < 0) fail("drift and jitter must be non-negative");
        const double min_side = profile_floor * lesion_size.lo;
        if (!(center_drift + 2 * jitter < min_side)) {
            fail("center_drift + 2*jitter must be below profile_floor * lesion_size.lo");
        }
        if (max_retries < 1) fail("max_retries must be >= 1");
    }
};

/// Where a generated detection came from.
struct Origin {
    enum class Kind { lesion, clutter } kind;
    std::size_t lesion = 0;  // valid for Kind::lesion
};

struct Lesion {
    std::size_t first_slice;
    std::size_t span;
};

struct SynthVolume {
    VolumeDetections truth;
    VolumeDetections detections;
    /// origins[z][k] labels detections.slice(z)[k].
    std::vector<std::vector<Origin>> origins;
    std::vector<Lesion> lesions;
    std::size_t clutter_count = 0;
};

namespace detail {

// mt19937_64's output sequence is fixed by the standard; the distributions
// are not, so sampling is done here to stay reproducible across toolchains.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    double uniform(const Range& r) { return uniform(r.lo, r.hi); }
    bool bernoulli(double p) { return uniform01() < p; }
    /// Inclusive integer range.
    std::size_t index(std::size_t lo, std::size_t hi) {
        const std::uint64_t n = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::size_t>(engine_() % n);
    }

private:
    std::mt19937_64 engine_;
};

inline bool touches(const SliceDetections& slice, const BoundingBox& box) {
    return std::any_of(slice.begin(), slice.end(), [&](const Detection& d) { return iou(d.box, box) > 0.0; });
}

// True if `box` overlaps anything on slices z-1, z, z+1 of `v`.
inline bool touches_neighbourhood(const VolumeDetections& v, std::size_t z, const BoundingBox& box) {
    const std::size_t lo = z == 0 ? 0 : z - 1;
    const std::size_t hi = std::min(z + 1, v.slice_count() - 1);
    for (std::size_t k = lo; k <= hi; ++k) {
        if (touches(v.slice(k), box)) return true;
    }
    return false;
}

inline double profile(std::size_t k, std::size_t span, double floor) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(span) * 2.0 - 1.0;
    return std::max(floor, std::sqrt(std::max(0.0, 1.0 - t * t)));
}

}  // namespace detail

/// Generates one study: truth lesions as contiguous runs of drifting boxes,
/// detections as jittered, scored, randomly dropped copies, plus clutter boxes
/// that by construction overlap nothing on their own or adjacent slices.
inline SynthVolume generate_volume(std::uint64_t seed, const Params& params, std::string study_id = "synth") {
    params.validate();
    detail::Sampler rng(seed);
    const std::size_t n = params.slice_count;

    SynthVolume out{VolumeDetections(study_id, n), VolumeDetections(study_id, n),
                    std::vector<std::vector<Origin>>(n), {}, 0};

    const double margin = params.lesion_size.hi / 2.0 + static_cast<double>(params.span_max) * params.center_drift +
                          params.jitter + 1.0;
    if (2.0 * margin >= params.image_size) throw GenerationError("image too small for lesion size and drift");

    std::vector<std::vector<BoundingBox>> runs;
    for (std::size_t l = 0; l < params.lesion_count; ++l) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < params.max_retries && !placed; ++attempt) {
            const std::size_t span = rng.index(params.span_min, std::min(params.span_max, n));
            const std::size_t first = rng.index(0, n - span);
            double cx = rng.uniform(margin, params.image_size - margin);
            double cy = rng.uniform(margin, params.image_size - margin);
            double w = rng.uniform(params.lesion_size);
            double h = rng.uniform(params.lesion_size);

            std::vector<BoundingBox> run;
            for (std::size_t k = 0; k < span; ++k) {
                if (k > 0) {
                    cx += rng.uniform(-params.center_drift, params.center_drift);
                    cy += rng.uniform(-params.center_drift, params.center_drift);
                    w = std::clamp(w + rng.uniform(-params.size_drift, params.size_drift), params.lesion_size.lo,
                                   params.lesion_size.hi);
                    h = std::clamp(h + rng.uniform(-params.size_drift, params.size_drift), params.lesion_size.lo,
                                   params.lesion_size.hi);
                }
                const double f = detail::profile(k, span, params.profile_floor);
                run.push_back(BoundingBox::from_center(cx, cy, w * f, h * f));
            }

            // Distinct lesions stay apart on shared and adjacent slices.
            bool clear = true;
            for (std::size_t k = 0; k < span && clear; ++k) {
                clear = !detail::touches_neighbourhood(out.truth, first + k, run[k]);
            }
            if (!clear) continue;

            for (std::size_t k = 0; k < span; ++k) out.truth.add(first + k, Detection{run[k], 1.0, first + k, {}});
            out.lesions.push_back({first, span});
            runs.push_back(std::move(run));
            placed = true;
        }
        if (!placed) throw GenerationError("could not place lesion " + std::to_string(l) + " without overlap");
    }

    for (std::size_t l = 0; l < runs.size(); ++l) {
        const Lesion& les = out.lesions[l];
        for (std::size_t k = 0; k < les.span; ++k) {
            const std::size_t z = les.first_slice + k;
            if (rng.bernoulli(params.dropout)) continue;
            const BoundingBox& t = runs[l][k];
            const double j = params.jitter;
            const BoundingBox box(t.x1() + rng.uniform(-j, j), t.y1() + rng.uniform(-j, j), t.x2() + rng.uniform(-j, j),
                                  t.y2() + rng.uniform(-j, j));
            out.detections.add(z, Detection{box, rng.uniform(params.score), z, {}});
            out.origins[z].push_back({Origin::Kind::lesion, l});
        }
    }

    for (std::size_t z = 0; z < n; ++z) {
        if (!rng.bernoulli(params.clutter_rate)) continue;
        bool placed = false;
        for (std::size_t attempt = 0; attempt < params.max_retries && !placed; ++attempt) {
            const double w = rng.uniform(params.clutter_size);
            const double h = rng.uniform(params.clutter_size);
            const double x1 = rng.uniform(0.0, params.image_size - w);
            const double y1 = rng.uniform(0.0, params.image_size - h);
            const BoundingBox box(x1, y1, x1 + w, y1 + h);
            if (detail::touches_neighbourhood(out.truth, z, box) ||
                detail::touches_neighbourhood(out.detections, z, box)) {
                continue;
            }
            out.detections.add(z, Detection{box, rng.uniform(params.clutter_score), z, {}});
            out.origins[z].push_back({Origin::Kind::clutter, 0});
            ++out.clutter_count;
            placed = true;
        }
        if (!placed) {
            throw GenerationError("could not place isolated clutter on slice " + std::to_string(z) + " after " +
                                  std::to_string(params.max_retries) + " attempts");
        }
    }

    for (std::size_t z = 0; z < n; ++z) {
        const auto& dets = out.detections.slice(z);
        for (std::size_t k = 0; k < dets.size(); ++k) {
            if (out.origins[z][k].kind == Origin::Kind::clutter && has_adjacent_support(out.detections, z, dets[k].box)) {
                throw std::logic_error("synth: clutter box on slice " + std::to_string(z) + " is not isolated");
            }
        }
    }
    for (std::size_t l = 0; l < runs.size(); ++l) {
        const Lesion& les = out.lesions[l];
        if (les.span < 2) continue;
        for (std::size_t k = 0; k < les.span; ++k) {
            if (!has_adjacent_support(out.truth, les.first_slice + k, runs[l][k])) {
                throw std::logic_error("synth: lesion " + std::to_string(l) + " is discontinuous");
            }
        }
    }
    return out;
}

/// Seed for study `index` of a corpus generated from `seed` (splitmix64 step).
inline std::uint64_t study_seed(std::uint64_t seed, std::size_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::string study_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "synth-%04zu", index);
    return buf;
}

struct SynthCorpus {
    std::vector<SynthVolume> volumes;

    Corpus truth() const {
        Corpus c;
        for (const auto& v : volumes) c.push_back(v.truth);
        return c;
    }
    Corpus detections() const {
        Corpus c;
        for (const auto& v : volumes) c.push_back(v.detections);
        return c;
    }
};

inline SynthCorpus generate_corpus(std::uint64_t seed, const Params& params, std::size_t studies) {
    SynthCorpus c;
    c.volumes.reserve(studies);
    for (std::size_t i = 0; i < studies; ++i) c.volumes.push_back(generate_volume(study_seed(seed, i), params, study_name(i)));
    return c;
}

}  // namespace zslice::synth

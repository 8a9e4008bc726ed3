#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zslice/geometry.hpp"

namespace zslice {

using TrackId = std::uint64_t;

/// One detector (or tracker) box on one slice.
struct Detection {
    BoundingBox box;
    double score = 1.0;
    std::size_t slice_index = 0;
    std::optional<TrackId> track_id;

    friend bool operator==(const Detection&, const Detection&) = default;
};

using SliceDetections = std::vector<Detection>;

/// A study's detections ordered along z; slice i holds boxes with slice_index i.
class VolumeDetections {
public:
    VolumeDetections(std::string study_id, std::size_t slice_count)
        : study_id_(std::move(study_id)), slices_(slice_count) {
        if (slice_count == 0) throw std::invalid_argument("VolumeDetections: slice_count must be >= 1");
    }

    const std::string& study_id() const noexcept { return study_id_; }
    std::size_t slice_count() const noexcept { return slices_.size(); }

    const SliceDetections& slice(std::size_t z) const { return slices_.at(z); }
    const std::vector<SliceDetections>& slices() const noexcept { return slices_; }

    /// Appends a detection, overwriting its slice_index with z.
    void add(std::size_t z, Detection det) {
        det.slice_index = z;
        slices_.at(z).push_back(std::move(det));
    }

    /// Replaces slice z wholesale; slice indices are normalized to z.
    void set_slice(std::size_t z, SliceDetections dets) {
        for (auto& d : dets) d.slice_index = z;
        slices_.at(z) = std::move(dets);
    }

    /// Same study and slice count, no detections.
    VolumeDetections empty_like() const { return {study_id_, slice_count()}; }

    std::size_t total_boxes() const noexcept {
        std::size_t n = 0;
        for (const auto& s : slices_) n += s.size();
        return n;
    }

    friend bool operator==(const VolumeDetections&, const VolumeDetections&) = default;

private:
    std::string study_id_;
    std::vector<SliceDetections> slices_;
};

using Corpus = std::vector<VolumeDetections>;

}  // namespace zslice

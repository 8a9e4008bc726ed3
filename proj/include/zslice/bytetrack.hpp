#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zslice/assignment.hpp"
#include "zslice/geometry.hpp"
#include "zslice/kalman.hpp"
#include "zslice/volume.hpp"

namespace zslice {

struct TrackerConfig {
    /// Score splitting high from low detections; also the spawn threshold.
    double track_activation = 0.35;
    /// Association gate in cost space: a pair is admissible iff 1 - IoU <= min_match.
    double min_match = 0.95;
    /// Consecutive unmatched slices a lost track survives.
    std::size_t lost_buffer = 5;

    void validate() const {
        if (!(track_activation >= 0.0 && track_activation <= 1.0)) {
            throw std::invalid_argument("track_activation must be in [0, 1]");
        }
        if (!(min_match >= 0.0 && min_match <= 1.0)) throw std::invalid_argument("min_match must be in [0, 1]");
        if (lost_buffer < 1) throw std::invalid_argument("lost_buffer must be >= 1");
    }

    friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

enum class TrackStatus { tentative, active, lost, removed };

inline const char* to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::tentative: return "tentative";
        case TrackStatus::active: return "active";
        case TrackStatus::lost: return "lost";
        case TrackStatus::removed: return "removed";
    }
    return "?";
}

struct TrackObservation {
    std::size_t slice_index;
    BoundingBox box;
    double score;
};

struct Track {
    TrackId id;
    kalman::KalmanState state;
    TrackStatus status;
    double score;
    std::size_t frames_since_update = 0;
    std::vector<TrackObservation> history;  // matched slices only

    /// Kalman mean as a box, or nullopt when the mean is not a valid box
    /// (e.g. height driven through zero while coasting).
    std::optional<BoundingBox> predicted_box() const {
        const double a = state.aspect();
        const double h = state.height();
        const double w = a * h;
        if (!(a > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(state.center_x()) ||
            !std::isfinite(state.center_y())) {
            return std::nullopt;
        }
        return BoundingBox::from_center(state.center_x(), state.center_y(), w, h);
    }
};

struct ScoreSplit {
    std::vector<std::size_t> high;  // score >= activation
    std::vector<std::size_t> low;   // 0 < score < activation
};

/// Partitions detection indices by score; zero-score detections join neither group.
inline ScoreSplit split_by_score(std::span<const Detection> detections, double activation) {
    ScoreSplit split;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        const double s = detections[d].score;
        if (s >= activation) {
            split.high.push_back(d);
        } else if (s > 0.0) {
            split.low.push_back(d);
        }
    }
    return split;
}

/// Single-direction two-stage ByteTrack association over a slice sequence.
class Tracker {
public:
    explicit Tracker(TrackerConfig config, TrackId first_id = 1) : config_(config), next_id_(first_id) {
        config_.validate();
    }

    const TrackerConfig& config() const noexcept { return config_; }
    /// Live (not removed) tracks in creation order.
    const std::vector<Track>& tracks() const noexcept { return tracks_; }
    std::size_t steps() const noexcept { return steps_; }
    TrackId next_id() const noexcept { return next_id_; }

    /// Advances one slice. Returns the boxes of tracks matched or confirmed on
    /// this slice, each carrying its track id; boxes and scores are the
    /// matched detections, never Kalman estimates.
    std::vector<Detection> step(std::size_t slice_index, std::span<const Detection> detections) {
        const bool first_slice = (steps_ == 0);
        ++steps_;

        for (auto& t : tracks_) {
            if (t.status != TrackStatus::active) t.state.mean(7) = 0.0;
            t.state = kalman::predict(t.state);
            ++t.frames_since_update;
        }

        auto [high, low] = split_by_score(detections, config_.track_activation);

        std::vector<char> matched_track(tracks_.size(), 0);
        std::vector<Detection> reported;

        // Stage 1: active and lost tracks against high detections.
        std::vector<std::size_t> pool;
        for (std::size_t t = 0; t < tracks_.size(); ++t) {
            if (tracks_[t].status == TrackStatus::active || tracks_[t].status == TrackStatus::lost) pool.push_back(t);
        }
        high = associate(pool, high, detections, slice_index, matched_track, reported);

        // Stage 2: still-unmatched active tracks against low detections.
        std::vector<std::size_t> active_rest;
        for (std::size_t t : pool) {
            if (!matched_track[t] && tracks_[t].status == TrackStatus::active) active_rest.push_back(t);
        }
        associate(active_rest, low, detections, slice_index, matched_track, reported);

        // Tentative tracks confirm against the leftover high detections.
        std::vector<std::size_t> tentative;
        for (std::size_t t = 0; t < tracks_.size(); ++t) {
            if (tracks_[t].status == TrackStatus::tentative) tentative.push_back(t);
        }
        high = associate(tentative, high, detections, slice_index, matched_track, reported);

        for (std::size_t t = 0; t < tracks_.size(); ++t) {
            if (matched_track[t]) continue;
            Track& tr = tracks_[t];
            if (tr.status == TrackStatus::tentative) {
                tr.status = TrackStatus::removed;
            } else if (tr.status == TrackStatus::active) {
                tr.status = TrackStatus::lost;
            }
            if (tr.status == TrackStatus::lost && tr.frames_since_update > config_.lost_buffer) {
                tr.status = TrackStatus::removed;
            }
        }
        std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::removed; });

        for (std::size_t d : high) {
            const Detection& det = detections[d];
            Track tr{next_id_++, kalman::initiate(det.box),
                     first_slice ? TrackStatus::active : TrackStatus::tentative, det.score, 0,
                     {{slice_index, det.box, det.score}}};
            if (first_slice) reported.push_back(report(tr, det, slice_index));
            tracks_.push_back(std::move(tr));
        }
        return reported;
    }

private:
    static Detection report(const Track& t, const Detection& det, std::size_t slice_index) {
        return Detection{det.box, det.score, slice_index, t.id};
    }

    // Solves one association stage; matched tracks are updated and reported.
    // Returns the detection indices left unmatched.
    std::vector<std::size_t> associate(const std::vector<std::size_t>& track_idx,
                                       const std::vector<std::size_t>& det_idx,
                                       std::span<const Detection> detections, std::size_t slice_index,
                                       std::vector<char>& matched_track, std::vector<Detection>& reported) {
        if (track_idx.empty() || det_idx.empty()) return det_idx;

        Matrix cost(track_idx.size(), det_idx.size(), 1.0);
        for (std::size_t i = 0; i < track_idx.size(); ++i) {
            const auto pred = tracks_[track_idx[i]].predicted_box();
            if (!pred) continue;
            for (std::size_t j = 0; j < det_idx.size(); ++j) {
                cost(i, j) = 1.0 - iou(*pred, detections[det_idx[j]].box);
            }
        }

        const auto result = assignment::solve(cost, config_.min_match);
        for (const auto& m : result.matches) {
            Track& tr = tracks_[track_idx[m.row]];
            const Detection& det = detections[det_idx[m.col]];
            tr.state = kalman::update(tr.state, det.box);
            tr.status = TrackStatus::active;
            tr.score = det.score;
            tr.frames_since_update = 0;
            tr.history.push_back({slice_index, det.box, det.score});
            matched_track[track_idx[m.row]] = 1;
            reported.push_back(report(tr, det, slice_index));
        }

        std::vector<std::size_t> left;
        for (std::size_t j : result.unmatched_cols) left.push_back(det_idx[j]);
        return left;
    }

    TrackerConfig config_;
    TrackId next_id_;
    std::size_t steps_ = 0;
    std::vector<Track> tracks_;
};

/// Runs a fresh tracker over slices 0..N-1. Output slice z holds exactly the
/// boxes reported at z.
inline VolumeDetections run_forward(const VolumeDetections& volume, const TrackerConfig& config,
                                    TrackId first_id = 1) {
    Tracker tracker(config, first_id);
    VolumeDetections out = volume.empty_like();
    for (std::size_t z = 0; z < volume.slice_count(); ++z) {
        out.set_slice(z, tracker.step(z, volume.slice(z)));
    }
    return out;
}

}  // namespace zslice

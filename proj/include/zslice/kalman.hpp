#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <utility>

#include "zslice/geometry.hpp"

namespace zslice::kalman {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateMatrix = Eigen::Matrix<double, 8, 8>;
using MeasurementVector = Eigen::Matrix<double, 4, 1>;
using MeasurementMatrix = Eigen::Matrix<double, 4, 4>;

// Noise weights relative to box height.
inline constexpr double kPositionWeight = 1.0 / 20.0;
inline constexpr double kVelocityWeight = 1.0 / 160.0;
// Aspect-ratio noise is absolute (the ratio is dimensionless).
inline constexpr double kAspectInitStd = 1e-2;
inline constexpr double kAspectVelocityInitStd = 1e-5;
inline constexpr double kAspectProcessStd = 1e-2;
inline constexpr double kAspectVelocityProcessStd = 1e-5;
inline constexpr double kAspectMeasurementStd = 1e-1;

/// Constant-velocity state over (cx, cy, aspect, height) and their per-slice rates.
struct KalmanState {
    StateVector mean;
    StateMatrix covariance;

    double center_x() const { return mean(0); }
    double center_y() const { return mean(1); }
    double aspect() const { return mean(2); }
    double height() const { return mean(3); }

    /// Corner-form box for the mean. Throws if the mean has degenerated
    /// (non-positive height or aspect).
    BoundingBox box() const {
        const double w = mean(2) * mean(3);
        return BoundingBox::from_center(mean(0), mean(1), w, mean(3));
    }
};

inline MeasurementVector to_measurement(const BoundingBox& box) {
    MeasurementVector z;
    z << box.center_x(), box.center_y(), box.width() / box.height(), box.height();
    return z;
}

inline KalmanState initiate(const BoundingBox& box) {
    const MeasurementVector z = to_measurement(box);
    KalmanState s;
    s.mean.setZero();
    s.mean.head<4>() = z;

    const double h = z(3);
    StateVector std;
    std << 2 * kPositionWeight * h, 2 * kPositionWeight * h, kAspectInitStd, 2 * kPositionWeight * h,
        10 * kVelocityWeight * h, 10 * kVelocityWeight * h, kAspectVelocityInitStd, 10 * kVelocityWeight * h;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
}

namespace detail {

inline StateMatrix transition() {
    StateMatrix f = StateMatrix::Identity();
    for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
    return f;
}

inline StateMatrix symmetrized(const StateMatrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

inline KalmanState predict(const KalmanState& state) {
    const double h = state.mean(3);
    StateVector std;
    std << kPositionWeight * h, kPositionWeight * h, kAspectProcessStd, kPositionWeight * h,
        kVelocityWeight * h, kVelocityWeight * h, kAspectVelocityProcessStd, kVelocityWeight * h;
    const StateMatrix process_noise = std.array().square().matrix().asDiagonal();

    static const StateMatrix f = detail::transition();
    KalmanState out;
    out.mean = f * state.mean;
    out.covariance = detail::symmetrized(f * state.covariance * f.transpose() + process_noise);
    return out;
}

/// Projected measurement distribution: observed block of the mean plus
/// measurement noise added to the observed covariance block.
inline std::pair<MeasurementVector, MeasurementMatrix> project(const KalmanState& state) {
    const double h = state.mean(3);
    MeasurementVector std;
    std << kPositionWeight * h, kPositionWeight * h, kAspectMeasurementStd, kPositionWeight * h;
    const MeasurementMatrix noise = std.array().square().matrix().asDiagonal();
    return {state.mean.head<4>(), state.covariance.topLeftCorner<4, 4>() + noise};
}

inline KalmanState update(const KalmanState& state, const BoundingBox& measurement) {
    const auto [projected_mean, projected_cov] = project(state);

    // Observation matrix is [I 0], so P H^T is the left 8x4 block of P.
    const Eigen::Matrix<double, 8, 4> pht = state.covariance.leftCols<4>();
    const Eigen::LLT<MeasurementMatrix> chol(projected_cov);
    const Eigen::Matrix<double, 8, 4> gain = chol.solve(pht.transpose()).transpose();

    const MeasurementVector innovation = to_measurement(measurement) - projected_mean;
    KalmanState out;
    out.mean = state.mean + gain * innovation;
    out.covariance = detail::symmetrized(state.covariance - gain * projected_cov * gain.transpose());
    return out;
}

}  // namespace zslice::kalman

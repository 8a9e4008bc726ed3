#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "zslice/matrix.hpp"

namespace zslice {

/// Axis-aligned box in corner form (x1, y1) top-left, (x2, y2) bottom-right.
///
/// Construction rejects non-finite coordinates and boxes with zero or negative
/// width/height, so every live BoundingBox has a strictly positive area.
class BoundingBox {
public:
    BoundingBox(double x1, double y1, double x2, double y2)
        : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
        if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
            throw std::invalid_argument("BoundingBox: non-finite coordinate");
        }
        if (!(x1 < x2) || !(y1 < y2)) {
            throw std::invalid_argument("BoundingBox: requires x1 < x2 and y1 < y2, got (" +
                                        std::to_string(x1) + ", " + std::to_string(y1) + ", " +
                                        std::to_string(x2) + ", " + std::to_string(y2) + ")");
        }
    }

    static BoundingBox from_center(double cx, double cy, double width, double height) {
        return {cx - width / 2.0, cy - height / 2.0, cx + width / 2.0, cy + height / 2.0};
    }

    double x1() const noexcept { return x1_; }
    double y1() const noexcept { return y1_; }
    double x2() const noexcept { return x2_; }
    double y2() const noexcept { return y2_; }

    double width() const noexcept { return x2_ - x1_; }
    double height() const noexcept { return y2_ - y1_; }
    double area() const noexcept { return width() * height(); }
    double center_x() const noexcept { return (x1_ + x2_) / 2.0; }
    double center_y() const noexcept { return (y1_ + y2_) / 2.0; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

    /// Lexicographic on (x1, y1, x2, y2).
    friend bool lexicographic_less(const BoundingBox& a, const BoundingBox& b) noexcept {
        if (a.x1_ != b.x1_) return a.x1_ < b.x1_;
        if (a.y1_ != b.y1_) return a.y1_ < b.y1_;
        if (a.x2_ != b.x2_) return a.x2_ < b.x2_;
        return a.y2_ < b.y2_;
    }

private:
    double x1_;
    double y1_;
    double x2_;
    double y2_;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

/// Intersection over union, in [0, 1]. Symmetric in its arguments.
inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

/// Entry (i, j) is iou(rows[i], cols[j]).
inline Matrix iou_matrix(std::span<const BoundingBox> rows, std::span<const BoundingBox> cols) {
    Matrix m(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            m(r, c) = iou(rows[r], cols[c]);
        }
    }
    return m;
}

}  // namespace zslice

#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mhsm/geometry.hpp"
#include "mhsm/kdtree.hpp"

namespace mhsm {

/// One range reading: distance in meters, beam angle in radians
/// (sensor frame).
struct PolarReading {
    double range = 0.0;
    double angle = 0.0;
};

/// A sweep of range readings. Beam angles must be strictly increasing and
/// every range must lie in [0, max_range].
struct PolarScan {
    std::vector<PolarReading> readings;
    double max_range = 0.0;
};

/// Throws std::invalid_argument if `scan` violates the PolarScan invariants.
inline void validate(const PolarScan& scan) {
    for (std::size_t i = 0; i < scan.readings.size(); ++i) {
        const PolarReading& r = scan.readings[i];
        if (!(r.range >= 0.0) || !(r.range <= scan.max_range)) {
            throw std::invalid_argument("PolarScan: range outside [0, max_range]");
        }
        if (i > 0 && !(r.angle > scan.readings[i - 1].angle)) {
            throw std::invalid_argument("PolarScan: beam angles not strictly increasing");
        }
    }
}

/// Planar point form of a scan with a spatial index for neighbor queries.
/// Immutable after construction; concurrent read-only queries are safe.
class CartesianScan {
public:
    CartesianScan() = default;

    explicit CartesianScan(std::vector<Point2> points)
        : points_(std::move(points)), index_(points_) {}

    const std::vector<Point2>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    /// Points q with d_min < |q - p| < d_max (both bounds strict), ascending
    /// by point index. May be empty.
    std::vector<Point2> neighbor_set(const Point2& p, double d_min, double d_max) const {
        if (!(d_min > 0.0) || !(d_min < d_max)) {
            throw std::invalid_argument("neighbor_set requires 0 < d_min < d_max");
        }
        const double d_min_sq = d_min * d_min;
        std::vector<Point2> out;
        for (std::size_t i : index_.radius_search(p, d_max)) {
            if (distance_sq(p, points_[i]) > d_min_sq) out.push_back(points_[i]);
        }
        return out;
    }

    /// The min(k, size) points closest to p, ascending by distance; ties
    /// broken toward the lower point index.
    std::vector<Point2> k_nearest(const Point2& p, std::size_t k) const {
        std::vector<Point2> out;
        for (std::size_t i : index_.knn(p, k)) out.push_back(points_[i]);
        return out;
    }

    /// Closest point to p. The scan must be non-empty.
    const Point2& nearest(const Point2& p) const {
        if (empty()) throw std::logic_error("nearest() on empty scan");
        return points_[index_.nearest(p)];
    }

    /// Squared distance from p to the closest scan point.
    double nearest_dist_sq(const Point2& p) const { return index_.nearest_dist_sq(p); }

private:
    std::vector<Point2> points_;
    KdTree2 index_;
};

/// Convert a polar scan to Cartesian points via d * (cos a, sin a).
/// Readings with d >= max_range carry no surface evidence and are dropped
/// when `drop_max_range` is set.
inline CartesianScan polar_to_cartesian(const PolarScan& scan, bool drop_max_range = true) {
    validate(scan);
    std::vector<Point2> points;
    points.reserve(scan.readings.size());
    for (const PolarReading& r : scan.readings) {
        if (drop_max_range && r.range >= scan.max_range) continue;
        points.push_back({r.range * std::cos(r.angle), r.range * std::sin(r.angle)});
    }
    return CartesianScan(std::move(points));
}

}  // namespace mhsm

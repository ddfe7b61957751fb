#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mhsm/geometry.hpp"
#include "mhsm/scan.hpp"

namespace mhsm {

struct IterativeParams {
    std::size_t max_iterations = 50;
    double correspondence_cutoff = 1.0;        // meters
    double convergence_eps_t = 1e-4;           // meters
    double convergence_eps_r = 1e-4;           // radians
    double angular_window = 20.0 * kPi / 180.0;  // radians, IMRP search window
};

inline void validate(const IterativeParams& p) {
    if (p.max_iterations < 1 || !(p.correspondence_cutoff > 0.0) ||
        !(p.convergence_eps_t > 0.0) || !(p.convergence_eps_r > 0.0) ||
        !(p.angular_window > 0.0)) {
        throw std::invalid_argument("IterativeParams: non-positive parameter");
    }
}

/// Outcome of an iterative matcher. `degraded` is set when an iteration found
/// no usable correspondences and the initial guess was returned instead.
struct IterativeResult {
    Transform2 transform;
    bool degraded = false;
    std::size_t iterations = 0;
};

using PointPair = std::pair<Point2, Point2>;  // (current point, reference point)

/// Closed-form least-squares rigid transform taking the first points of
/// `pairs` onto the second, via cross-correlation of the centered sets.
inline Transform2 estimate_rigid_transform(const std::vector<PointPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("estimate_rigid_transform: no pairs");
    Point2 ca{0.0, 0.0}, cb{0.0, 0.0};
    for (const PointPair& pr : pairs) {
        ca = ca + pr.first;
        cb = cb + pr.second;
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    ca = ca * inv;
    cb = cb * inv;
    double num = 0.0, den = 0.0;
    for (const PointPair& pr : pairs) {
        const Point2 a = pr.first - ca;
        const Point2 b = pr.second - cb;
        num += a.cross(b);  // a_x b_y - a_y b_x
        den += a.dot(b);
    }
    const double theta = (num == 0.0 && den == 0.0) ? 0.0 : std::atan2(num, den);
    return {cb - rotate(ca, theta), theta};
}

namespace detail {

inline std::vector<PointPair> closest_point_pairs(const CartesianScan& current,
                                                  const CartesianScan& reference,
                                                  const Transform2& estimate,
                                                  double cutoff) {
    std::vector<PointPair> pairs;
    pairs.reserve(current.size());
    const double cutoff_sq = cutoff * cutoff;
    for (const Point2& p : current.points()) {
        const Point2 tp = apply_transform(estimate, p);
        const Point2& q = reference.nearest(tp);
        if (distance_sq(tp, q) < cutoff_sq) pairs.emplace_back(p, q);
    }
    return pairs;
}

inline bool converged(const Transform2& prev, const Transform2& next,
                      const IterativeParams& params) {
    return distance(prev.translation, next.translation) < params.convergence_eps_t &&
           std::abs(angle_diff(prev.rotation, next.rotation)) < params.convergence_eps_r;
}

// Reference points sorted by polar angle, for windowed range matching.
struct PolarIndex {
    std::vector<double> angles;  // ascending
    std::vector<double> ranges;
    std::vector<std::size_t> order;

    explicit PolarIndex(const CartesianScan& scan) {
        const std::size_t n = scan.size();
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::vector<double> raw_angle(n), raw_range(n);
        for (std::size_t i = 0; i < n; ++i) {
            raw_angle[i] = std::atan2(scan.points()[i].y, scan.points()[i].x);
            raw_range[i] = scan.points()[i].norm();
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return raw_angle[a] < raw_angle[b] || (raw_angle[a] == raw_angle[b] && a < b);
        });
        angles.resize(n);
        ranges.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            angles[i] = raw_angle[order[i]];
            ranges[i] = raw_range[order[i]];
        }
    }

    // Sorted-order position of the best range match inside the wrapped angle
    // window, or npos. Exact range ties are structural here (the range to a
    // straight wall is symmetric about its perpendicular foot), so ties
    // resolve toward the angularly closest point.
    std::size_t best_in_window(double angle, double window, double range) const {
        std::size_t best = npos;
        double best_err = 0.0;
        double best_ang = 0.0;
        const auto consider = [&](std::size_t first, std::size_t last) {
            for (std::size_t i = first; i < last; ++i) {
                const double err = std::abs(ranges[i] - range);
                const double ang = std::abs(angle_diff(angles[i], angle));
                if (best == npos || err < best_err || (err == best_err && ang < best_ang) ||
                    (err == best_err && ang == best_ang && order[i] < order[best])) {
                    best = i;
                    best_err = err;
                    best_ang = ang;
                }
            }
        };
        // window bounds are strict: a zero window matches nothing
        const auto above = [&](double v) {
            return static_cast<std::size_t>(
                std::upper_bound(angles.begin(), angles.end(), v) - angles.begin());
        };
        const auto below = [&](double v) {
            return static_cast<std::size_t>(
                std::lower_bound(angles.begin(), angles.end(), v) - angles.begin());
        };
        const double lo = angle - window;
        const double hi = angle + window;
        if (window >= kPi) {
            consider(0, angles.size());
        } else if (lo < -kPi) {
            // window crosses the +-pi seam; the seam itself is interior to
            // the window, so the stitched spans keep their seam endpoints
            consider(0, below(hi));                    // [-pi, hi)
            consider(above(lo + 2.0 * kPi), angles.size());  // (lo+2pi, pi]
        } else if (hi > kPi) {
            consider(above(lo), angles.size());        // (lo, pi]
            consider(0, below(hi - 2.0 * kPi));        // [-pi, hi-2pi)
        } else {
            consider(above(lo), below(hi));
        }
        return best;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

}  // namespace detail

/// Classic point-to-point ICP: closest-point correspondences under the
/// current estimate (beyond-cutoff pairs discarded), closed-form rigid fit,
/// iterate until the estimate shift drops below the convergence thresholds.
inline IterativeResult icp_match(const CartesianScan& current, const CartesianScan& reference,
                                 const Transform2& init, const IterativeParams& params) {
    validate(params);
    if (current.empty() || reference.empty()) {
        throw std::invalid_argument("icp_match: empty scan");
    }
    IterativeResult result{init, false, 0};
    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
        const std::vector<PointPair> pairs = detail::closest_point_pairs(
            current, reference, result.transform, params.correspondence_cutoff);
        if (pairs.empty()) return {init, true, iter};
        const Transform2 next = estimate_rigid_transform(pairs);
        const bool done = detail::converged(result.transform, next, params);
        result.transform = next;
        result.iterations = iter + 1;
        if (done) break;
    }
    return result;
}

/// Matching-range correspondences: each current point (under `estimate`)
/// pairs with the reference point inside the angular window whose range is
/// most similar. Points with an empty window are skipped. Pairs carry the
/// untransformed current point.
inline std::vector<PointPair> imrp_correspondence(const CartesianScan& current,
                                                  const CartesianScan& reference,
                                                  const Transform2& estimate,
                                                  double angular_window) {
    if (current.empty() || reference.empty()) {
        throw std::invalid_argument("imrp_correspondence: empty scan");
    }
    const detail::PolarIndex index(reference);
    std::vector<PointPair> pairs;
    pairs.reserve(current.size());
    for (const Point2& p : current.points()) {
        const Point2 tp = apply_transform(estimate, p);
        const double angle = std::atan2(tp.y, tp.x);
        const double range = tp.norm();
        const std::size_t pos = index.best_in_window(angle, angular_window, range);
        if (pos == detail::PolarIndex::npos) continue;
        pairs.emplace_back(p, reference.points()[index.order[pos]]);
    }
    return pairs;
}

/// Iterative Dual Correspondence: per iteration the translation comes from
/// the closest-point solve and the rotation from the matching-range solve,
/// fixing ICP's weak rotation estimates.
inline IterativeResult idc_match(const CartesianScan& current, const CartesianScan& reference,
                                 const Transform2& init, const IterativeParams& params) {
    validate(params);
    if (current.empty() || reference.empty()) {
        throw std::invalid_argument("idc_match: empty scan");
    }
    IterativeResult result{init, false, 0};
    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
        const std::vector<PointPair> icp_pairs = detail::closest_point_pairs(
            current, reference, result.transform, params.correspondence_cutoff);
        const std::vector<PointPair> imrp_pairs =
            imrp_correspondence(current, reference, result.transform, params.angular_window);
        if (icp_pairs.empty() || imrp_pairs.empty()) return {init, true, iter};
        const Transform2 trans_solve = estimate_rigid_transform(icp_pairs);
        const Transform2 rot_solve = estimate_rigid_transform(imrp_pairs);
        const Transform2 next{trans_solve.translation, rot_solve.rotation};
        const bool done = detail::converged(result.transform, next, params);
        result.transform = next;
        result.iterations = iter + 1;
        if (done) break;
    }
    return result;
}

}  // namespace mhsm

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhsm/geometry.hpp"
#include "mhsm/scan.hpp"

namespace mhsm {

/// One Monte-Carlo displacement hypothesis between two scans.
///
/// `psi` is the unit contribution axis: the direction along which the
/// hypothesis carries reliable information. A pair matched on a straight
/// surface constrains motion only along the surface normal, so psi is
/// perpendicular to the matched reference segment. psi and -psi describe the
/// same axis; the stored representative has psi.x > 0, or psi.y >= 0 when
/// psi.x == 0.
struct Hypothesis {
    Point2 delta_t;            // estimated translation, meters
    double delta_theta = 0.0;  // estimated rotation, radians, in (-pi, pi]
    Point2 psi;                // unit contribution axis
};

struct GenParams {
    std::size_t n_hypotheses = 500;  // generate at least this many
    double d_min = 0.05;             // meters, lower pair-distance bound
    double d_max = 0.5;              // meters, upper pair-distance bound
    std::size_t k = 4;               // reference-scan candidates per pair
    std::uint64_t rng_seed = 0;
};

inline void validate(const GenParams& p) {
    if (p.n_hypotheses < 1) throw std::invalid_argument("GenParams: n_hypotheses < 1");
    if (p.k < 1) throw std::invalid_argument("GenParams: k < 1");
    if (!(p.d_min > 0.0) || !(p.d_min < p.d_max)) {
        throw std::invalid_argument("GenParams: need 0 < d_min < d_max");
    }
}

namespace detail {

inline Point2 canonical_axis(const Point2& v) {
    if (v.x < 0.0 || (v.x == 0.0 && v.y < 0.0)) return -v;
    return v;
}

}  // namespace detail

/// Build one hypothesis from a neighboring pair (p, q) in the current scan and
/// a candidate correspondent p' of p in the reference scan.
///
/// q is projected next to p' assuming p corresponds to p', snapped to the
/// closest reference point q', and the two segment angles give the rotation;
/// the leftover displacement of the rotated q gives the translation. Returns
/// nothing when q' coincides with p' (no usable segment direction).
inline std::optional<Hypothesis> pair_hypothesis(const Point2& p, const Point2& q,
                                                 const Point2& p_prime,
                                                 const CartesianScan& reference) {
    if (reference.empty()) throw std::invalid_argument("pair_hypothesis: empty reference scan");
    const Point2 pq = q - p;
    if (pq.x == 0.0 && pq.y == 0.0) throw std::invalid_argument("pair_hypothesis: p == q");

    const Point2 q_hat = p_prime + pq;
    const Point2 q_prime = reference.nearest(q_hat);
    const Point2 ref_seg = q_prime - p_prime;
    if (ref_seg.x == 0.0 && ref_seg.y == 0.0) return std::nullopt;

    const double theta = std::atan2(pq.y, pq.x);
    const double theta_prime = std::atan2(ref_seg.y, ref_seg.x);
    const double delta_theta = angle_diff(theta_prime, theta);
    const Point2 q_rotated = rotate(q, delta_theta);

    Hypothesis h;
    h.delta_t = q_prime - q_rotated;
    h.delta_theta = delta_theta;
    // Unit normal of the matched reference segment: (cos, sin) of
    // theta_prime + pi/2, taken directly from the normalized segment.
    const double inv_len = 1.0 / ref_seg.norm();
    h.psi = detail::canonical_axis({-ref_seg.y * inv_len, ref_seg.x * inv_len});
    return h;
}

/// Generate at least params.n_hypotheses weighted hypotheses for the rigid
/// transform mapping current-scan points into the reference frame.
///
/// Repeatedly draws a random point p from the current scan and a random
/// neighbor q of it, then forms one hypothesis per k-nearest candidate
/// correspondent of p in the reference scan. Deterministic for a fixed
/// rng_seed. The output size lies in [n, n + k - 1].
///
/// Throws std::runtime_error when 50 * n_hypotheses sampling attempts fail
/// (empty neighbor sets or degenerate pairs), which otherwise would spin the
/// loop forever on pathological scans.
inline std::vector<Hypothesis> generate_hypotheses(const CartesianScan& current,
                                                   const CartesianScan& reference,
                                                   const GenParams& params) {
    validate(params);
    if (current.size() < 2 || reference.size() < 2) {
        throw std::invalid_argument("generate_hypotheses: both scans need >= 2 points");
    }
    std::mt19937_64 rng(params.rng_seed);
    std::vector<Hypothesis> hypotheses;
    hypotheses.reserve(params.n_hypotheses + params.k);
    std::size_t failures = 0;
    const std::size_t max_failures = 50 * params.n_hypotheses;
    while (hypotheses.size() < params.n_hypotheses) {
        if (failures > max_failures) {
            throw std::runtime_error(
                "generate_hypotheses: gave up after " + std::to_string(failures) +
                " failed sampling attempts (" + std::to_string(hypotheses.size()) + "/" +
                std::to_string(params.n_hypotheses) +
                " hypotheses); check d_min/d_max against the scan density");
        }
        const std::size_t pi = std::uniform_int_distribution<std::size_t>(
            0, current.size() - 1)(rng);
        const Point2 p = current.points()[pi];
        const std::vector<Point2> neighbors = current.neighbor_set(p, params.d_min, params.d_max);
        if (neighbors.empty()) {
            ++failures;
            continue;
        }
        const std::size_t qi = std::uniform_int_distribution<std::size_t>(
            0, neighbors.size() - 1)(rng);
        const Point2 q = neighbors[qi];
        for (const Point2& p_prime : reference.k_nearest(p, params.k)) {
            if (std::optional<Hypothesis> h = pair_hypothesis(p, q, p_prime, reference)) {
                hypotheses.push_back(*h);
            } else {
                ++failures;
            }
        }
    }
    return hypotheses;
}

}  // namespace mhsm

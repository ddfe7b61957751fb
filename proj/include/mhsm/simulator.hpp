#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "mhsm/geometry.hpp"
#include "mhsm/scan.hpp"

namespace mhsm {

struct Segment {
    Point2 a;
    Point2 b;
};

/// A 2D world made of wall segments.
struct Environment {
    std::vector<Segment> segments;
};

/// Axis-aligned rectangular room centered at the origin.
inline Environment rectangle_room(double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw std::invalid_argument("rectangle_room: non-positive dimensions");
    }
    const double hw = width / 2.0;
    const double hh = height / 2.0;
    Environment env;
    env.segments = {
        {{-hw, -hh}, {hw, -hh}},
        {{hw, -hh}, {hw, hh}},
        {{hw, hh}, {-hw, hh}},
        {{-hw, hh}, {-hw, -hh}},
    };
    return env;
}

/// Beam layout and noise model of a simulated range sensor.
struct SensorModel {
    std::size_t n_beams = 360;
    double fov = 2.0 * kPi;   // radians, centered on the sensor heading
    double max_range = 8.0;   // meters
    double noise_std = 0.01;  // meters; 0 disables noise
    std::uint64_t rng_seed = 0;

    /// Beam angle in the sensor frame. A full sweep spaces beams fov/n apart
    /// (an inclusive endpoint would duplicate the +-pi beam); a sector spans
    /// [-fov/2, fov/2] with both endpoints included.
    double beam_angle(std::size_t beam) const {
        if (fov >= 2.0 * kPi - 1e-9) {
            return -fov / 2.0 + static_cast<double>(beam) * (fov / static_cast<double>(n_beams));
        }
        return -fov / 2.0 +
               static_cast<double>(beam) * (fov / static_cast<double>(n_beams - 1));
    }
};

/// Distance along the ray o + t*u (u unit, t >= 0) to segment s, or +inf when
/// they do not intersect. Rays parallel to a segment never hit it.
inline double ray_segment_distance(const Point2& o, const Point2& u, const Segment& s) {
    const Point2 d = s.b - s.a;
    const double denom = u.cross(d);
    if (std::abs(denom) < 1e-12) return std::numeric_limits<double>::infinity();
    const Point2 ao = s.a - o;
    const double t = ao.cross(d) / denom;
    const double w = ao.cross(u) / denom;
    if (t < 1e-12 || w < 0.0 || w > 1.0) return std::numeric_limits<double>::infinity();
    return t;
}

/// Raytrace one scan from `pose`. Beams that hit nothing within max_range
/// return max_range. Gaussian range noise (clamped to [0, max_range]) is
/// added when the sensor's noise_std is positive.
inline PolarScan raytrace_scan(const Environment& env, const Pose2& pose,
                               const SensorModel& sensor) {
    if (env.segments.empty()) throw std::invalid_argument("raytrace_scan: empty environment");
    for (const Segment& s : env.segments) {
        if (s.a.x == s.b.x && s.a.y == s.b.y) {
            throw std::invalid_argument("raytrace_scan: degenerate wall segment");
        }
    }
    if (sensor.n_beams < 2) throw std::invalid_argument("raytrace_scan: need at least 2 beams");
    if (!(sensor.noise_std >= 0.0)) {
        throw std::invalid_argument("raytrace_scan: negative noise_std");
    }
    std::mt19937_64 rng(sensor.rng_seed);
    std::normal_distribution<double> noise(0.0, sensor.noise_std);
    const Point2 origin{pose.x, pose.y};
    PolarScan scan;
    scan.max_range = sensor.max_range;
    scan.readings.reserve(sensor.n_beams);
    for (std::size_t l = 0; l < sensor.n_beams; ++l) {
        const double alpha = sensor.beam_angle(l);
        const double heading = pose.theta + alpha;
        const Point2 dir{std::cos(heading), std::sin(heading)};
        double d = sensor.max_range;
        for (const Segment& s : env.segments) {
            d = std::min(d, ray_segment_distance(origin, dir, s));
        }
        if (sensor.noise_std > 0.0) {
            d = std::clamp(d + noise(rng), 0.0, sensor.max_range);
        }
        scan.readings.push_back({d, alpha});
    }
    return scan;
}

/// Six-step relative-motion sequence used by the synthetic benchmark:
/// a standstill, a lateral slide, two 45 degree turns in place, and two
/// straight-line moves.
inline std::vector<Transform2> benchmark_trajectory() {
    return {
        {{0.0, 0.0}, 0.0},
        {{0.0, -0.5}, 0.0},
        {{0.0, 0.0}, kPi / 4.0},
        {{-0.35, 0.0}, 0.0},
        {{0.0, 0.0}, kPi / 4.0},
        {{-0.5, -0.25}, 0.0},
    };
}

inline double point_segment_distance(const Point2& p, const Segment& s) {
    const Point2 d = s.b - s.a;
    const double len_sq = d.norm_sq();
    if (len_sq == 0.0) return distance(p, s.a);
    const double t = std::clamp((p - s.a).dot(d) / len_sq, 0.0, 1.0);
    return distance(p, s.a + d * t);
}

/// Whether the open segment p->q crosses any wall of the environment.
inline bool path_blocked(const Environment& env, const Point2& p, const Point2& q) {
    const Point2 d = q - p;
    const double len = d.norm();
    if (len == 0.0) return false;
    const Point2 u = d * (1.0 / len);
    for (const Segment& s : env.segments) {
        if (ray_segment_distance(p, u, s) <= len) return true;
    }
    return false;
}

namespace detail {

inline void add_box(Environment& env, double cx, double cy, double w, double h) {
    const double hw = w / 2.0;
    const double hh = h / 2.0;
    env.segments.push_back({{cx - hw, cy - hh}, {cx + hw, cy - hh}});
    env.segments.push_back({{cx + hw, cy - hh}, {cx + hw, cy + hh}});
    env.segments.push_back({{cx + hw, cy + hh}, {cx - hw, cy + hh}});
    env.segments.push_back({{cx - hw, cy + hh}, {cx - hw, cy - hh}});
}

}  // namespace detail

/// Fixed 16x12 m indoor map: four rooms off a central corridor, door gaps,
/// and scattered box obstacles. Used to generate dataset-scale logs.
inline Environment office_floorplan() {
    Environment env = rectangle_room(16.0, 12.0);
    const auto wall = [&](double ax, double ay, double bx, double by) {
        env.segments.push_back({{ax, ay}, {bx, by}});
    };
    // corridor walls with door gaps
    wall(-8.0, 2.0, -2.0, 2.0);
    wall(-0.5, 2.0, 3.0, 2.0);
    wall(4.5, 2.0, 8.0, 2.0);
    wall(-8.0, -2.0, -5.0, -2.0);
    wall(-3.5, -2.0, 1.0, -2.0);
    wall(2.5, -2.0, 8.0, -2.0);
    // room partitions
    wall(-2.0, 2.0, -2.0, 3.5);
    wall(-2.0, 5.0, -2.0, 6.0);
    wall(3.0, 2.0, 3.0, 4.0);
    wall(3.0, 5.5, 3.0, 6.0);
    wall(-1.0, -6.0, -1.0, -3.5);
    wall(4.0, -6.0, 4.0, -2.8);
    // furniture
    detail::add_box(env, -5.5, 4.0, 1.2, 0.8);
    detail::add_box(env, 5.8, 3.5, 1.5, 0.9);
    detail::add_box(env, -4.0, -4.5, 1.0, 1.0);
    detail::add_box(env, 6.0, -4.0, 1.2, 1.2);
    detail::add_box(env, -3.0, 0.0, 0.4, 0.4);
    detail::add_box(env, 2.0, 0.5, 0.4, 0.4);
    return env;
}

/// Random exploration poses through the environment. Steps never cross a
/// wall and keep `clearance` meters from every segment; blocked proposals
/// degrade to turning in place, so the walk always makes progress.
inline std::vector<Pose2> random_trajectory(const Environment& env, std::size_t n_poses,
                                            std::uint64_t rng_seed, const Pose2& start = {},
                                            double max_step = 1.1, double max_turn = 1.0,
                                            double clearance = 0.35) {
    if (n_poses == 0) return {};
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> step_dist(0.15, max_step);
    std::uniform_real_distribution<double> turn_dist(-max_turn, max_turn);
    const auto clear_of_walls = [&](const Point2& p) {
        for (const Segment& s : env.segments) {
            if (point_segment_distance(p, s) < clearance) return false;
        }
        return true;
    };
    std::vector<Pose2> poses{start};
    while (poses.size() < n_poses) {
        const Pose2& cur = poses.back();
        bool moved = false;
        for (int attempt = 0; attempt < 20 && !moved; ++attempt) {
            const double turn = turn_dist(rng);
            const double step = step_dist(rng);
            const double heading = normalize_angle(cur.theta + turn);
            const Point2 target{cur.x + step * std::cos(heading),
                                cur.y + step * std::sin(heading)};
            if (!clear_of_walls(target) || path_blocked(env, {cur.x, cur.y}, target)) continue;
            poses.push_back({target.x, target.y, heading});
            moved = true;
        }
        if (!moved) {
            poses.push_back({cur.x, cur.y, normalize_angle(cur.theta + turn_dist(rng))});
        }
    }
    return poses;
}

}  // namespace mhsm

#pragma once

#include <cmath>

namespace mhsm {

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
inline double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) {
        a += 2.0 * kPi;
    } else if (a > kPi) {
        a -= 2.0 * kPi;
    }
    return a;
}

/// Signed angular difference a - b, wrapped to (-pi, pi].
inline double angle_diff(double a, double b) {
    return normalize_angle(a - b);
}

/// Planar point / vector, in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator-() const { return {-x, -y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }

    double dot(const Point2& o) const { return x * o.x + y * o.y; }
    /// z-component of the 3D cross product of (x,y,0) and (o.x,o.y,0).
    double cross(const Point2& o) const { return x * o.y - y * o.x; }
    double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm_sq()); }
};

inline Point2 operator*(double s, const Point2& p) { return p * s; }

inline double distance(const Point2& a, const Point2& b) { return (b - a).norm(); }
inline double distance_sq(const Point2& a, const Point2& b) { return (b - a).norm_sq(); }

/// Rotate p by angle about the origin.
inline Point2 rotate(const Point2& p, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Planar rigid transform: p' = R(rotation) * p + translation.
struct Transform2 {
    Point2 translation;
    double rotation = 0.0;  // radians, wrapped to (-pi, pi]
};

inline Point2 apply_transform(const Transform2& t, const Point2& p) {
    return rotate(p, t.rotation) + t.translation;
}

inline Transform2 inverse(const Transform2& t) {
    return {-rotate(t.translation, -t.rotation), normalize_angle(-t.rotation)};
}

/// Composition: apply_transform(compose(outer, inner), p) ==
/// apply_transform(outer, apply_transform(inner, p)).
inline Transform2 compose(const Transform2& outer, const Transform2& inner) {
    return {rotate(inner.translation, outer.rotation) + outer.translation,
            normalize_angle(outer.rotation + inner.rotation)};
}

/// Robot pose in the plane.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // radians, wrapped to (-pi, pi]
};

/// Pose reached from `pose` after `motion`, where motion is expressed in
/// the frame of `pose`.
inline Pose2 advance(const Pose2& pose, const Transform2& motion) {
    const Point2 t = rotate(motion.translation, pose.theta);
    return {pose.x + t.x, pose.y + t.y, normalize_angle(pose.theta + motion.rotation)};
}

/// Rigid transform taking pose a to pose b, expressed in a's frame.
/// Equivalently: maps points seen from b into a's frame, so that
/// apply_transform(relative_pose(a, b), p_b) == p_a for a static world point.
inline Transform2 relative_pose(const Pose2& a, const Pose2& b) {
    const Point2 dt = rotate({b.x - a.x, b.y - a.y}, -a.theta);
    return {dt, angle_diff(b.theta, a.theta)};
}

}  // namespace mhsm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhsm/geometry.hpp"
#include "mhsm/scan.hpp"

namespace mhsm {

/// One FLASER line of a CARMEN robot log. Pose angles are kept exactly as
/// stored in the log (they may lie outside (-pi, pi]); geometry derived from
/// them is wrapped downstream.
struct LaserRecord {
    std::vector<double> ranges;  // meters
    Pose2 laser_pose;
    Pose2 odom_pose;
    double timestamp = 0.0;  // seconds
};

struct CarmenLog {
    std::vector<LaserRecord> records;
    std::size_t malformed_lines = 0;
};

/// Beam-angle convention for FLASER ranges: n readings evenly spaced over
/// `fov`, ending at `end_angle` (the SICK-on-CARMEN default: 180 degrees of
/// view ending at +90 degrees).
struct CarmenLaserConfig {
    double fov = kPi;
    double end_angle = kPi / 2.0;
    double max_range = 81.9;  // meters; readings at or beyond carry no return
};

namespace detail {

inline bool parse_double(const std::string& token, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(token, &pos);
        return pos == token.size();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace detail

/// Parse every FLASER line of a CARMEN log:
///   FLASER n r_1 ... r_n x y theta odom_x odom_y odom_theta ts host log_ts
/// Other line types (ODOM, PARAM, # comments, ...) are skipped silently.
/// Malformed FLASER lines (wrong token count, unparsable numbers, negative
/// ranges) are skipped and counted, never fatal.
inline CarmenLog parse_carmen_log(std::istream& in) {
    CarmenLog log;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream tokens(line);
        std::string tag;
        if (!(tokens >> tag) || tag != "FLASER") continue;

        std::vector<std::string> fields;
        std::string tok;
        while (tokens >> tok) fields.push_back(tok);

        bool ok = !fields.empty();
        std::size_t n = 0;
        if (ok) {
            double n_raw = 0.0;
            ok = detail::parse_double(fields[0], n_raw) && n_raw >= 0.0 &&
                 n_raw == static_cast<double>(static_cast<std::size_t>(n_raw));
            n = ok ? static_cast<std::size_t>(n_raw) : 0;
        }
        // n itself, n ranges, 6 pose values, timestamp, host, log timestamp.
        ok = ok && fields.size() == n + 10;

        LaserRecord rec;
        if (ok) {
            rec.ranges.resize(n);
            for (std::size_t i = 0; ok && i < n; ++i) {
                ok = detail::parse_double(fields[1 + i], rec.ranges[i]) && rec.ranges[i] >= 0.0;
            }
            double pose[6];
            for (std::size_t i = 0; ok && i < 6; ++i) {
                ok = detail::parse_double(fields[1 + n + i], pose[i]);
            }
            ok = ok && detail::parse_double(fields[7 + n], rec.timestamp);
            if (ok) {
                rec.laser_pose = {pose[0], pose[1], pose[2]};
                rec.odom_pose = {pose[3], pose[4], pose[5]};
            }
        }
        if (ok) {
            log.records.push_back(std::move(rec));
        } else {
            ++log.malformed_lines;
        }
    }
    return log;
}

/// Re-serialize records as FLASER lines. Numbers are printed with enough
/// digits that a parse round-trip reproduces every field exactly.
inline void write_carmen_log(std::ostream& out, const std::vector<LaserRecord>& records,
                             const std::string& host = "mhsm") {
    char buf[32];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ' ' << buf;
    };
    for (const LaserRecord& rec : records) {
        out << "FLASER " << rec.ranges.size();
        for (double r : rec.ranges) put(r);
        put(rec.laser_pose.x);
        put(rec.laser_pose.y);
        put(rec.laser_pose.theta);
        put(rec.odom_pose.x);
        put(rec.odom_pose.y);
        put(rec.odom_pose.theta);
        put(rec.timestamp);
        out << ' ' << host;
        put(rec.timestamp);
        out << '\n';
    }
}

/// Pack a scan into a FLASER record; laser and odometry poses both carry the
/// true pose. Beam angles are implied by the FLASER convention, so the scan
/// should have been produced with a matching sector layout.
inline LaserRecord to_laser_record(const PolarScan& scan, const Pose2& pose,
                                   double timestamp) {
    LaserRecord rec;
    rec.ranges.reserve(scan.readings.size());
    for (const PolarReading& r : scan.readings) rec.ranges.push_back(r.range);
    rec.laser_pose = pose;
    rec.odom_pose = pose;
    rec.timestamp = timestamp;
    return rec;
}

/// Expand a record's ranges into a polar scan under the given beam-angle
/// convention.
inline PolarScan to_polar_scan(const LaserRecord& rec, const CarmenLaserConfig& config = {}) {
    if (rec.ranges.size() < 2) {
        throw std::invalid_argument("to_polar_scan: need at least 2 ranges");
    }
    const std::size_t n = rec.ranges.size();
    const double step = config.fov / static_cast<double>(n - 1);
    const double start = config.end_angle - config.fov;
    PolarScan scan;
    scan.max_range = config.max_range;
    scan.readings.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double clamped = std::min(rec.ranges[i], config.max_range);
        scan.readings.push_back({clamped, start + static_cast<double>(i) * step});
    }
    return scan;
}

/// Ground-truth relative transform between two records: the rigid transform
/// taking pose a to pose b, expressed in a's frame. Uses the corrected laser
/// pose by default; `use_odometry` switches to the raw odometry field.
inline Transform2 relative_truth(const LaserRecord& a, const LaserRecord& b,
                                 bool use_odometry = false) {
    const Pose2& pa = use_odometry ? a.odom_pose : a.laser_pose;
    const Pose2& pb = use_odometry ? b.odom_pose : b.laser_pose;
    return relative_pose(pa, pb);
}

}  // namespace mhsm

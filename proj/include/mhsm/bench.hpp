#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "mhsm/baselines.hpp"
#include "mhsm/carmen.hpp"
#include "mhsm/clustering.hpp"
#include "mhsm/geometry.hpp"
#include "mhsm/hypothesis.hpp"
#include "mhsm/scan.hpp"
#include "mhsm/simulator.hpp"

namespace mhsm {

/// Setup-level benchmark failures (unreadable log, zero pairs, bad config).
struct BenchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MatcherKind { Mhsm, Icp, Idc };

inline const char* to_string(MatcherKind m) {
    switch (m) {
        case MatcherKind::Mhsm: return "mhsm";
        case MatcherKind::Icp: return "icp";
        case MatcherKind::Idc: return "idc";
    }
    return "?";
}

inline std::optional<MatcherKind> matcher_from_string(const std::string& s) {
    if (s == "mhsm") return MatcherKind::Mhsm;
    if (s == "icp") return MatcherKind::Icp;
    if (s == "idc") return MatcherKind::Idc;
    return std::nullopt;
}

/// One benchmarked scan-pair match.
struct MatchRecord {
    std::size_t pair_index = 0;
    std::string matcher;
    Transform2 truth;
    Transform2 estimate;
    double trans_error = 0.0;  // meters
    double rot_error = 0.0;    // radians, in [0, pi]
    double runtime_ms = 0.0;
    double trans_error_ma = 0.0;  // trailing moving averages
    double rot_error_ma = 0.0;
};

/// Translation and rotation error between two transforms: Euclidean distance
/// of the translations and absolute wrapped difference of the rotations.
inline std::pair<double, double> pair_errors(const Transform2& truth,
                                             const Transform2& estimate) {
    return {distance(truth.translation, estimate.translation),
            std::abs(angle_diff(estimate.rotation, truth.rotation))};
}

struct CdfPoint {
    double threshold = 0.0;
    double fraction = 0.0;
};

/// Fraction of errors strictly below each threshold.
inline std::vector<CdfPoint> error_cdf(const std::vector<double>& errors,
                                       const std::vector<double>& thresholds) {
    if (errors.empty()) throw std::invalid_argument("error_cdf: no errors");
    std::vector<CdfPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        std::size_t below = 0;
        for (double e : errors) {
            if (e < t) ++below;
        }
        out.push_back({t, static_cast<double>(below) / static_cast<double>(errors.size())});
    }
    return out;
}

inline std::vector<CdfPoint> error_cdf(const std::vector<MatchRecord>& records,
                                       const std::vector<double>& thresholds,
                                       bool rotation = false) {
    std::vector<double> errors;
    errors.reserve(records.size());
    for (const MatchRecord& r : records) {
        errors.push_back(rotation ? r.rot_error : r.trans_error);
    }
    return error_cdf(errors, thresholds);
}

struct BenchSummary {
    std::string matcher;
    double rmse_translation = 0.0;  // meters
    double rmse_rotation = 0.0;     // radians
    double mean_runtime_ms = 0.0;
    std::vector<CdfPoint> translation_cdf;
    std::vector<CdfPoint> rotation_cdf;
};

/// Scan source and parameters of one benchmark run.
struct SyntheticConfig {
    double room_width = 6.0;
    double room_height = 4.0;
    SensorModel sensor;
    Pose2 start{0.3, 0.2, 0.0};
};

struct BenchConfig {
    std::string input_log;  // empty: synthetic benchmark trajectory
    std::vector<MatcherKind> matchers{MatcherKind::Mhsm};
    std::size_t max_pairs = 0;  // 0: all available
    std::uint64_t seed = 1;
    GenParams gen;
    ClusterParams cluster;
    IterativeParams iterative;
    std::size_t ma_window = 50;
    std::size_t threads = 1;
    bool truth_from_odometry = false;
    CarmenLaserConfig laser;
    SyntheticConfig synthetic;
};

struct ScanPair {
    PolarScan current;
    PolarScan reference;
    Transform2 truth;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Consecutive FLASER pairs of a CARMEN log, oldest record as reference.
/// Malformed lines were already skipped by the parser; they are reported on
/// standard error, never fatal.
inline std::vector<ScanPair> load_log_pairs(const std::string& path,
                                            const CarmenLaserConfig& laser,
                                            bool truth_from_odometry, std::size_t max_pairs) {
    std::ifstream in(path);
    if (!in) throw BenchError("cannot open log file: " + path);
    const CarmenLog log = parse_carmen_log(in);
    if (log.malformed_lines > 0) {
        std::cerr << "warning: skipped " << log.malformed_lines
                  << " malformed FLASER line(s) in " << path << "\n";
    }
    std::vector<const LaserRecord*> usable;
    usable.reserve(log.records.size());
    for (const LaserRecord& r : log.records) {
        if (r.ranges.size() >= 2) usable.push_back(&r);
    }
    std::vector<ScanPair> pairs;
    for (std::size_t i = 0; i + 1 < usable.size(); ++i) {
        if (max_pairs > 0 && pairs.size() >= max_pairs) break;
        ScanPair pair;
        pair.reference = to_polar_scan(*usable[i], laser);
        pair.current = to_polar_scan(*usable[i + 1], laser);
        pair.truth = relative_truth(*usable[i], *usable[i + 1], truth_from_odometry);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

/// Raytraced pairs along the built-in benchmark trajectory in a rectangular
/// room. Per-pose noise seeds derive from `seed`.
inline std::vector<ScanPair> synthetic_pairs(const SyntheticConfig& config,
                                             std::uint64_t seed, std::size_t max_pairs) {
    const Environment env = rectangle_room(config.room_width, config.room_height);
    std::vector<Pose2> poses{config.start};
    for (const Transform2& rel : benchmark_trajectory()) {
        poses.push_back(advance(poses.back(), rel));
    }
    std::vector<PolarScan> scans;
    scans.reserve(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        SensorModel sensor = config.sensor;
        sensor.rng_seed = detail::mix_seed(seed, i);
        scans.push_back(raytrace_scan(env, poses[i], sensor));
    }
    std::vector<ScanPair> pairs;
    for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
        if (max_pairs > 0 && pairs.size() >= max_pairs) break;
        pairs.push_back({scans[i + 1], scans[i], relative_pose(poses[i], poses[i + 1])});
    }
    return pairs;
}

struct TimedMatch {
    Transform2 estimate;
    double runtime_ms = 0.0;  // end-to-end, index construction included
    double index_ms = 0.0;    // share spent building the spatial indices
};

/// Run one matcher on one polar scan pair, end-to-end timed: the Cartesian
/// conversion and spatial-index build happen inside the measured window, as
/// each matcher pays for its own index. A matcher failure (degenerate scans)
/// yields the identity estimate rather than aborting a long run.
inline TimedMatch run_single_match(const PolarScan& current, const PolarScan& reference,
                                   MatcherKind matcher, const BenchConfig& config,
                                   std::uint64_t pair_seed) {
    using Clock = std::chrono::steady_clock;
    const auto ms_between = [](Clock::time_point a, Clock::time_point b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };
    TimedMatch out;
    const auto t0 = Clock::now();
    const CartesianScan cur = polar_to_cartesian(current);
    const CartesianScan ref = polar_to_cartesian(reference);
    const auto t1 = Clock::now();
    try {
        switch (matcher) {
            case MatcherKind::Mhsm: {
                GenParams gen = config.gen;
                gen.rng_seed = pair_seed;
                ClusterParams cluster = config.cluster;
                cluster.rng_seed = detail::mix_seed(pair_seed, 0x5eedULL);
                out.estimate = match_scans(cur, ref, gen, cluster).best().transform;
                break;
            }
            case MatcherKind::Icp:
                out.estimate = icp_match(cur, ref, Transform2{}, config.iterative).transform;
                break;
            case MatcherKind::Idc:
                out.estimate = idc_match(cur, ref, Transform2{}, config.iterative).transform;
                break;
        }
    } catch (const std::exception&) {
        out.estimate = Transform2{};
    }
    const auto t2 = Clock::now();
    out.runtime_ms = ms_between(t0, t2);
    out.index_ms = ms_between(t0, t1);
    return out;
}

struct BenchResult {
    std::vector<MatchRecord> records;  // matcher-major, pair_index ascending
    std::vector<BenchSummary> summaries;
};

namespace detail {

inline std::vector<double> default_thresholds(const std::vector<double>& errors) {
    double max_err = 0.0;
    for (double e : errors) max_err = std::max(max_err, e);
    const double top = std::max(max_err, 1e-9) * 1.01;
    std::vector<double> out;
    out.reserve(51);
    for (int i = 0; i <= 50; ++i) out.push_back(top * static_cast<double>(i) / 50.0);
    return out;
}

inline void fill_moving_averages(std::vector<MatchRecord>& records, std::size_t begin,
                                 std::size_t count, std::size_t window) {
    if (window == 0) window = 1;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t lo = i + 1 > window ? i + 1 - window : 0;
        double st = 0.0, sr = 0.0;
        for (std::size_t j = lo; j <= i; ++j) {
            st += records[begin + j].trans_error;
            sr += records[begin + j].rot_error;
        }
        const double inv = 1.0 / static_cast<double>(i - lo + 1);
        records[begin + i].trans_error_ma = st * inv;
        records[begin + i].rot_error_ma = sr * inv;
    }
}

}  // namespace detail

/// Run every configured matcher over every scan pair. Records are ordered by
/// matcher (config order), then pair_index, regardless of worker completion
/// order; each pair is timed inside its worker.
inline BenchResult run_benchmark(const BenchConfig& config) {
    if (config.matchers.empty()) throw BenchError("no matchers configured");
    const std::vector<ScanPair> pairs =
        config.input_log.empty()
            ? synthetic_pairs(config.synthetic, config.seed, config.max_pairs)
            : load_log_pairs(config.input_log, config.laser, config.truth_from_odometry,
                             config.max_pairs);
    if (pairs.empty()) throw BenchError("no scan pairs to match");

    const std::size_t n_pairs = pairs.size();
    const std::size_t n_tasks = n_pairs * config.matchers.size();
    BenchResult result;
    result.records.resize(n_tasks);

    const auto run_task = [&](std::size_t task) {
        const std::size_t mi = task / n_pairs;
        const std::size_t pi = task % n_pairs;
        const MatcherKind kind = config.matchers[mi];
        const ScanPair& pair = pairs[pi];
        const TimedMatch timed = run_single_match(pair.current, pair.reference, kind, config,
                                                  detail::mix_seed(config.seed, pi));
        MatchRecord& rec = result.records[task];
        rec.pair_index = pi;
        rec.matcher = to_string(kind);
        rec.truth = pair.truth;
        rec.estimate = timed.estimate;
        std::tie(rec.trans_error, rec.rot_error) = pair_errors(pair.truth, timed.estimate);
        rec.runtime_ms = timed.runtime_ms;
    };

    const std::size_t n_threads = std::max<std::size_t>(1, config.threads);
    if (n_threads == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(n_threads);
        for (std::size_t w = 0; w < n_threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1)) {
                    run_task(t);
                }
            });
        }
        for (std::thread& w : workers) w.join();
    }

    for (std::size_t mi = 0; mi < config.matchers.size(); ++mi) {
        detail::fill_moving_averages(result.records, mi * n_pairs, n_pairs, config.ma_window);
        std::vector<double> te, re;
        te.reserve(n_pairs);
        re.reserve(n_pairs);
        double sum_t2 = 0.0, sum_r2 = 0.0, sum_ms = 0.0;
        for (std::size_t pi = 0; pi < n_pairs; ++pi) {
            const MatchRecord& rec = result.records[mi * n_pairs + pi];
            te.push_back(rec.trans_error);
            re.push_back(rec.rot_error);
            sum_t2 += rec.trans_error * rec.trans_error;
            sum_r2 += rec.rot_error * rec.rot_error;
            sum_ms += rec.runtime_ms;
        }
        BenchSummary s;
        s.matcher = to_string(config.matchers[mi]);
        const double inv = 1.0 / static_cast<double>(n_pairs);
        s.rmse_translation = std::sqrt(sum_t2 * inv);
        s.rmse_rotation = std::sqrt(sum_r2 * inv);
        s.mean_runtime_ms = sum_ms * inv;
        s.translation_cdf = error_cdf(te, detail::default_thresholds(te));
        s.rotation_cdf = error_cdf(re, detail::default_thresholds(re));
        result.summaries.push_back(std::move(s));
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV input/output. The records schema is versioned; floats use 9 significant
// digits, radians throughout.

inline constexpr const char* kRecordsCsvVersion = "mhsm-records-v1";
inline constexpr const char* kRecordsCsvHeader =
    "pair_index,matcher,truth_x,truth_y,truth_theta,est_x,est_y,est_theta,"
    "trans_error,rot_error,runtime_ms,trans_error_ma,rot_error_ma";

namespace detail {

inline std::string csv_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

inline void write_records_csv(std::ostream& out, const std::vector<MatchRecord>& records) {
    out << "# " << kRecordsCsvVersion << '\n' << kRecordsCsvHeader << '\n';
    for (const MatchRecord& r : records) {
        const auto d = detail::csv_double;
        out << r.pair_index << ',' << r.matcher << ',' << d(r.truth.translation.x) << ','
            << d(r.truth.translation.y) << ',' << d(r.truth.rotation) << ','
            << d(r.estimate.translation.x) << ',' << d(r.estimate.translation.y) << ','
            << d(r.estimate.rotation) << ',' << d(r.trans_error) << ',' << d(r.rot_error)
            << ',' << d(r.runtime_ms) << ',' << d(r.trans_error_ma) << ','
            << d(r.rot_error_ma) << '\n';
    }
}

inline std::vector<MatchRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != std::string("# ") + kRecordsCsvVersion) {
        throw std::runtime_error("records CSV: missing or mismatched schema line");
    }
    if (!std::getline(in, line) || line != kRecordsCsvHeader) {
        throw std::runtime_error("records CSV: unexpected header");
    }
    std::vector<MatchRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 13) throw std::runtime_error("records CSV: bad row: " + line);
        MatchRecord r;
        r.pair_index = static_cast<std::size_t>(std::stoull(cells[0]));
        r.matcher = cells[1];
        r.truth.translation.x = std::stod(cells[2]);
        r.truth.translation.y = std::stod(cells[3]);
        r.truth.rotation = std::stod(cells[4]);
        r.estimate.translation.x = std::stod(cells[5]);
        r.estimate.translation.y = std::stod(cells[6]);
        r.estimate.rotation = std::stod(cells[7]);
        r.trans_error = std::stod(cells[8]);
        r.rot_error = std::stod(cells[9]);
        r.runtime_ms = std::stod(cells[10]);
        r.trans_error_ma = std::stod(cells[11]);
        r.rot_error_ma = std::stod(cells[12]);
        records.push_back(std::move(r));
    }
    return records;
}

inline void write_summary_csv(std::ostream& out, const std::vector<BenchSummary>& summaries) {
    out << "# mhsm-summary-v1\nmatcher,rmse_translation_m,rmse_rotation_rad,mean_runtime_ms\n";
    for (const BenchSummary& s : summaries) {
        out << s.matcher << ',' << detail::csv_double(s.rmse_translation) << ','
            << detail::csv_double(s.rmse_rotation) << ','
            << detail::csv_double(s.mean_runtime_ms) << '\n';
    }
}

inline void write_cdf_csv(std::ostream& out, const std::vector<BenchSummary>& summaries) {
    out << "# mhsm-cdf-v1\nmatcher,metric,threshold,fraction\n";
    for (const BenchSummary& s : summaries) {
        for (const CdfPoint& p : s.translation_cdf) {
            out << s.matcher << ",translation," << detail::csv_double(p.threshold) << ','
                << detail::csv_double(p.fraction) << '\n';
        }
        for (const CdfPoint& p : s.rotation_cdf) {
            out << s.matcher << ",rotation," << detail::csv_double(p.threshold) << ','
                << detail::csv_double(p.fraction) << '\n';
        }
    }
}

}  // namespace mhsm

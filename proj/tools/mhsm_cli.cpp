// Command-line harness for the scan-matching library: synthetic log
// generation, single-pair matching, full benchmarks, and CDF post-processing.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mhsm/mhsm.hpp"

namespace {

using namespace mhsm;

CLI::Option* take_last(CLI::Option* opt) {
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    return opt;
}

// Every tunable parameter is exposed as --group.field so that runs are fully
// reproducible from the command line or a config file.
void add_param_options(CLI::App* cmd, BenchConfig& config, double& laser_fov_deg) {
    take_last(cmd->add_option("--gen.n_hypotheses", config.gen.n_hypotheses,
                              "minimum number of hypotheses"));
    take_last(cmd->add_option("--gen.d_min", config.gen.d_min, "pair distance lower bound [m]"));
    take_last(cmd->add_option("--gen.d_max", config.gen.d_max, "pair distance upper bound [m]"));
    take_last(cmd->add_option("--gen.k", config.gen.k, "reference candidates per pair"));
    take_last(cmd->add_option("--gen.rng_seed", config.gen.rng_seed, "generation RNG seed"));

    take_last(cmd->add_option("--cluster.n_seeds", config.cluster.n_seeds, "initial clusters"));
    take_last(cmd->add_option("--cluster.uniform_seed_fraction",
                              config.cluster.uniform_seed_fraction,
                              "share of seeds drawn uniformly"));
    take_last(cmd->add_option("--cluster.sigma0", config.cluster.sigma0,
                              "initial isotropic std [m]"));
    take_last(cmd->add_option("--cluster.kappa0", config.cluster.kappa0,
                              "initial angular concentration"));
    take_last(cmd->add_option("--cluster.max_iterations", config.cluster.max_iterations,
                              "refinement iteration cap"));
    take_last(cmd->add_option("--cluster.d_thr", config.cluster.d_thr,
                              "translational convergence threshold [m]"));
    take_last(cmd->add_option("--cluster.r_thr", config.cluster.r_thr,
                              "rotational convergence threshold [rad]"));
    take_last(cmd->add_option("--cluster.stable_iters", config.cluster.stable_iters,
                              "consecutive stable iterations to stop"));
    take_last(cmd->add_option("--cluster.merge_dist", config.cluster.merge_dist,
                              "merge distance threshold [m]"));
    take_last(cmd->add_option("--cluster.merge_angle", config.cluster.merge_angle,
                              "merge angle threshold [rad]"));
    take_last(cmd->add_option("--cluster.regularization_eps", config.cluster.regularization_eps,
                              "covariance regularization [m^2]"));
    take_last(cmd->add_option("--cluster.seed_angle_scale", config.cluster.seed_angle_scale,
                              "seeding metric scale [m/rad]"));
    take_last(cmd->add_option("--cluster.asr_cap", config.cluster.asr_cap,
                              "per-point residual clamp for candidate weighting [m]"));
    take_last(cmd->add_option("--cluster.rng_seed", config.cluster.rng_seed,
                              "seeding RNG seed"));

    take_last(cmd->add_option("--iter.max_iterations", config.iterative.max_iterations,
                              "ICP/IDC iteration cap"));
    take_last(cmd->add_option("--iter.correspondence_cutoff",
                              config.iterative.correspondence_cutoff,
                              "correspondence distance cutoff [m]"));
    take_last(cmd->add_option("--iter.convergence_eps_t", config.iterative.convergence_eps_t,
                              "translation convergence epsilon [m]"));
    take_last(cmd->add_option("--iter.convergence_eps_r", config.iterative.convergence_eps_r,
                              "rotation convergence epsilon [rad]"));
    take_last(cmd->add_option("--iter.angular_window", config.iterative.angular_window,
                              "IMRP angular window [rad]"));

    take_last(cmd->add_option("--laser.fov_deg", laser_fov_deg, "FLASER field of view [deg]"));
    take_last(cmd->add_option("--laser.max_range", config.laser.max_range,
                              "FLASER max range [m]"));
}

std::vector<MatcherKind> parse_matchers(const std::vector<std::string>& names) {
    std::vector<MatcherKind> out;
    for (const std::string& name : names) {
        const auto kind = matcher_from_string(name);
        if (!kind) throw CLI::ValidationError("--matcher", "unknown matcher: " + name);
        out.push_back(*kind);
    }
    if (out.empty()) out.push_back(MatcherKind::Mhsm);
    return out;
}

std::vector<LaserRecord> scans_to_records(const Environment& env,
                                          const std::vector<Pose2>& poses,
                                          SensorModel sensor, std::uint64_t seed) {
    std::vector<LaserRecord> records;
    records.reserve(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        sensor.rng_seed = detail::mix_seed(seed, i);
        records.push_back(to_laser_record(raytrace_scan(env, poses[i], sensor), poses[i],
                                          0.1 * static_cast<double>(i)));
    }
    return records;
}

int run_simulate(const std::string& out_path, const std::string& trajectory,
                 std::size_t steps, std::uint64_t seed, std::size_t beams, double noise_std,
                 double max_range, double room_width, double room_height) {
    SensorModel sensor;
    sensor.n_beams = beams;
    sensor.fov = kPi;  // CARMEN FLASER convention: 180 deg ending at +90
    sensor.max_range = max_range;
    sensor.noise_std = noise_std;

    Environment env;
    std::vector<Pose2> poses;
    if (trajectory == "benchmark") {
        env = rectangle_room(room_width, room_height);
        poses.push_back({0.3, 0.2, 0.0});
        for (const Transform2& rel : benchmark_trajectory()) {
            poses.push_back(advance(poses.back(), rel));
        }
    } else {
        env = office_floorplan();
        poses = random_trajectory(env, steps, seed);
    }

    const std::vector<LaserRecord> records = scans_to_records(env, poses, sensor, seed);
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
    }
    write_carmen_log(out, records);
    std::cout << "wrote " << records.size() << " FLASER records to " << out_path << "\n";
    return 0;
}

int run_match(const BenchConfig& config, std::size_t index, std::uint64_t seed) {
    std::vector<ScanPair> pairs =
        config.input_log.empty()
            ? synthetic_pairs(config.synthetic, seed, 0)
            : load_log_pairs(config.input_log, config.laser, config.truth_from_odometry, 0);
    if (index >= pairs.size()) {
        std::cerr << "pair index " << index << " out of range (have " << pairs.size()
                  << " pairs)\n";
        return 1;
    }
    const ScanPair& pair = pairs[index];
    GenParams gen = config.gen;
    gen.rng_seed = detail::mix_seed(seed, index);
    ClusterParams cluster = config.cluster;
    cluster.rng_seed = detail::mix_seed(gen.rng_seed, 0x5eedULL);
    const CartesianScan cur = polar_to_cartesian(pair.current);
    const CartesianScan ref = polar_to_cartesian(pair.reference);
    const MatchResult result = match_scans(cur, ref, gen, cluster);

    std::printf("pair %zu: %zu candidate(s)\n", index, result.candidates.size());
    std::printf("%4s %10s %10s %12s %8s\n", "rank", "x [m]", "y [m]", "theta [deg]", "weight");
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const TransformCandidate& c = result.candidates[i];
        std::printf("%4zu %10.4f %10.4f %12.4f %8.4f\n", i + 1, c.transform.translation.x,
                    c.transform.translation.y, c.transform.rotation * 180.0 / kPi, c.weight);
    }
    const auto [te, re] = pair_errors(pair.truth, result.best().transform);
    std::printf("truth: (%.4f, %.4f, %.4f deg)\n", pair.truth.translation.x,
                pair.truth.translation.y, pair.truth.rotation * 180.0 / kPi);
    std::printf("top-candidate error: %.4f m, %.4f deg\n", te, re * 180.0 / kPi);
    return 0;
}

int run_bench(BenchConfig& config, const std::vector<std::string>& matcher_names,
              const std::string& out_dir) {
    config.matchers = parse_matchers(matcher_names);
    const BenchResult result = run_benchmark(config);

    std::filesystem::create_directories(out_dir);
    const auto write_file = [&](const std::string& name, auto writer) {
        const std::string path = out_dir + "/" + name;
        std::ofstream out(path);
        if (!out) throw BenchError("cannot write " + path);
        writer(out);
        return path;
    };
    const std::string records_path =
        write_file("records.csv", [&](std::ostream& o) { write_records_csv(o, result.records); });
    write_file("summary.csv", [&](std::ostream& o) { write_summary_csv(o, result.summaries); });
    write_file("cdf.csv", [&](std::ostream& o) { write_cdf_csv(o, result.summaries); });

    std::printf("%-6s %18s %18s %16s\n", "match", "RMSE trans [m]", "RMSE rot [deg]",
                "mean time [ms]");
    for (const BenchSummary& s : result.summaries) {
        std::printf("%-6s %18.4f %18.4f %16.3f\n", s.matcher.c_str(), s.rmse_translation,
                    s.rmse_rotation * 180.0 / kPi, s.mean_runtime_ms);
    }
    std::printf("wrote records.csv, summary.csv, cdf.csv to %s\n", out_dir.c_str());
    (void)records_path;
    return 0;
}

int run_cdf(const std::string& input, const std::string& out_path,
            const std::vector<double>& thresholds) {
    std::ifstream in(input);
    if (!in) {
        std::cerr << "cannot open " << input << "\n";
        return 1;
    }
    const std::vector<MatchRecord> records = read_records_csv(in);
    if (records.empty()) {
        std::cerr << "no records in " << input << "\n";
        return 1;
    }
    // group records per matcher label, preserving first-seen order
    std::vector<std::string> labels;
    for (const MatchRecord& r : records) {
        if (std::find(labels.begin(), labels.end(), r.matcher) == labels.end()) {
            labels.push_back(r.matcher);
        }
    }
    std::vector<BenchSummary> summaries;
    for (const std::string& label : labels) {
        std::vector<double> te, re;
        for (const MatchRecord& r : records) {
            if (r.matcher != label) continue;
            te.push_back(r.trans_error);
            re.push_back(r.rot_error);
        }
        BenchSummary s;
        s.matcher = label;
        const auto pick = [&](const std::vector<double>& errors) {
            if (!thresholds.empty()) return error_cdf(errors, thresholds);
            double top = 0.0;
            for (double e : errors) top = std::max(top, e);
            top = std::max(top, 1e-9) * 1.01;
            std::vector<double> t;
            for (int i = 0; i <= 50; ++i) t.push_back(top * i / 50.0);
            return error_cdf(errors, t);
        };
        s.translation_cdf = pick(te);
        s.rotation_cdf = pick(re);
        summaries.push_back(std::move(s));
    }
    if (out_path.empty()) {
        write_cdf_csv(std::cout, summaries);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return 1;
        }
        write_cdf_csv(out, summaries);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

// Flat key=value config support: the file's lines are injected as --key=value
// tokens right after the subcommand, so explicit flags win.
std::vector<std::string> inject_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
            break;
        }
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + config_path);
    std::vector<std::string> injected;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line is not key=value: " + line);
        }
        std::string key = line.substr(first, eq - first);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string value = line.substr(eq + 1);
        const auto vfirst = value.find_first_not_of(" \t");
        value = vfirst == std::string::npos ? "" : value.substr(vfirst);
        value.erase(value.find_last_not_of(" \t\r") + 1);
        injected.push_back("--" + key + "=" + value);
    }
    // insert after the subcommand token (first non-flag argument)
    std::size_t pos = 0;
    while (pos < args.size() && args[pos].rfind("--", 0) == 0) ++pos;
    if (pos < args.size()) ++pos;
    args.insert(args.begin() + static_cast<long>(pos), injected.begin(), injected.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace mhsm;
    CLI::App app{"2D lidar scan matching: Monte-Carlo hypothesis generation with hybrid "
                 "Gaussian/von Mises mean-shift clustering, plus ICP/IDC baselines"};
    app.require_subcommand(1);

    BenchConfig config;
    std::uint64_t seed = 1;
    std::string input_log;
    std::string out_dir = ".";
    std::string out_file;
    std::vector<std::string> matcher_names;
    std::string truth_field = "laser";
    std::size_t pair_index = 0;
    double laser_fov_deg = 180.0;

    // simulate
    std::string sim_out = "scans.log";
    std::string sim_traj = "benchmark";
    std::size_t sim_steps = 200;
    std::size_t sim_beams = 181;
    double sim_noise = 0.02;
    double sim_max_range = 81.9;
    double sim_room_w = 6.0, sim_room_h = 4.0;
    CLI::App* simulate = app.add_subcommand("simulate", "raytrace a synthetic CARMEN log");
    take_last(simulate->add_option("--out", sim_out, "output log path"));
    take_last(simulate->add_option("--trajectory", sim_traj, "benchmark|random")
                  ->check(CLI::IsMember({"benchmark", "random"})));
    take_last(simulate->add_option("--steps", sim_steps, "poses for the random trajectory"));
    take_last(simulate->add_option("--seed", seed, "trajectory and noise seed"));
    take_last(simulate->add_option("--beams", sim_beams, "beams per scan"));
    take_last(simulate->add_option("--noise-std", sim_noise, "range noise std [m]"));
    take_last(simulate->add_option("--max-range", sim_max_range, "sensor max range [m]"));
    take_last(simulate->add_option("--room-width", sim_room_w, "benchmark room width [m]"));
    take_last(simulate->add_option("--room-height", sim_room_h, "benchmark room height [m]"));

    // match
    CLI::App* match = app.add_subcommand("match", "match one scan pair and print candidates");
    take_last(match->add_option("--input", input_log, "CARMEN log (default: synthetic)"));
    take_last(match->add_option("--index", pair_index, "pair index"));
    take_last(match->add_option("--seed", seed, "RNG seed"));
    take_last(match->add_option("--truth", truth_field, "laser|odom ground-truth field")
                  ->check(CLI::IsMember({"laser", "odom"})));
    add_param_options(match, config, laser_fov_deg);

    // bench
    CLI::App* bench = app.add_subcommand("bench", "run matchers over a scan sequence");
    take_last(bench->add_option("--input", input_log, "CARMEN log (default: synthetic)"));
    bench->add_option("--matcher", matcher_names, "mhsm|icp|idc (repeatable)");
    take_last(bench->add_option("--pairs", config.max_pairs, "limit on scan pairs (0 = all)"));
    take_last(bench->add_option("--seed", seed, "global RNG seed"));
    take_last(bench->add_option("--out", out_dir, "output directory for CSV files"));
    take_last(bench->add_option("--threads", config.threads, "parallel match workers"));
    take_last(bench->add_option("--ma-window", config.ma_window, "moving-average window"));
    take_last(bench->add_option("--truth", truth_field, "laser|odom ground-truth field")
                  ->check(CLI::IsMember({"laser", "odom"})));
    add_param_options(bench, config, laser_fov_deg);

    // cdf
    std::string cdf_input;
    std::vector<double> cdf_thresholds;
    CLI::App* cdf = app.add_subcommand("cdf", "cumulative error fractions from a records CSV");
    take_last(cdf->add_option("--input", cdf_input, "records CSV")->required());
    take_last(cdf->add_option("--out", out_file, "output CSV (default: stdout)"));
    cdf->add_option("--thresholds", cdf_thresholds, "explicit thresholds (repeatable)");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = inject_config(std::move(args));
        // CLI11 consumes reversed arguments
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    config.input_log = input_log;
    config.seed = seed;
    config.truth_from_odometry = truth_field == "odom";
    config.laser.fov = laser_fov_deg * kPi / 180.0;
    config.laser.end_angle = config.laser.fov / 2.0;

    try {
        if (simulate->parsed()) {
            return run_simulate(sim_out, sim_traj, sim_steps, seed, sim_beams, sim_noise,
                                sim_max_range, sim_room_w, sim_room_h);
        }
        if (match->parsed()) return run_match(config, pair_index, seed);
        if (bench->parsed()) return run_bench(config, matcher_names, out_dir);
        if (cdf->parsed()) return run_cdf(cdf_input, out_file, cdf_thresholds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

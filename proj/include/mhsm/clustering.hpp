#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mhsm/geometry.hpp"
#include "mhsm/hypothesis.hpp"
#include "mhsm/scan.hpp"

namespace mhsm {

/// Symmetric 2x2 covariance, in m^2.
struct Cov2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    double det() const { return xx * yy - xy * xy; }

    static Cov2 isotropic(double variance) { return {variance, 0.0, variance}; }
};

/// Kernel state of one cluster: Gaussian over translations, von Mises over
/// rotations. `members` counts how many refined clusters were fused into this
/// one (1 until merging).
struct Cluster {
    Point2 mu;
    Cov2 sigma;
    double theta = 0.0;
    double kappa = 0.0;
    std::size_t members = 1;
};

struct ClusterParams {
    std::size_t n_seeds = 32;
    double uniform_seed_fraction = 0.25;  // share of seeds drawn uniformly
    double sigma0 = 0.4;                  // meters, initial isotropic std
    double kappa0 = 10.0;                 // initial angular concentration
    std::size_t max_iterations = 100;
    double d_thr = 1e-3;        // meters, translational convergence threshold
    double r_thr = 1e-3;        // radians, rotational convergence threshold
    std::size_t stable_iters = 2;
    double merge_dist = 0.05;   // meters
    double merge_angle = 2.0 * kPi / 180.0;  // radians
    double regularization_eps = 1e-6;        // m^2, added to sigma each update
    double seed_angle_scale = 1.0;           // meters per radian in the seeding metric
    double asr_cap = 1.0;  // meters; per-point residuals are clamped to this
    std::uint64_t rng_seed = 1;
};

inline void validate(const ClusterParams& p) {
    if (p.n_seeds < 1) throw std::invalid_argument("ClusterParams: n_seeds < 1");
    if (!(p.uniform_seed_fraction >= 0.0) || !(p.uniform_seed_fraction <= 1.0)) {
        throw std::invalid_argument("ClusterParams: uniform_seed_fraction outside [0, 1]");
    }
    if (!(p.sigma0 > 0.0) || !(p.kappa0 > 0.0) || !(p.d_thr > 0.0) || !(p.r_thr > 0.0) ||
        !(p.merge_dist > 0.0) || !(p.merge_angle > 0.0) || !(p.regularization_eps > 0.0) ||
        !(p.seed_angle_scale > 0.0) || !(p.asr_cap > 0.0) || p.stable_iters < 1) {
        throw std::invalid_argument("ClusterParams: non-positive parameter");
    }
}

/// One ranked transform candidate from a scan match.
struct TransformCandidate {
    Transform2 transform;
    double weight = 0.0;
};

/// Ranked candidates, weights normalized to sum 1, best first.
struct MatchResult {
    std::vector<TransformCandidate> candidates;

    const TransformCandidate& best() const { return candidates.front(); }
};

namespace detail {

// Total weight below this marks a cluster dead.
inline constexpr double kDeadWeight = 1e-12;
// exp(x) for x below this underflows past any relevant contribution.
inline constexpr double kExpFloor = -60.0;

inline void invert_regularized(Cov2 s, double eps, double& ixx, double& ixy, double& iyy) {
    double det = s.det();
    if (!(det > 1e-300)) {
        s.xx += eps;
        s.yy += eps;
        det = s.det();
    }
    ixx = s.yy / det;
    ixy = -s.xy / det;
    iyy = s.xx / det;
}

// Per-hypothesis quantities reused across every seed and iteration.
struct HypothesisCache {
    std::vector<double> x, y;          // translations
    std::vector<double> px, py;        // psi components
    std::vector<double> sin_t, cos_t;  // of delta_theta

    explicit HypothesisCache(const std::vector<Hypothesis>& hyps) {
        const std::size_t n = hyps.size();
        x.resize(n);
        y.resize(n);
        px.resize(n);
        py.resize(n);
        sin_t.resize(n);
        cos_t.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = hyps[i].delta_t.x;
            y[i] = hyps[i].delta_t.y;
            px[i] = hyps[i].psi.x;
            py[i] = hyps[i].psi.y;
            sin_t[i] = std::sin(hyps[i].delta_theta);
            cos_t[i] = std::cos(hyps[i].delta_theta);
        }
    }

    std::size_t size() const { return x.size(); }
};

inline std::optional<Cluster> update_cluster_cached(const Cluster& c, const HypothesisCache& h,
                                                    double eps, std::vector<double>& w) {
    const std::size_t n = h.size();
    double ixx, ixy, iyy;
    invert_regularized(c.sigma, eps, ixx, ixy, iyy);
    const double sin_s = std::sin(c.theta);
    const double cos_s = std::cos(c.theta);

    w.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = h.x[i] - c.mu.x;
        const double dy = h.y[i] - c.mu.y;
        const double proj = h.px[i] * dx + h.py[i] * dy;
        const double ex = proj * h.px[i];
        const double ey = proj * h.py[i];
        const double m2 = ex * (ixx * ex + ixy * ey) + ey * (ixy * ex + iyy * ey);
        const double v = c.kappa * (h.cos_t[i] * cos_s + h.sin_t[i] * sin_s);
        const double arg = -0.5 * m2 + v;
        const double wi = arg < kExpFloor ? 0.0 : std::exp(arg);
        w[i] = wi;
        total += wi;
    }
    if (!(total > kDeadWeight)) return std::nullopt;
    const double eta = 1.0 / total;

    // Each hypothesis constrains the mean only along its contribution axis:
    // mu' solves the weighted least squares over the psi-projected residuals,
    // [sum w psi psi^T] mu' = sum w (psi . x) psi. For axis-aligned psi this
    // reduces to independent per-axis weighted means.
    double axx = 0.0, axy = 0.0, ayy = 0.0, bx = 0.0, by = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w[i] * eta;
        const double dot = h.px[i] * h.x[i] + h.py[i] * h.y[i];
        axx += wi * h.px[i] * h.px[i];
        axy += wi * h.px[i] * h.py[i];
        ayy += wi * h.py[i] * h.py[i];
        bx += wi * dot * h.px[i];
        by += wi * dot * h.py[i];
    }
    // A is normalized (unit trace). Split on its eigenvalues: along a
    // direction with no contribution mass the hypotheses say nothing, so the
    // previous mean is kept there.
    Point2 mu = c.mu;
    const double disc = std::sqrt((axx - ayy) * (axx - ayy) + 4.0 * axy * axy);
    const double lam1 = 0.5 * (axx + ayy + disc);
    const double lam2 = 0.5 * (axx + ayy - disc);
    if (lam2 > 1e-9) {
        const double det = axx * ayy - axy * axy;
        mu = {(ayy * bx - axy * by) / det, (axx * by - axy * bx) / det};
    } else if (lam1 > 1e-9) {
        // dominant eigenvector of A
        Point2 e{axy, lam1 - axx};
        if (e.norm_sq() < 1e-300) e = {lam1 - ayy, axy};
        if (e.norm_sq() < 1e-300) e = {1.0, 0.0};
        e = e * (1.0 / e.norm());
        const double along = (e.x * bx + e.y * by) / lam1;
        mu = c.mu + e * (along - e.dot(c.mu));
    }

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    double sum_sin = 0.0, sum_cos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double proj = h.px[i] * (h.x[i] - mu.x) + h.py[i] * (h.y[i] - mu.y);
        const double dx = proj * h.px[i];
        const double dy = proj * h.py[i];
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
        sum_sin += w[i] * h.sin_t[i];
        sum_cos += w[i] * h.cos_t[i];
    }

    Cluster out;
    out.mu = mu;
    out.sigma = {eta * sxx + eps, eta * sxy, eta * syy + eps};
    out.theta = normalize_angle(std::atan2(sum_sin, sum_cos));
    // eta * sum_i w_i cos(theta_i - theta') collapses to the resultant length.
    out.kappa = eta * std::sqrt(sum_sin * sum_sin + sum_cos * sum_cos);
    out.members = c.members;
    return out;
}

}  // namespace detail

/// Hybrid kernel membership of hypothesis h in cluster c: the product of the
/// Gaussian term over the psi-projected translation deviation and the von
/// Mises term over the angular deviation, exp(-m^2/2 + kappa cos(dtheta)).
/// Lies in (0, exp(kappa)], maximized when h sits at (mu, theta).
inline double membership_weight(const Hypothesis& h, const Cluster& c,
                                double regularization_eps = 1e-6) {
    double ixx, ixy, iyy;
    detail::invert_regularized(c.sigma, regularization_eps, ixx, ixy, iyy);
    const Point2 d = h.delta_t - c.mu;
    const double proj = h.psi.dot(d);
    const Point2 e = h.psi * proj;
    const double m2 = e.x * (ixx * e.x + ixy * e.y) + e.y * (ixy * e.x + iyy * e.y);
    const double v = c.kappa * std::cos(angle_diff(h.delta_theta, c.theta));
    return std::exp(-0.5 * m2 + v);
}

/// One mean-shift step of cluster c over the full hypothesis set. Returns
/// nothing when the total membership weight falls below 1e-12 (dead cluster).
inline std::optional<Cluster> update_cluster(const Cluster& c,
                                             const std::vector<Hypothesis>& hyps,
                                             double regularization_eps = 1e-6) {
    if (hyps.empty()) throw std::invalid_argument("update_cluster: no hypotheses");
    const detail::HypothesisCache cache(hyps);
    std::vector<double> w;
    return detail::update_cluster_cached(c, cache, regularization_eps, w);
}

/// Pick initial clusters from the hypothesis set: ceil(fraction * n) uniform
/// draws for diversity in dense regions, the rest sequentially with
/// probability proportional to the squared seeding distance to the closest
/// seed chosen so far. Seeds start with an isotropic sigma0^2 covariance and
/// concentration kappa0.
inline std::vector<Cluster> seed_clusters(const std::vector<Hypothesis>& hyps,
                                          const ClusterParams& params,
                                          std::uint64_t rng_seed) {
    validate(params);
    if (hyps.empty()) throw std::invalid_argument("seed_clusters: no hypotheses");
    const std::size_t n_seeds = std::min(params.n_seeds, hyps.size());
    const std::size_t n_uniform = std::min(
        n_seeds,
        static_cast<std::size_t>(std::ceil(params.uniform_seed_fraction *
                                           static_cast<double>(n_seeds))));
    std::mt19937_64 rng(rng_seed);
    const double lambda_sq = params.seed_angle_scale * params.seed_angle_scale;
    const auto seed_dist_sq = [&](const Hypothesis& a, const Hypothesis& b) {
        const double da = angle_diff(a.delta_theta, b.delta_theta);
        return distance_sq(a.delta_t, b.delta_t) + lambda_sq * da * da;
    };

    std::vector<std::size_t> chosen;
    chosen.reserve(n_seeds);
    std::vector<double> min_dist_sq(hyps.size(), std::numeric_limits<double>::infinity());
    const auto add_seed = [&](std::size_t idx) {
        chosen.push_back(idx);
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            min_dist_sq[j] = std::min(min_dist_sq[j], seed_dist_sq(hyps[j], hyps[idx]));
        }
    };

    std::uniform_int_distribution<std::size_t> uniform_idx(0, hyps.size() - 1);
    while (chosen.size() < n_seeds) {
        if (chosen.size() < n_uniform || chosen.empty()) {
            add_seed(uniform_idx(rng));
            continue;
        }
        const double total = std::accumulate(min_dist_sq.begin(), min_dist_sq.end(), 0.0);
        if (!(total > 0.0)) {
            // All hypotheses coincide with some seed; distance weighting
            // degenerates to uniform.
            add_seed(uniform_idx(rng));
            continue;
        }
        std::discrete_distribution<std::size_t> weighted(min_dist_sq.begin(),
                                                         min_dist_sq.end());
        add_seed(weighted(rng));
    }

    std::vector<Cluster> seeds;
    seeds.reserve(chosen.size());
    for (std::size_t idx : chosen) {
        Cluster c;
        c.mu = hyps[idx].delta_t;
        c.sigma = Cov2::isotropic(params.sigma0 * params.sigma0);
        c.theta = hyps[idx].delta_theta;
        c.kappa = params.kappa0;
        seeds.push_back(c);
    }
    return seeds;
}

/// Iteratively mean-shift every seed over the hypothesis set. A seed stops
/// when its translational and rotational shifts stay below d_thr/r_thr for
/// stable_iters consecutive iterations, or after max_iterations. Dead
/// clusters are dropped; all clusters dying is an error.
inline std::vector<Cluster> refine(const std::vector<Cluster>& seeds,
                                   const std::vector<Hypothesis>& hyps,
                                   const ClusterParams& params) {
    validate(params);
    if (seeds.empty()) throw std::invalid_argument("refine: no seeds");
    if (hyps.empty()) throw std::invalid_argument("refine: no hypotheses");
    const detail::HypothesisCache cache(hyps);
    std::vector<double> w;
    std::vector<Cluster> out;
    out.reserve(seeds.size());
    for (const Cluster& seed : seeds) {
        Cluster c = seed;
        bool alive = true;
        std::size_t stable = 0;
        for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
            const std::optional<Cluster> next =
                detail::update_cluster_cached(c, cache, params.regularization_eps, w);
            if (!next) {
                alive = false;
                break;
            }
            const double shift_t = distance(next->mu, c.mu);
            const double shift_r = std::abs(angle_diff(next->theta, c.theta));
            c = *next;
            if (shift_t < params.d_thr && shift_r < params.r_thr) {
                if (++stable >= params.stable_iters) break;
            } else {
                stable = 0;
            }
        }
        if (alive) out.push_back(c);
    }
    if (out.empty()) throw std::runtime_error("refine: all clusters died");
    return out;
}

/// Fuse clusters linked (directly or transitively) by sub-threshold pairwise
/// distances: connected components of the link graph, each replaced by the
/// unweighted mean of its members (circular mean for theta). Repeats until
/// the merged means are themselves pairwise beyond the thresholds.
inline std::vector<Cluster> merge_connected(std::vector<Cluster> clusters,
                                            const ClusterParams& params) {
    while (clusters.size() > 1) {
        const std::size_t n = clusters.size();
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        const auto find = [&](std::size_t i) {
            while (parent[i] != i) {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            return i;
        };
        bool linked = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (distance(clusters[i].mu, clusters[j].mu) < params.merge_dist &&
                    std::abs(angle_diff(clusters[i].theta, clusters[j].theta)) <
                        params.merge_angle) {
                    const std::size_t ri = find(i);
                    const std::size_t rj = find(j);
                    if (ri != rj) {
                        parent[std::max(ri, rj)] = std::min(ri, rj);
                        linked = true;
                    }
                }
            }
        }
        if (!linked) break;

        // Components keyed by root, emitted in order of their lowest index.
        std::vector<Cluster> merged;
        std::vector<int> slot(n, -1);
        std::vector<std::size_t> count;
        std::vector<double> sum_sin, sum_cos;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t root = find(i);
            if (slot[root] < 0) {
                slot[root] = static_cast<int>(merged.size());
                merged.push_back(Cluster{{0.0, 0.0}, {0.0, 0.0, 0.0}, 0.0, 0.0, 0});
                count.push_back(0);
                sum_sin.push_back(0.0);
                sum_cos.push_back(0.0);
            }
            Cluster& m = merged[static_cast<std::size_t>(slot[root])];
            const Cluster& c = clusters[i];
            m.mu = m.mu + c.mu;
            m.sigma.xx += c.sigma.xx;
            m.sigma.xy += c.sigma.xy;
            m.sigma.yy += c.sigma.yy;
            m.kappa += c.kappa;
            m.members += c.members;
            count[static_cast<std::size_t>(slot[root])] += 1;
            sum_sin[static_cast<std::size_t>(slot[root])] += std::sin(c.theta);
            sum_cos[static_cast<std::size_t>(slot[root])] += std::cos(c.theta);
        }
        for (std::size_t g = 0; g < merged.size(); ++g) {
            const double inv = 1.0 / static_cast<double>(count[g]);
            merged[g].mu = merged[g].mu * inv;
            merged[g].sigma.xx *= inv;
            merged[g].sigma.xy *= inv;
            merged[g].sigma.yy *= inv;
            merged[g].kappa *= inv;
            merged[g].theta = normalize_angle(std::atan2(sum_sin[g], sum_cos[g]));
        }
        clusters = std::move(merged);
    }
    return clusters;
}

/// Rank cluster transforms by alignment quality. Each candidate transform is
/// applied to the whole current scan; its Average Squared Residual is the
/// mean squared distance to the nearest reference point, with each per-point
/// distance clamped to asr_cap so that points occluded in the other scan
/// cannot drown out the overlap region. Weights are proportional to 1/ASR
/// and normalized to sum 1. A perfect alignment (ASR == 0) takes all the
/// weight.
inline MatchResult weight_clusters(const std::vector<Cluster>& clusters,
                                   const CartesianScan& current,
                                   const CartesianScan& reference,
                                   double asr_cap = 1.0) {
    if (clusters.empty()) throw std::invalid_argument("weight_clusters: no clusters");
    if (current.empty() || reference.empty()) {
        throw std::invalid_argument("weight_clusters: empty scan");
    }
    const double cap_sq = asr_cap * asr_cap;
    std::vector<double> asr(clusters.size(), 0.0);
    std::size_t n_zero = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const Transform2 t{clusters[i].mu, clusters[i].theta};
        double sum = 0.0;
        for (const Point2& p : current.points()) {
            sum += std::min(reference.nearest_dist_sq(apply_transform(t, p)), cap_sq);
        }
        asr[i] = sum / static_cast<double>(current.size());
        if (asr[i] == 0.0) ++n_zero;
    }

    MatchResult result;
    result.candidates.resize(clusters.size());
    double total = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        result.candidates[i].transform = {clusters[i].mu, clusters[i].theta};
        if (n_zero > 0) {
            result.candidates[i].weight = asr[i] == 0.0 ? 1.0 / static_cast<double>(n_zero) : 0.0;
        } else {
            result.candidates[i].weight = 1.0 / asr[i];
            total += result.candidates[i].weight;
        }
    }
    if (n_zero == 0) {
        for (TransformCandidate& c : result.candidates) c.weight /= total;
    }
    std::stable_sort(result.candidates.begin(), result.candidates.end(),
                     [](const TransformCandidate& a, const TransformCandidate& b) {
                         return a.weight > b.weight;
                     });
    return result;
}

/// Full pipeline: Monte-Carlo hypothesis generation, seeding, mean-shift
/// refinement, connected-component merging, ASR weighting. Deterministic
/// given gen.rng_seed and clus.rng_seed.
inline MatchResult match_scans(const CartesianScan& current, const CartesianScan& reference,
                               const GenParams& gen, const ClusterParams& clus) {
    const std::vector<Hypothesis> hyps = generate_hypotheses(current, reference, gen);
    const std::vector<Cluster> seeds = seed_clusters(hyps, clus, clus.rng_seed);
    const std::vector<Cluster> refined = refine(seeds, hyps, clus);
    const std::vector<Cluster> merged = merge_connected(refined, clus);
    return weight_clusters(merged, current, reference, clus.asr_cap);
}

}  // namespace mhsm

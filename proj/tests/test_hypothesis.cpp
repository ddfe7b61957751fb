#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "mhsm/hypothesis.hpp"
#include "mhsm/simulator.hpp"

using namespace mhsm;

namespace {

CartesianScan transformed_copy(const std::vector<Point2>& pts, const Transform2& t) {
    std::vector<Point2> out;
    out.reserve(pts.size());
    for (const Point2& p : pts) out.push_back(apply_transform(t, p));
    return CartesianScan(std::move(out));
}

PolarScan room_scan(const Pose2& pose, double noise_std, std::uint64_t seed) {
    SensorModel sensor;
    sensor.noise_std = noise_std;
    sensor.rng_seed = seed;
    return raytrace_scan(rectangle_room(6.0, 4.0), pose, sensor);
}

}  // namespace

TEST_CASE("pair_hypothesis self-match yields the identity") {
    const std::vector<Point2> pts{{1.0, 0.0}, {1.2, 0.1}, {3.0, 3.0}, {-2.0, 1.0}};
    const CartesianScan scan(pts);
    const auto h = pair_hypothesis(pts[0], pts[1], pts[0], scan);
    REQUIRE(h.has_value());
    CHECK(h->delta_t.norm() == Catch::Approx(0.0).margin(1e-12));
    CHECK(h->delta_theta == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pair_hypothesis recovers a pure translation") {
    const std::vector<Point2> pts{{1.0, 0.0}, {1.2, 0.1}, {3.0, 3.0}, {-2.0, 1.0}};
    const Transform2 shift{{0.0, -0.5}, 0.0};
    const CartesianScan ref = transformed_copy(pts, shift);
    const auto h = pair_hypothesis(pts[0], pts[1], ref.points()[0], ref);
    REQUIRE(h.has_value());
    CHECK(h->delta_t.x == Catch::Approx(0.0).margin(1e-12));
    CHECK(h->delta_t.y == Catch::Approx(-0.5).margin(1e-12));
    CHECK(h->delta_theta == Catch::Approx(0.0).margin(1e-12));
    // psi is the unit normal of the matched reference segment
    const Point2 seg = ref.points()[1] - ref.points()[0];
    CHECK(h->psi.dot(seg) == Catch::Approx(0.0).margin(1e-12));
    CHECK(h->psi.norm() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pair_hypothesis recovers a pure rotation") {
    const std::vector<Point2> pts{{1.0, 0.0}, {1.2, 0.1}, {3.0, 3.0}, {-2.0, 1.0}};
    const Transform2 turn{{0.0, 0.0}, kPi / 4.0};
    const CartesianScan ref = transformed_copy(pts, turn);
    const auto h = pair_hypothesis(pts[0], pts[1], ref.points()[0], ref);
    REQUIRE(h.has_value());
    CHECK(h->delta_theta == Catch::Approx(kPi / 4.0).epsilon(1e-12));
    CHECK(h->delta_t.norm() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("pair_hypothesis rejects a degenerate reference pair") {
    const CartesianScan lone(std::vector<Point2>{{5.0, 5.0}});
    const auto h = pair_hypothesis({0.0, 0.0}, {0.2, 0.0}, {5.0, 5.0}, lone);
    CHECK_FALSE(h.has_value());
}

TEST_CASE("generated hypotheses have unit psi and wrapped angles") {
    const CartesianScan cur = polar_to_cartesian(room_scan({0.3, 0.2, 0.1}, 0.01, 5));
    const CartesianScan ref = polar_to_cartesian(room_scan({0.25, 0.0, 0.0}, 0.01, 6));
    GenParams params;
    params.n_hypotheses = 400;
    params.rng_seed = 17;
    const std::vector<Hypothesis> hyps = generate_hypotheses(cur, ref, params);
    REQUIRE(hyps.size() >= params.n_hypotheses);
    REQUIRE(hyps.size() <= params.n_hypotheses + params.k - 1);
    for (const Hypothesis& h : hyps) {
        CHECK(h.psi.norm() == Catch::Approx(1.0).epsilon(1e-9));
        CHECK(h.delta_theta > -kPi);
        CHECK(h.delta_theta <= kPi);
        // canonical axis representative
        CHECK((h.psi.x > 0.0 || (h.psi.x == 0.0 && h.psi.y >= 0.0)));
    }
}

TEST_CASE("generation is deterministic for a fixed seed") {
    const CartesianScan cur = polar_to_cartesian(room_scan({0.0, 0.0, 0.0}, 0.01, 7));
    const CartesianScan ref = polar_to_cartesian(room_scan({0.1, -0.2, 0.05}, 0.01, 8));
    GenParams params;
    params.n_hypotheses = 200;
    params.rng_seed = 99;
    const auto a = generate_hypotheses(cur, ref, params);
    const auto b = generate_hypotheses(cur, ref, params);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].delta_t.x == b[i].delta_t.x);
        CHECK(a[i].delta_t.y == b[i].delta_t.y);
        CHECK(a[i].delta_theta == b[i].delta_theta);
        CHECK(a[i].psi.x == b[i].psi.x);
        CHECK(a[i].psi.y == b[i].psi.y);
    }
    params.rng_seed = 100;
    const auto c = generate_hypotheses(cur, ref, params);
    bool any_diff = c.size() != a.size();
    for (std::size_t i = 0; !any_diff && i < a.size(); ++i) {
        any_diff = a[i].delta_t.x != c[i].delta_t.x;
    }
    CHECK(any_diff);
}

TEST_CASE("generation fails with a diagnostic when no pairs exist") {
    // two points 10 m apart cannot satisfy d_max = 0.5
    const CartesianScan sparse(std::vector<Point2>{{0.0, 0.0}, {10.0, 0.0}});
    GenParams params;
    params.n_hypotheses = 10;
    CHECK_THROWS_AS(generate_hypotheses(sparse, sparse, params), std::runtime_error);
}

TEST_CASE("self-match hypotheses pile up at zero displacement") {
    const CartesianScan scan = polar_to_cartesian(room_scan({0.3, 0.2, 0.0}, 0.0, 0));
    GenParams params;
    params.n_hypotheses = 100;
    params.rng_seed = 3;
    const std::vector<Hypothesis> hyps = generate_hypotheses(scan, scan, params);
    REQUIRE(hyps.size() >= 100);
    std::size_t at_zero = 0;
    for (const Hypothesis& h : hyps) {
        if (h.delta_t.norm() < 0.02 && std::abs(h.delta_theta) < 0.01) ++at_zero;
    }
    // the exact self-correspondence is always among the K candidates
    CHECK(static_cast<double>(at_zero) / static_cast<double>(hyps.size()) > 0.2);
}

TEST_CASE("hypothesis cloud shows the two wall bands of a pure translation") {
    // reference taken at rest, current after sliding (0, -0.5): front/back
    // wall matches form a band at delta_t.y = -0.5; side-wall matches slide
    // and form a band at delta_t.x = 0.
    const Pose2 ref_pose{0.0, 0.1, 0.0};
    const Pose2 cur_pose = advance(ref_pose, {{0.0, -0.5}, 0.0});

    for (double noise : {0.0, 0.01}) {
        const CartesianScan ref = polar_to_cartesian(room_scan(ref_pose, noise, 21));
        const CartesianScan cur = polar_to_cartesian(room_scan(cur_pose, noise, 22));
        GenParams params;
        params.n_hypotheses = 2000;
        params.rng_seed = 11;
        const std::vector<Hypothesis> hyps = generate_hypotheses(cur, ref, params);
        std::size_t horizontal = 0, vertical = 0;
        for (const Hypothesis& h : hyps) {
            if (std::abs(h.delta_theta) > 5.0 * kPi / 180.0) continue;
            if (std::abs(h.delta_t.y + 0.5) < 0.05) ++horizontal;
            if (std::abs(h.delta_t.x) < 0.05 && h.delta_t.y > -0.6 && h.delta_t.y < 0.1) {
                ++vertical;
            }
        }
        const double n = static_cast<double>(hyps.size());
        INFO("noise=" << noise << " horizontal=" << horizontal << " vertical=" << vertical);
        CHECK(static_cast<double>(horizontal) / n > 0.05);
        CHECK(static_cast<double>(vertical) / n > 0.05);
    }
}

TEST_CASE("contribution weighting collapses uninformative side-wall hypotheses") {
    const Pose2 ref_pose{0.0, 0.1, 0.0};
    const Pose2 cur_pose = advance(ref_pose, {{0.0, -0.5}, 0.0});
    const CartesianScan ref = polar_to_cartesian(room_scan(ref_pose, 0.01, 31));
    const CartesianScan cur = polar_to_cartesian(room_scan(cur_pose, 0.01, 32));
    GenParams params;
    params.n_hypotheses = 2000;
    params.rng_seed = 13;
    const std::vector<Hypothesis> hyps = generate_hypotheses(cur, ref, params);

    // Pre-weighting band near-zero x, clearly nonzero y. It holds two
    // populations: side-wall matches (contribution axis along x), which carry
    // no y-information and must collapse to the origin, and front/back-wall
    // matches (axis along y), which carry the true displacement and must stay
    // at y = -0.5.
    double side_sum = 0.0, front_sum = 0.0;
    std::size_t side = 0, front = 0;
    for (const Hypothesis& h : hyps) {
        if (!(std::abs(h.delta_t.x) < 0.05 && std::abs(h.delta_t.y) > 0.1)) continue;
        const Point2 proj = h.psi * h.psi.dot(h.delta_t);
        if (h.psi.x > std::abs(h.psi.y)) {
            side_sum += std::abs(proj.y);
            ++side;
        } else {
            front_sum += std::abs(proj.y + 0.5);
            ++front;
        }
    }
    REQUIRE(side > 20);
    REQUIRE(front > 20);
    CHECK(side_sum / static_cast<double>(side) < 0.05);
    CHECK(front_sum / static_cast<double>(front) < 0.05);
}

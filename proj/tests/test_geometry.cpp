#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mhsm/geometry.hpp"

using namespace mhsm;

TEST_CASE("rotate identity and axis cases") {
    const Point2 p{1.0, 0.0};
    const Point2 r0 = rotate(p, 0.0);
    CHECK(r0.x == Catch::Approx(1.0));
    CHECK(r0.y == Catch::Approx(0.0));
    const Point2 r90 = rotate(p, kPi / 2.0);
    CHECK(r90.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(r90.y == Catch::Approx(1.0));
}

TEST_CASE("rotate matches direct matrix evaluation") {
    // cos(0.4)*0.3 - sin(0.4)*(-0.7), sin(0.4)*0.3 + cos(0.4)*(-0.7)
    const Point2 r = rotate({0.3, -0.7}, 0.4);
    CHECK(r.x == Catch::Approx(0.5489111378169209).epsilon(1e-12));
    CHECK(r.y == Catch::Approx(-0.5279171931094243).epsilon(1e-12));
}

TEST_CASE("rotate preserves the Euclidean norm") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> ang(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        const Point2 p{coord(rng), coord(rng)};
        const Point2 r = rotate(p, ang(rng));
        CHECK(r.norm() == Catch::Approx(p.norm()).epsilon(1e-12));
    }
}

TEST_CASE("apply_transform basic cases") {
    const Point2 a = apply_transform(Transform2{}, {2.0, 3.0});
    CHECK(a.x == Catch::Approx(2.0));
    CHECK(a.y == Catch::Approx(3.0));

    // pure translation (0, -0.5) applied to a sample point
    const Point2 b = apply_transform({{0.0, -0.5}, 0.0}, {1.0, 1.0});
    CHECK(b.x == Catch::Approx(1.0));
    CHECK(b.y == Catch::Approx(0.5));

    // quarter turn then unit shift along x
    const Point2 c = apply_transform({{1.0, 0.0}, kPi / 2.0}, {1.0, 0.0});
    CHECK(c.x == Catch::Approx(1.0).margin(1e-15));
    CHECK(c.y == Catch::Approx(1.0));
}

TEST_CASE("transform inverse round-trips random points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const Transform2 t{{coord(rng), coord(rng)}, ang(rng)};
        const Point2 p{coord(rng), coord(rng)};
        const Point2 back = apply_transform(inverse(t), apply_transform(t, p));
        CHECK(back.x == Catch::Approx(p.x).margin(1e-9));
        CHECK(back.y == Catch::Approx(p.y).margin(1e-9));
    }
}

TEST_CASE("compose chains transforms") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const Transform2 t1{{coord(rng), coord(rng)}, ang(rng)};
        const Transform2 t2{{coord(rng), coord(rng)}, ang(rng)};
        const Point2 p{coord(rng), coord(rng)};
        const Point2 direct = apply_transform(t2, apply_transform(t1, p));
        const Point2 chained = apply_transform(compose(t2, t1), p);
        CHECK(chained.x == Catch::Approx(direct.x).margin(1e-9));
        CHECK(chained.y == Catch::Approx(direct.y).margin(1e-9));
    }
}

TEST_CASE("angle_diff wraps into (-pi, pi]") {
    CHECK(angle_diff(0.1, -0.1) == Catch::Approx(0.2));
    CHECK(angle_diff(kPi - 0.05, -kPi + 0.05) == Catch::Approx(-0.1));
    CHECK(angle_diff(2.31, 2.31) == 0.0);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ang(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double d = angle_diff(ang(rng), ang(rng));
        CHECK(d > -kPi);
        CHECK(d <= kPi);
    }
    // exact boundary: pi stays pi, -pi maps to pi
    CHECK(normalize_angle(kPi) == Catch::Approx(kPi));
    CHECK(normalize_angle(-kPi) == Catch::Approx(kPi));
}

TEST_CASE("relative_pose frame composition") {
    const Transform2 id = relative_pose({1.0, 2.0, 0.7}, {1.0, 2.0, 0.7});
    CHECK(id.translation.norm() == Catch::Approx(0.0).margin(1e-15));
    CHECK(id.rotation == Catch::Approx(0.0).margin(1e-15));

    const Transform2 fwd = relative_pose({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
    CHECK(fwd.translation.x == Catch::Approx(1.0));
    CHECK(fwd.translation.y == Catch::Approx(0.0));
    CHECK(fwd.rotation == Catch::Approx(0.0));

    // heading +90 degrees, world motion +1 in y: forward motion in a's frame
    const Transform2 up = relative_pose({0.0, 0.0, kPi / 2.0}, {0.0, 1.0, kPi / 2.0});
    CHECK(up.translation.x == Catch::Approx(1.0));
    CHECK(up.translation.y == Catch::Approx(0.0).margin(1e-15));
    CHECK(up.rotation == Catch::Approx(0.0));
}

TEST_CASE("advance is the inverse of relative_pose") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const Pose2 a{coord(rng), coord(rng), ang(rng)};
        const Transform2 motion{{coord(rng), coord(rng)}, ang(rng)};
        const Pose2 b = advance(a, motion);
        const Transform2 rel = relative_pose(a, b);
        CHECK(rel.translation.x == Catch::Approx(motion.translation.x).margin(1e-9));
        CHECK(rel.translation.y == Catch::Approx(motion.translation.y).margin(1e-9));
        CHECK(angle_diff(rel.rotation, motion.rotation) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("transforming a scan point between sensor frames") {
    // A world point seen from pose b maps into pose a's frame through
    // relative_pose(a, b).
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const Pose2 a{coord(rng), coord(rng), ang(rng)};
        const Pose2 b{coord(rng), coord(rng), ang(rng)};
        const Point2 world{coord(rng), coord(rng)};
        const Point2 in_a = rotate({world.x - a.x, world.y - a.y}, -a.theta);
        const Point2 in_b = rotate({world.x - b.x, world.y - b.y}, -b.theta);
        const Point2 mapped = apply_transform(relative_pose(a, b), in_b);
        CHECK(mapped.x == Catch::Approx(in_a.x).margin(1e-9));
        CHECK(mapped.y == Catch::Approx(in_a.y).margin(1e-9));
    }
}

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "mhsm/carmen.hpp"
#include "mhsm/simulator.hpp"

using namespace mhsm;

TEST_CASE("FLASER lines map directly onto records") {
    std::istringstream in(
        "FLASER 3 1.0 2.0 3.0 0.1 0.2 0.05 0.1 0.2 0.05 1.5 host 1.5\n");
    const CarmenLog log = parse_carmen_log(in);
    REQUIRE(log.records.size() == 1);
    CHECK(log.malformed_lines == 0);
    const LaserRecord& r = log.records[0];
    REQUIRE(r.ranges.size() == 3);
    CHECK(r.ranges[0] == 1.0);
    CHECK(r.ranges[1] == 2.0);
    CHECK(r.ranges[2] == 3.0);
    CHECK(r.laser_pose.x == 0.1);
    CHECK(r.laser_pose.y == 0.2);
    CHECK(r.laser_pose.theta == 0.05);
    CHECK(r.odom_pose.x == 0.1);
    CHECK(r.timestamp == 1.5);
}

TEST_CASE("other line types are skipped silently") {
    std::istringstream in(
        "# carmen log\n"
        "PARAM robot_frontlaser_offset 0.08\n"
        "ODOM 1.0 2.0 0.3 0.5 0.1 0.0 4.2 host 4.2\n"
        "FLASER 2 1.0 2.0 0 0 0 0 0 0 5.0 host 5.0\n");
    const CarmenLog log = parse_carmen_log(in);
    CHECK(log.records.size() == 1);
    CHECK(log.malformed_lines == 0);
}

TEST_CASE("malformed FLASER lines are counted, not fatal") {
    std::istringstream in(
        "FLASER 2 1.0\n"                                                // truncated
        "FLASER 2 1.0 2.0 0 0 0 0 0 0 5.0 host 5.0 extra\n"             // too long
        "FLASER 2 1.0 oops 0 0 0 0 0 0 5.0 host 5.0\n"                  // bad number
        "FLASER 2 -1.0 2.0 0 0 0 0 0 0 5.0 host 5.0\n"                  // negative range
        "FLASER x 1.0 2.0 0 0 0 0 0 0 5.0 host 5.0\n"                   // bad count
        "FLASER 2 1.0 2.0 0.1 0.2 0.3 0.4 0.5 0.6 7.0 host 7.0\n");     // good
    const CarmenLog log = parse_carmen_log(in);
    CHECK(log.records.size() == 1);
    CHECK(log.malformed_lines == 5);
    CHECK(log.records[0].laser_pose.theta == 0.3);
}

TEST_CASE("write then parse reproduces every numeric field exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    std::uniform_real_distribution<double> rdist(0.0, 80.0);
    std::vector<LaserRecord> records;
    for (int i = 0; i < 20; ++i) {
        LaserRecord r;
        const std::size_t n = 2 + static_cast<std::size_t>(i) % 7;
        for (std::size_t j = 0; j < n; ++j) r.ranges.push_back(rdist(rng));
        r.laser_pose = {val(rng), val(rng), val(rng)};
        r.odom_pose = {val(rng), val(rng), val(rng)};
        r.timestamp = 1e9 + val(rng);
        records.push_back(std::move(r));
    }
    std::ostringstream out;
    write_carmen_log(out, records);
    std::istringstream in(out.str());
    const CarmenLog log = parse_carmen_log(in);
    CHECK(log.malformed_lines == 0);
    REQUIRE(log.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(log.records[i].ranges.size() == records[i].ranges.size());
        for (std::size_t j = 0; j < records[i].ranges.size(); ++j) {
            CHECK(log.records[i].ranges[j] == records[i].ranges[j]);
        }
        CHECK(log.records[i].laser_pose.x == records[i].laser_pose.x);
        CHECK(log.records[i].laser_pose.y == records[i].laser_pose.y);
        CHECK(log.records[i].laser_pose.theta == records[i].laser_pose.theta);
        CHECK(log.records[i].odom_pose.x == records[i].odom_pose.x);
        CHECK(log.records[i].odom_pose.y == records[i].odom_pose.y);
        CHECK(log.records[i].odom_pose.theta == records[i].odom_pose.theta);
        CHECK(log.records[i].timestamp == records[i].timestamp);
    }

    // a second serialization is byte-identical
    std::ostringstream out2;
    write_carmen_log(out2, log.records);
    CHECK(out2.str() == out.str());
}

TEST_CASE("beam angles span 180 degrees ending at +90") {
    LaserRecord r;
    r.ranges = {1.0, 1.0, 1.0, 1.0, 1.0};
    const PolarScan scan = to_polar_scan(r);
    REQUIRE(scan.readings.size() == 5);
    CHECK(scan.readings.front().angle == Catch::Approx(-kPi / 2.0));
    CHECK(scan.readings.back().angle == Catch::Approx(kPi / 2.0));
    CHECK(scan.readings[2].angle == Catch::Approx(0.0).margin(1e-15));
    for (std::size_t i = 1; i < 5; ++i) {
        CHECK(scan.readings[i].angle - scan.readings[i - 1].angle ==
              Catch::Approx(kPi / 4.0));
    }
}

TEST_CASE("ranges at or beyond max_range are clamped and droppable") {
    LaserRecord r;
    r.ranges = {1.0, 81.9, 83.0};
    const PolarScan scan = to_polar_scan(r);
    CHECK(scan.readings[1].range == Catch::Approx(81.9));
    CHECK(scan.readings[2].range == Catch::Approx(81.9));
    CHECK(polar_to_cartesian(scan, true).size() == 1);
}

TEST_CASE("relative_truth identity and frame handling") {
    LaserRecord a, b;
    a.laser_pose = {0.0, 0.0, 0.0};
    b.laser_pose = {1.0, 0.0, 0.0};
    const Transform2 fwd = relative_truth(a, b);
    CHECK(fwd.translation.x == Catch::Approx(1.0));
    CHECK(fwd.translation.y == Catch::Approx(0.0));
    CHECK(fwd.rotation == Catch::Approx(0.0));

    const Transform2 id = relative_truth(a, a);
    CHECK(id.translation.norm() == Catch::Approx(0.0).margin(1e-15));
    CHECK(id.rotation == 0.0);

    // heading +90, forward motion along world +y
    LaserRecord c, d;
    c.laser_pose = {0.0, 0.0, kPi / 2.0};
    d.laser_pose = {0.0, 1.0, kPi / 2.0};
    const Transform2 up = relative_truth(c, d);
    CHECK(up.translation.x == Catch::Approx(1.0));
    CHECK(up.translation.y == Catch::Approx(0.0).margin(1e-15));

    // odometry field selection
    c.odom_pose = {0.0, 0.0, 0.0};
    d.odom_pose = {0.0, 1.0, 0.0};
    const Transform2 odo = relative_truth(c, d, true);
    CHECK(odo.translation.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(odo.translation.y == Catch::Approx(1.0));
}

TEST_CASE("relative_truth composes along a chain") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> val(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        LaserRecord a, b, c;
        a.laser_pose = {val(rng), val(rng), val(rng)};
        b.laser_pose = {val(rng), val(rng), val(rng)};
        c.laser_pose = {val(rng), val(rng), val(rng)};
        const Transform2 ab = relative_truth(a, b);
        const Transform2 bc = relative_truth(b, c);
        const Transform2 ac = relative_truth(a, c);
        const Transform2 chained = compose(ab, bc);
        CHECK(chained.translation.x == Catch::Approx(ac.translation.x).margin(1e-9));
        CHECK(chained.translation.y == Catch::Approx(ac.translation.y).margin(1e-9));
        CHECK(angle_diff(chained.rotation, ac.rotation) ==
              Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("simulator output round-trips through the parser") {
    SensorModel sensor;
    sensor.n_beams = 181;
    sensor.fov = kPi;
    sensor.max_range = 81.9;
    sensor.noise_std = 0.01;
    const Environment office = office_floorplan();
    const std::vector<Pose2> poses = random_trajectory(office, 5, 3);
    std::vector<LaserRecord> records;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        SensorModel s = sensor;
        s.rng_seed = 100 + i;
        const PolarScan scan = raytrace_scan(office, poses[i], s);
        LaserRecord rec;
        for (const PolarReading& r : scan.readings) rec.ranges.push_back(r.range);
        rec.laser_pose = poses[i];
        rec.odom_pose = poses[i];
        rec.timestamp = 0.1 * static_cast<double>(i);
        records.push_back(std::move(rec));
    }
    std::stringstream stream;
    write_carmen_log(stream, records);
    const CarmenLog log = parse_carmen_log(stream);
    CHECK(log.malformed_lines == 0);
    REQUIRE(log.records.size() == poses.size());
    // the parsed scan reproduces the raytraced geometry through the shared
    // beam convention
    const PolarScan back = to_polar_scan(log.records[2]);
    SensorModel s2 = sensor;
    s2.rng_seed = 102;
    const PolarScan direct = raytrace_scan(office, poses[2], s2);
    REQUIRE(back.readings.size() == direct.readings.size());
    for (std::size_t i = 0; i < back.readings.size(); ++i) {
        CHECK(back.readings[i].range == direct.readings[i].range);
        CHECK(back.readings[i].angle == Catch::Approx(direct.readings[i].angle).margin(1e-12));
    }
}

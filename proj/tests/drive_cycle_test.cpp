#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "iptm/drive_cycle.hpp"
#include "iptm/errors.hpp"
#include "iptm/params.hpp"

using namespace iptm;

namespace {

const RoadLoadParams& road() {
    static const RoadLoadParams r = default_config().road_load;
    return r;
}

std::string write_temp_csv(const std::string& name, const std::string& body) {
    const std::string path = std::string("/tmp/") + name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("traction_power: zero at standstill") {
    CHECK(traction_power(0.0, 0.0, road()) == 0.0);
    CHECK(traction_power(0.0, 1.0, road()) == 0.0);
}

TEST_CASE("traction_power: road load only at constant 10 m/s") {
    // Hand arithmetic with the documented coefficients:
    // F = 1530*9.81*0.009 + 0.5*1.34*0.58*100 = 135.0837 + 38.86 N.
    const double f_roll = 1530.0 * 9.81 * 0.009;
    const double f_aero = 0.5 * 1.34 * 0.58 * 100.0;
    CHECK(traction_power(10.0, 0.0, road()) == doctest::Approx((f_roll + f_aero) * 10.0).epsilon(1e-12));
}

TEST_CASE("traction_power: hard braking capped at the regeneration floor") {
    const double p = traction_power(10.0, -2.0, road());
    CHECK(p == road().regen_floor_w);
}

TEST_CASE("traction_power is continuous in v and a") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> v_dist(0.0, 15.0);
    std::uniform_real_distribution<double> a_dist(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double v = v_dist(rng), a = a_dist(rng), h = 1e-6;
        const double p0 = traction_power(v, a, road());
        CHECK(std::abs(traction_power(v + h, a, road()) - p0) < 1.0);
        CHECK(std::abs(traction_power(v, a + h, road()) - p0) < 1.0);
    }
}

TEST_CASE("load_cycle: standstill cycle has zero power") {
    const std::string path = write_temp_csv("iptm_zero.csv",
                                            "time_s,speed_mps\n0,0\n1,0\n2,0\n3,0\n4,0\n5,0\n6,0\n7,0\n8,0\n9,0\n10,0\n");
    const DriveCycle c = load_cycle(path, road());
    CHECK(c.samples() == 11);
    CHECK(c.duration() == 10.0);
    for (double p : c.p_trac) CHECK(p == 0.0);
}

TEST_CASE("load_cycle: constant speed matches the road-load hand value") {
    std::string body = "time_s,speed_mps\n";
    for (int t = 0; t <= 20; ++t) body += std::to_string(t) + ",10\n";
    const DriveCycle c = load_cycle(write_temp_csv("iptm_const.csv", body), road());
    const double expected = traction_power(10.0, 0.0, road());
    for (std::size_t k = 0; k + 1 < c.samples(); ++k)
        CHECK(c.p_trac[k] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("load_cycle: resampling preserves endpoints and the convex hull") {
    const std::string path =
        write_temp_csv("iptm_sparse.csv", "time_s,speed_mps\n0,0\n2.5,5\n5,2\n10,8\n");
    const DriveCycle c = load_cycle(path, road());
    CHECK(c.samples() == 11);
    CHECK(c.v.front() == 0.0);
    CHECK(c.v.back() == 8.0);
    CHECK(c.v[1] == doctest::Approx(2.0));  // linear between (0,0) and (2.5,5)
    // Interpolated samples never overshoot the hull of their neighbors.
    for (std::size_t k = 0; k < c.samples(); ++k) {
        CHECK(c.v[k] >= 0.0);
        CHECK(c.v[k] <= 8.0);
    }
}

TEST_CASE("load_cycle: accepts an explicit power column") {
    const std::string path = write_temp_csv(
        "iptm_power.csv", "time_s,speed_mps,p_trac_w\n0,0,0\n1,2,4000\n2,4,8000\n3,4,2000\n4,0,-5000\n");
    const DriveCycle c = load_cycle(path, road());
    CHECK(c.p_trac[1] == 4000.0);
    CHECK(c.p_trac[4] == -5000.0);
}

TEST_CASE("load_cycle: malformed inputs raise typed errors") {
    CHECK_THROWS_AS(load_cycle(write_temp_csv("iptm_bad1.csv", "speed,time\n0,0\n"), road()), MalformedCsv);
    CHECK_THROWS_AS(load_cycle(write_temp_csv("iptm_bad2.csv", "time_s,speed_mps\n0,0\n2,1\n1,2\n"), road()),
                    NonMonotoneTime);
    CHECK_THROWS_AS(load_cycle(write_temp_csv("iptm_bad3.csv", "time_s,speed_mps\n0,0\n1,-3\n"), road()),
                    NegativeSpeed);
    CHECK_THROWS_AS(load_cycle(write_temp_csv("iptm_bad4.csv", "time_s,speed_mps\n0,0\n1,abc\n"), road()),
                    MalformedCsv);
    CHECK_THROWS_AS(load_cycle("/nonexistent/file.csv", road()), MalformedCsv);
}

TEST_CASE("bundled congested cycle: duration and congestion signature") {
    const DriveCycle c = load_cycle(IPTM_DATA_DIR "/congested_city_960s.csv", road());
    CHECK(c.duration() == 960.0);
    CHECK(c.samples() == 961);

    double v_sum = 0.0;
    std::size_t zeros = 0;
    for (double v : c.v) {
        v_sum += v;
        if (v == 0.0) ++zeros;
    }
    CHECK(v_sum / static_cast<double>(c.samples()) < 8.0);
    CHECK(static_cast<double>(zeros) / static_cast<double>(c.samples()) > 0.20);

    // The long stop used by the thermal study.
    for (std::size_t k = 820; k <= 900; ++k) CHECK(c.v[k] == 0.0);

    // No residual power demand at standstill.
    for (std::size_t k = 0; k < c.samples(); ++k)
        if (c.v[k] == 0.0) CHECK(c.p_trac[k] == 0.0);

    // Demands stay within what the surrogate powertrain can deliver.
    for (std::size_t k = 0; k < c.samples(); ++k) {
        CHECK(c.p_trac[k] >= road().regen_floor_w);
        CHECK(c.p_trac[k] <= 30000.0);
    }
}

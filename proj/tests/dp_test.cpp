#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "iptm/dp.hpp"
#include "iptm/errors.hpp"
#include "toy_oracle.hpp"

using namespace iptm;

namespace {

const Config& cfg() {
    static const Config c = default_config();
    return c;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

DriveCycle constant_cycle(std::size_t steps, double p_trac) {
    DriveCycle c;
    c.t.resize(steps + 1);
    c.v.assign(steps + 1, 5.0);
    c.p_trac.assign(steps + 1, p_trac);
    for (std::size_t k = 0; k <= steps; ++k) c.t[k] = static_cast<double>(k);
    return c;
}

DpProblem small_thermal_problem(std::size_t steps, double p_trac) {
    DpProblem pb;
    pb.formulation = Formulation::ThermalDp;
    pb.cycle = constant_cycle(steps, p_trac);
    pb.params = cfg().vehicle;
    // The grid box doubles as the state constraint set: the coolant axis must
    // reach past the radiator threshold or the hot boundary has no feasible
    // control and its infinite cost floods the grid, one cell per layer.
    pb.grid.soc = AxisSpec{0.5, 0.02, 0.7};
    pb.grid.t_cl = AxisSpec{20.0, 5.0, 105.0};
    pb.grid.t_cab = AxisSpec{18.0, 2.0, 24.0};
    pb.grid.p_bat = AxisSpec{-10000.0, 2500.0, 10000.0};
    pb.grid.q_heat = AxisSpec{1500.0, 50.0, 1500.0};
    pb.q_heat_fixed = 1500.0;
    pb.terminal = TerminalSpec{0.6, 40.0, 18.0, 600.0, 2.0, 0.0};
    pb.initial_state = PowertrainState{0.6, 50.0, 18.0};
    pb.workers = 1;
    return pb;
}

}  // namespace

TEST_CASE("axis: node lookup and cell location") {
    const Axis ax = AxisSpec{0.5, 0.01, 0.7}.to_axis("soc");
    CHECK(ax.count == 21);
    CHECK(ax.at(0) == 0.5);
    CHECK(ax.max() == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(ax.nearest(0.5549) == 5);
    CHECK(ax.nearest(0.999) == 20);   // clamped
    CHECK(ax.nearest(-1.0) == 0);
    int i0 = -1;
    double f = -1.0;
    ax.locate(0.505, i0, f);
    CHECK(i0 == 0);
    CHECK(f == doctest::Approx(0.5).epsilon(1e-9));
    const AxisSpec misaligned{0.0, 0.3, 1.0};
    CHECK_THROWS_AS(misaligned.to_axis("bad"), ConfigError);
}

TEST_CASE("interpolation: exact on nodes, mean at midpoints") {
    StateGrid g;
    g.ndim = 1;
    g.axes[0] = AxisSpec{0.0, 1.0, 4.0}.to_axis("x");
    const std::vector<double> layer{10.0, 20.0, 40.0, 80.0, 160.0};
    CHECK(interpolate_value(g, layer, {2.0, 0, 0}) == 40.0);
    CHECK(interpolate_value(g, layer, {2.5, 0, 0}) == doctest::Approx(60.0).epsilon(1e-12));
    // Clamped outside the box.
    CHECK(interpolate_value(g, layer, {-5.0, 0, 0}) == 10.0);
    CHECK(interpolate_value(g, layer, {9.0, 0, 0}) == 160.0);
}

TEST_CASE("interpolation: bilinear hand computation at quarter offsets") {
    StateGrid g;
    g.ndim = 2;
    g.axes[0] = AxisSpec{0.0, 1.0, 1.0}.to_axis("x");
    g.axes[1] = AxisSpec{0.0, 1.0, 1.0}.to_axis("y");
    // Corner layout [x][y]: (0,0)=1, (0,1)=2, (1,0)=3, (1,1)=5.
    const std::vector<double> layer{1.0, 2.0, 3.0, 5.0};
    // Query at (0.25, 0.75): rows give 1*(0.25)... four-corner formula by hand:
    // (1-.25)(1-.75)*1 + (1-.25)(.75)*2 + (.25)(1-.75)*3 + (.25)(.75)*5 = 2.4375
    CHECK(interpolate_value(g, layer, {0.25, 0.75, 0}) == doctest::Approx(2.4375).epsilon(1e-12));
}

TEST_CASE("interpolation: infinity propagates through touched corners only") {
    StateGrid g;
    g.ndim = 1;
    g.axes[0] = AxisSpec{0.0, 1.0, 2.0}.to_axis("x");
    const std::vector<double> layer{5.0, kInf, 7.0};
    CHECK(interpolate_value(g, layer, {0.0, 0, 0}) == 5.0);   // on-node, inf neighbor untouched
    CHECK(interpolate_value(g, layer, {2.0, 0, 0}) == 7.0);
    CHECK(std::isinf(interpolate_value(g, layer, {0.5, 0, 0})));
    CHECK(std::isinf(interpolate_value(g, layer, {1.0, 0, 0})));
}

TEST_CASE("candidates: deterministic order, balance for off/idle") {
    DpProblem pb = small_thermal_problem(3, 6000.0);
    const auto cands = build_candidates(pb, 0);
    REQUIRE(cands.size() == 2 + 9);  // off, idle, 9 battery-power nodes
    CHECK(cands[0].mode == EngineMode::Off);
    CHECK(cands[1].mode == EngineMode::Idle);
    CHECK(cands[0].p_bat == doctest::Approx(balance_battery_power(6000.0, pb.params)).epsilon(1e-15));
    CHECK(cands[0].p_bat == cands[1].p_bat);
    for (std::size_t i = 2; i < cands.size(); ++i) {
        CHECK(cands[i].mode == EngineMode::On);
        CHECK(cands[i].q_heat == 1500.0);
    }
    // Same k twice gives the same list.
    const auto again = build_candidates(pb, 0);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        CHECK(cands[i].p_bat == again[i].p_bat);
        CHECK(cands[i].p_e == again[i].p_e);
    }
}

TEST_CASE("stage_transition: off covering demand exactly costs nothing") {
    DpProblem pb = small_thermal_problem(3, 4000.0);
    const auto cands = build_candidates(pb, 0);
    const StageOutcome off = stage_transition(pb.initial_state, cands[0], 0, pb);
    REQUIRE(off.feasible);
    CHECK(off.stage_cost == 0.0);
    const StageOutcome idle = stage_transition(pb.initial_state, cands[1], 0, pb);
    REQUIRE(idle.feasible);
    CHECK(idle.stage_cost == doctest::Approx(pb.params.engine.w_idle * pb.params.t_s).epsilon(1e-15));
}

TEST_CASE("stage_transition: infeasible split propagates as infeasibility") {
    DpProblem pb = small_thermal_problem(3, 30000.0);  // beyond battery-only delivery
    const auto cands = build_candidates(pb, 0);
    CHECK_FALSE(cands[0].split_ok);  // balance power above p_bat_max
}

TEST_CASE("dp equals exhaustive enumeration on randomized toy instances") {
    std::mt19937 rng(2024);
    const auto t0 = std::chrono::steady_clock::now();
    int finite_checked = 0;
    for (int i = 0; finite_checked < 22 && i < 60; ++i) {
        const Formulation f = (i % 3 == 0) ? Formulation::BaselineDp : Formulation::ThermalDp;
        DpProblem pb = iptm_test::make_toy_problem(cfg(), rng, f);
        StateGrid grid;
        grid.ndim = state_dims(f);
        grid.axes[0] = pb.grid.soc.to_axis("soc");
        if (grid.ndim >= 2) grid.axes[1] = pb.grid.t_cl.to_axis("t_cl");
        const double brute = iptm_test::enumerate_cost_to_go(pb, grid, pb.initial_state, 0);
        if (!std::isfinite(brute)) {
            // Both routes must agree on infeasibility.
            CHECK_THROWS_AS(solve(pb), NoFeasibleControl);
            continue;
        }
        const DpSolution sol = solve(pb);
        CHECK(std::abs(sol.value - brute) <= 1e-9 * std::max(1.0, std::abs(brute)));
        ++finite_checked;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(finite_checked >= 22);
    CHECK(secs < 10.0);
}

TEST_CASE("dp with a single feasible control equals the summed stage costs") {
    DpProblem pb = small_thermal_problem(2, 30000.0);
    pb.grid.p_bat = AxisSpec{5000.0, 500.0, 5000.0};  // one On candidate; off/idle infeasible
    pb.snap_to_grid = true;
    pb.initial_state = PowertrainState{0.6, 50.0, 18.0};
    const DpSolution sol = solve(pb);

    double expected = 0.0;
    PowertrainState x = pb.initial_state;
    for (std::size_t k = 0; k < 2; ++k) {
        const auto cands = build_candidates(pb, k);
        REQUIRE(cands.size() == 3);
        REQUIRE_FALSE(cands[0].split_ok);
        REQUIRE_FALSE(cands[1].split_ok);
        const StageOutcome out = stage_transition(x, cands[2], k, pb);
        REQUIRE(out.feasible);
        expected += out.stage_cost;
        x = out.successor;
    }
    expected += pb.terminal.cost(pb.formulation, x.soc, x.t_cl, x.t_cab);
    CHECK(sol.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("dp reachability: engine off everywhere, terminal penalty on soc only") {
    DpProblem pb;
    pb.formulation = Formulation::BaselineDp;
    pb.cycle = constant_cycle(5, 0.0);
    pb.params = cfg().vehicle;
    pb.grid.soc = AxisSpec{0.5, 0.01, 0.7};
    pb.grid.t_cl = AxisSpec{20.0, 5.0, 80.0};
    pb.grid.t_cab = AxisSpec{18.0, 2.0, 24.0};
    pb.grid.p_bat = AxisSpec{-6000.0, 6000.0, 6000.0};
    pb.grid.q_heat = AxisSpec{1500.0, 50.0, 1500.0};
    pb.q_heat_fixed = 1500.0;
    pb.terminal = TerminalSpec{0.6, 0.0, 0.0, 1.0, 0.0, 0.0};  // small weight: charging never pays
    pb.initial_state = PowertrainState{0.6, 60.0, 18.0};
    pb.workers = 1;
    const DpSolution sol = solve(pb);

    // Closest reachable SOC: drain the auxiliary load for five steps.
    PowertrainState x = pb.initial_state;
    for (std::size_t k = 0; k < 5; ++k) {
        const ControlInput u{EngineMode::Off, balance_battery_power(0.0, pb.params), 1500.0};
        x = step(x, u, 0.0, pb.params).next;
    }
    const double expected = 1.0 * (0.6 - x.soc);
    CHECK(sol.value == doctest::Approx(expected).epsilon(1e-6));
    for (std::size_t k = 0; k < sol.rollout.steps(); ++k)
        CHECK(sol.rollout.mode[k] == static_cast<int>(EngineMode::Off));
}

TEST_CASE("value layers are monotone in remaining horizon without terminal cost") {
    DpProblem pb = small_thermal_problem(12, 3000.0);
    pb.terminal = TerminalSpec{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const DpSolution sol = solve(pb);
    for (std::size_t k = 0; k + 1 <= sol.horizon; ++k) {
        for (std::size_t n = 0; n < sol.grid.nodes(); ++n) {
            const float earlier = sol.values[k][n];
            const float later = sol.values[k + 1][n];
            if (std::isinf(later)) continue;
            CHECK(earlier >= later - 1e-4f);
        }
    }
}

TEST_CASE("bellman consistency holds at stored tables") {
    DpProblem pb = small_thermal_problem(10, 5000.0);
    const DpSolution sol = solve(pb);
    std::mt19937 rng(5);
    std::uniform_int_distribution<std::size_t> k_dist(0, sol.horizon - 1);
    std::uniform_int_distribution<std::size_t> n_dist(0, sol.grid.nodes() - 1);
    for (int i = 0; i < 50; ++i) {
        const std::size_t k = k_dist(rng);
        const std::size_t n = n_dist(rng);
        const double res = bellman_residual(pb, sol, k, n);
        const double scale = std::isinf(sol.values[k][n]) ? 1.0 : std::abs(sol.values[k][n]);
        CHECK(res <= 1e-3 + 1e-5 * std::max(1.0, scale));
    }
}

TEST_CASE("formulation nesting: collapsed heating grid reproduces the 2-state value") {
    DpProblem thermal = small_thermal_problem(60, 4000.0);
    const DpSolution sol2 = solve(thermal);

    DpProblem cabin = thermal;
    cabin.formulation = Formulation::ThermalCabinDp;
    cabin.grid.q_heat = AxisSpec{1500.0, 50.0, 1500.0};  // collapsed to the fixed value
    cabin.grid.t_cab = AxisSpec{0.0, 8.0, 40.0};         // non-binding cabin bounds
    cabin.terminal.w_t_cab = 0.0;
    const DpSolution sol3 = solve(cabin);

    CHECK(sol3.value == doctest::Approx(sol2.value).epsilon(1e-9));
}

TEST_CASE("worker count never changes the result") {
    DpProblem pb = small_thermal_problem(20, 6000.0);
    pb.workers = 1;
    const DpSolution s1 = solve(pb);
    pb.workers = 2;
    const DpSolution s2 = solve(pb);
    pb.workers = 8;
    const DpSolution s8 = solve(pb);
    CHECK(s1.value == s2.value);
    CHECK(s1.value == s8.value);
    CHECK(s1.policy == s2.policy);
    CHECK(s1.policy == s8.policy);
    CHECK(s1.rollout.fuel_total_g == s8.rollout.fuel_total_g);
    for (std::size_t k = 0; k <= s1.horizon; ++k) CHECK(s1.values[k] == s8.values[k]);
}

TEST_CASE("ties break toward the lowest control index") {
    // Two identical On candidates can't exist on one grid, but off/idle share
    // p_bat; verify determinism by re-solving.
    DpProblem pb = small_thermal_problem(8, 2000.0);
    const DpSolution a = solve(pb);
    const DpSolution b = solve(pb);
    CHECK(a.policy == b.policy);
    CHECK(a.value == b.value);
}

TEST_CASE("an impossible demand yields NoFeasibleControl") {
    DpProblem pb = small_thermal_problem(3, 90000.0);  // beyond engine + battery
    CHECK_THROWS_AS(solve(pb), NoFeasibleControl);
}

TEST_CASE("policy save/load roundtrip preserves the rollout") {
    DpProblem pb = small_thermal_problem(15, 4500.0);
    const DpSolution sol = solve(pb);
    const std::string path = "/tmp/iptm_policy_test.bin";
    save_policy(pb, sol, path);
    LoadedPolicy lp = load_policy(path, pb.params);
    CHECK(lp.cycle_steps == pb.cycle.steps());
    CHECK(lp.checksum == cycle_checksum(pb.cycle));
    CHECK(lp.solution.value == sol.value);
    CHECK(lp.solution.policy == sol.policy);
    lp.problem.cycle = pb.cycle;
    const SimTrace replayed = rollout_policy(lp.problem, lp.solution, lp.problem.initial_state, "x");
    CHECK(replayed.fuel_total_g == sol.rollout.fuel_total_g);
    CHECK(replayed.soc == sol.rollout.soc);
    CHECK(replayed.t_cl == sol.rollout.t_cl);
}

TEST_CASE("grid overrides parse and reject junk") {
    GridSpec g = GridSpec::from_config(cfg());
    g.apply_override("t_cab_step", 2.0);
    CHECK(g.t_cab.step == 2.0);
    g.apply_override("q_heat_min", 1500.0);
    CHECK(g.q_heat.min == 1500.0);
    CHECK_THROWS_AS(g.apply_override("bogus_step", 1.0), ConfigError);
    CHECK_THROWS_AS(g.apply_override("soc_banana", 1.0), ConfigError);
}

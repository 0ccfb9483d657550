#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "iptm/drive_cycle.hpp"
#include "iptm/params.hpp"
#include "iptm/rule_based.hpp"
#include "iptm/sim.hpp"

using namespace iptm;

namespace {

const Config& cfg() {
    static const Config c = default_config();
    return c;
}

ControlInput decide_once(const PowertrainState& x, double p_trac, bool& latch) {
    return rule_decide(x, p_trac, cfg().vehicle, cfg().rules, cfg().q_heat_fixed, latch);
}

}  // namespace

TEST_CASE("cold coolant at standstill forces idle") {
    bool latch = false;
    const ControlInput u = decide_once(PowertrainState{0.6, 35.0, 18.0}, 0.0, latch);
    CHECK(u.mode == EngineMode::Idle);
    CHECK(latch);
    CHECK(u.q_heat == cfg().q_heat_fixed);
}

TEST_CASE("warm coolant, no demand, mid-band soc: engine off") {
    bool latch = false;
    const ControlInput u = decide_once(PowertrainState{0.6, 80.0, 18.0}, 0.0, latch);
    CHECK(u.mode == EngineMode::Off);
    CHECK_FALSE(latch);
}

TEST_CASE("depleted battery with moderate demand: engine on and charging") {
    bool latch = false;
    const ControlInput u = decide_once(PowertrainState{0.53, 80.0, 18.0}, 5000.0, latch);
    CHECK(u.mode == EngineMode::On);
    CHECK(u.p_bat < 0.0);  // battery absorbs the charge bias
}

TEST_CASE("high traction demand forces the engine on regardless of soc") {
    bool latch = false;
    const ControlInput u = decide_once(PowertrainState{0.66, 80.0, 18.0}, 15000.0, latch);
    CHECK(u.mode == EngineMode::On);
}

TEST_CASE("idle latch holds through the hysteresis band") {
    bool latch = false;
    decide_once(PowertrainState{0.6, 39.0, 18.0}, 0.0, latch);
    CHECK(latch);
    // Warmer than the trigger but below the release: still idling.
    const ControlInput u1 = decide_once(PowertrainState{0.6, 43.0, 18.0}, 0.0, latch);
    CHECK(u1.mode == EngineMode::Idle);
    CHECK(latch);
    // At the release threshold the latch clears.
    const ControlInput u2 = decide_once(PowertrainState{0.6, 45.0, 18.0}, 0.0, latch);
    CHECK(u2.mode == EngineMode::Off);
    CHECK_FALSE(latch);
    // Decaying back from above does not re-latch until the trigger.
    decide_once(PowertrainState{0.6, 41.0, 18.0}, 0.0, latch);
    CHECK_FALSE(latch);
}

TEST_CASE("mode On takes priority over the idle latch") {
    bool latch = true;
    const ControlInput u = decide_once(PowertrainState{0.6, 38.0, 18.0}, 20000.0, latch);
    CHECK(u.mode == EngineMode::On);
}

TEST_CASE("decide is a pure function of (state, demand, latch)") {
    for (bool latch0 : {false, true}) {
        bool l1 = latch0, l2 = latch0;
        const PowertrainState x{0.57, 42.0, 18.0};
        const ControlInput a = decide_once(x, 4000.0, l1);
        const ControlInput b = decide_once(x, 4000.0, l2);
        CHECK(a.mode == b.mode);
        CHECK(a.p_bat == b.p_bat);
        CHECK(l1 == l2);
    }
}

TEST_CASE("bundled cycle: charge sustenance and thermal floor") {
    const DriveCycle cycle = load_cycle(IPTM_DATA_DIR "/congested_city_960s.csv", cfg().road_load);
    RuleBasedController ctrl(cfg().rules, cfg().vehicle, cycle, cfg().q_heat_fixed);
    const PowertrainState x0{cfg().initial_soc, cfg().initial_t_cl, cfg().initial_t_cab};
    StateBounds bounds = StateBounds::from_params(cfg().vehicle);
    bounds.soc_tol = cfg().soc_step;
    bounds.t_cl_tol = cfg().t_cl_step;
    bounds.t_cab_tol = cfg().t_cab_step;
    const SimTrace tr = simulate(ctrl, cycle, cfg().vehicle, x0, bounds, "rule-based");

    CHECK(ctrl.infeasible_demand_count() == 0);
    CHECK(tr.final_state.soc >= cfg().rules.soc_low - 0.02);
    CHECK(tr.final_state.soc <= cfg().rules.soc_high + 0.02);
    // Initial coolant is already above the release threshold, so the floor
    // applies to the whole trace.
    for (double t : tr.t_cl) CHECK(t >= cfg().rules.t_cl_idle_on - 2.0);
    CHECK(tr.constraint_violations == 0);
    CHECK(tr.fuel_total_g > 0.0);
}

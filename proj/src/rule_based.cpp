#include "iptm/rule_based.hpp"

#include <algorithm>
#include <cstdio>

namespace iptm {

namespace {

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

}  // namespace

ControlInput rule_decide(const PowertrainState& state, double p_trac, const VehicleParams& params,
                         const RuleParams& rules, double q_heat_fixed, bool& idle_latch,
                         bool* infeasible_demand) {
    const BatteryParams& bat = params.battery;
    if (infeasible_demand) *infeasible_demand = false;

    // Idle-latch update. Engagement requires low demand ("small" means the
    // battery-only band below the engine-on threshold); release happens at
    // the hysteresis temperature or whenever mode On takes over below.
    if (idle_latch) {
        if (state.t_cl >= rules.t_cl_idle_off) idle_latch = false;
    } else if (state.t_cl < rules.t_cl_idle_on && p_trac <= rules.p_trac_on) {
        idle_latch = true;
    }

    const bool on_demand = state.soc < rules.soc_low || p_trac > rules.p_trac_on;
    if (on_demand) {
        // Load leveling: engine covers traction plus a charge bias that tapers
        // to zero at the top of the SOC band.
        const double charge_factor = clamp((rules.soc_high - state.soc) / (rules.soc_high - rules.soc_low), 0.0, 1.0);
        double p_e = std::max(p_trac, 0.0) + rules.p_charge * charge_factor;
        if (p_e > 0.0) {
            p_e = std::min(p_e, params.engine.p_e_max);
            double p_bat = motor_elec_power(p_trac - p_e, params.eta_mg) + bat.p_aux;
            if (p_bat < bat.p_bat_min) {
                // Battery cannot absorb that much charge: back the engine off.
                p_bat = bat.p_bat_min;
                p_e = p_trac - motor_mech_power(p_bat - bat.p_aux, params.eta_mg);
            } else if (p_bat > bat.p_bat_max) {
                // Demand beyond engine + battery: deliver the maximum and log.
                p_bat = bat.p_bat_max;
                p_e = p_trac - motor_mech_power(p_bat - bat.p_aux, params.eta_mg);
                if (p_e > params.engine.p_e_max) {
                    if (infeasible_demand) *infeasible_demand = true;
                }
            }
            if (p_e > 0.0) return ControlInput{EngineMode::On, p_bat, q_heat_fixed};
            // Regeneration swallowed the charge request; fall through.
        }
    }

    const double balance = balance_battery_power(p_trac, params);
    if (idle_latch && balance >= bat.p_bat_min && balance <= bat.p_bat_max)
        return ControlInput{EngineMode::Idle, balance, q_heat_fixed};
    if (balance >= bat.p_bat_min && balance <= bat.p_bat_max)
        return ControlInput{EngineMode::Off, balance, q_heat_fixed};

    // Battery alone cannot meet the demand; run the engine at the shortfall.
    if (infeasible_demand) *infeasible_demand = true;
    const double p_bat = clamp(balance, bat.p_bat_min, bat.p_bat_max);
    return ControlInput{EngineMode::On, p_bat, q_heat_fixed};
}

ControlInput RuleBasedController::decide(std::size_t k, const PowertrainState& state) {
    bool infeasible = false;
    const ControlInput u =
        rule_decide(state, cycle_->p_trac.at(k), *params_, rules_, q_heat_, latch_, &infeasible);
    if (infeasible) {
        ++infeasible_demands_;
        std::fprintf(stderr, "rule-based: demand %.0f W at t=%zu s exceeds engine+battery limits, clamped\n",
                     cycle_->p_trac.at(k), k);
    }
    return u;
}

}  // namespace iptm

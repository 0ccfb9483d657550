#include "iptm/model.hpp"

#include <cmath>
#include <string>

#include "iptm/errors.hpp"

namespace iptm {

PowertrainState PowertrainState::make(double soc, double t_cl, double t_cab) {
    if (!(soc >= 0.0 && soc <= 1.0))
        throw Error("PowertrainState: soc " + std::to_string(soc) + " outside [0,1]");
    if (!std::isfinite(t_cl) || !std::isfinite(t_cab))
        throw Error("PowertrainState: temperatures must be finite");
    return PowertrainState{soc, t_cl, t_cab};
}

PowertrainState make_initial_state(double soc, double t_cl, double t_cab, const VehicleParams& params) {
    PowertrainState s = PowertrainState::make(soc, t_cl, t_cab);
    if (t_cl < params.t_amb)
        throw Error("initial coolant temperature below ambient");
    return s;
}

StepStatus try_power_split(double p_trac, EngineMode mode, double p_bat, const VehicleParams& params,
                           double& p_e_out) noexcept {
    const BatteryParams& bat = params.battery;
    if (p_bat < bat.p_bat_min || p_bat > bat.p_bat_max) return StepStatus::infeasible_split;

    const double p_e = engine_power_from_split(p_trac, p_bat, params);
    if (mode == EngineMode::Off || mode == EngineMode::Idle) {
        // The motor must cover positive demand exactly. While braking it may
        // absorb anywhere between none and all of the regeneration; friction
        // brakes take the remainder (not modeled as energy).
        if (p_e > kSplitToleranceW) return StepStatus::infeasible_split;
        if (p_e < std::min(p_trac, 0.0) - kSplitToleranceW) return StepStatus::infeasible_split;
        p_e_out = 0.0;
        return StepStatus::ok;
    }
    // On
    if (!(p_e > 0.0) || p_e > params.engine.p_e_max) return StepStatus::infeasible_split;
    p_e_out = p_e;
    return StepStatus::ok;
}

double power_split(double p_trac, EngineMode mode, double p_bat, const VehicleParams& params) {
    double p_e = 0.0;
    const StepStatus st = try_power_split(p_trac, mode, p_bat, params, p_e);
    if (st != StepStatus::ok)
        throw InfeasibleSplit("power_split: (" + std::string(to_string(mode)) + ", p_bat=" +
                              std::to_string(p_bat) + " W) cannot meet p_trac=" + std::to_string(p_trac) + " W");
    return p_e;
}

StepStatus try_soc_derivative(double soc, double p_bat, const BatteryParams& battery, double& d_soc) noexcept {
    if (!battery.u_oc.covers(soc) || !battery.r_int.covers(soc)) return StepStatus::soc_out_of_table;
    const double u_oc = battery.u_oc(soc);
    const double r_int = battery.r_int(soc);
    const double disc = u_oc * u_oc - 4.0 * r_int * p_bat;
    if (disc < 0.0) return StepStatus::discriminant_negative;
    d_soc = -(u_oc - std::sqrt(disc)) / (2.0 * r_int * battery.c_bat);
    return StepStatus::ok;
}

double soc_derivative(double soc, double p_bat, const BatteryParams& battery) {
    double d = 0.0;
    switch (try_soc_derivative(soc, p_bat, battery, d)) {
        case StepStatus::ok: return d;
        case StepStatus::soc_out_of_table:
            throw SocOutOfTable("soc_derivative: soc " + std::to_string(soc) + " outside table range");
        default:
            throw DiscriminantNegative("soc_derivative: p_bat " + std::to_string(p_bat) +
                                       " W beyond deliverable power at soc " + std::to_string(soc));
    }
}

StepStatus try_fuel_rate(EngineMode mode, double p_e, double t_cl, const VehicleParams& params,
                         double& w_f) noexcept {
    switch (mode) {
        case EngineMode::Off:
            w_f = 0.0;
            return StepStatus::ok;
        case EngineMode::Idle:
            w_f = params.engine.w_idle;
            return StepStatus::ok;
        case EngineMode::On:
            if (!(p_e > 0.0)) return StepStatus::negative_engine_power;
            w_f = params.maps.w_f_line(p_e) * params.maps.f_cl(t_cl);
            return StepStatus::ok;
    }
    return StepStatus::negative_engine_power;
}

double fuel_rate(EngineMode mode, double p_e, double t_cl, const VehicleParams& params) {
    double w_f = 0.0;
    if (try_fuel_rate(mode, p_e, t_cl, params, w_f) != StepStatus::ok)
        throw NegativeEnginePower("fuel_rate: mode On requires p_e > 0, got " + std::to_string(p_e));
    return w_f;
}

double coolant_derivative_from_fuel(double t_cl, double p_e, double w_f, double q_heat,
                                    const VehicleParams& params, CoolantHeatFlows* flows) noexcept {
    const EngineThermalParams& eng = params.engine;
    const double q_fuel = eng.lhv * w_f;
    const double q_exh = eng.gamma_exh * (q_fuel - p_e);
    const double t_com = compartment_temperature(t_cl, params);
    const double q_air = (t_cl - t_com) * eng.a_eng_alpha_eng;
    const double q_rad = params.maps.q_rad(t_cl);
    if (flows) *flows = CoolantHeatFlows{q_fuel, q_exh, q_air, q_rad};
    return (q_fuel - p_e - q_exh - q_air - q_rad - q_heat) / eng.m_eng_c_eng;
}

double coolant_derivative(double t_cl, EngineMode mode, double p_e, double q_heat,
                          const VehicleParams& params, CoolantHeatFlows* flows) {
    const double w_f = fuel_rate(mode, p_e, t_cl, params);
    return coolant_derivative_from_fuel(t_cl, p_e, w_f, q_heat, params, flows);
}

double cabin_derivative(double t_cab, double q_heat, const VehicleParams& params) noexcept {
    const CabinParams& cab = params.cabin;
    const double q_load = cab.ua_cab * (params.t_amb - t_cab);
    return (q_heat + q_load + cab.q_sun) / cab.m_cab_c_cab;
}

StepStatus try_step(const PowertrainState& state, const ControlInput& u, double p_trac,
                    const VehicleParams& params, StepResult& out) noexcept {
    double p_e = 0.0;
    StepStatus st = try_power_split(p_trac, u.mode, u.p_bat, params, p_e);
    if (st != StepStatus::ok) return st;

    double d_soc = 0.0;
    st = try_soc_derivative(state.soc, u.p_bat, params.battery, d_soc);
    if (st != StepStatus::ok) return st;

    double w_f = 0.0;
    st = try_fuel_rate(u.mode, p_e, state.t_cl, params, w_f);
    if (st != StepStatus::ok) return st;

    const double d_t_cl = coolant_derivative_from_fuel(state.t_cl, p_e, w_f, u.q_heat, params, &out.flows);
    const double d_t_cab = cabin_derivative(state.t_cab, u.q_heat, params);

    const double ts = params.t_s;
    out.next.soc = state.soc + ts * d_soc;
    out.next.t_cl = state.t_cl + ts * d_t_cl;
    out.next.t_cab = state.t_cab + ts * d_t_cab;
    out.fuel_used = w_f * ts;
    out.p_e = p_e;
    out.w_f = w_f;
    out.d_soc = d_soc;
    out.d_t_cl = d_t_cl;
    out.d_t_cab = d_t_cab;
    return StepStatus::ok;
}

StepResult step(const PowertrainState& state, const ControlInput& u, double p_trac,
                const VehicleParams& params) {
    StepResult out;
    const StepStatus st = try_step(state, u, p_trac, params, out);
    switch (st) {
        case StepStatus::ok: return out;
        case StepStatus::infeasible_split:
            throw InfeasibleSplit("step: infeasible (mode, p_bat) for p_trac=" + std::to_string(p_trac));
        case StepStatus::discriminant_negative:
            throw DiscriminantNegative("step: battery cannot deliver p_bat=" + std::to_string(u.p_bat));
        case StepStatus::soc_out_of_table:
            throw SocOutOfTable("step: soc " + std::to_string(state.soc) + " outside table range");
        case StepStatus::negative_engine_power:
            throw NegativeEnginePower("step: mode On with non-positive engine power");
    }
    throw Error("step: unreachable");
}

}  // namespace iptm

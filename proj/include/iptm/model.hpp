#pragma once

#include <cmath>

#include "iptm/params.hpp"

namespace iptm {

// Engine operating mode, e_mode in {1,2,3}.
enum class EngineMode : int { Off = 1, Idle = 2, On = 3 };

inline const char* to_string(EngineMode m) {
    switch (m) {
        case EngineMode::Off: return "off";
        case EngineMode::Idle: return "idle";
        case EngineMode::On: return "on";
    }
    return "?";
}

struct PowertrainState {
    double soc = 0.6;    // fraction of capacity
    double t_cl = 20.0;  // engine coolant temperature, degC
    double t_cab = 20.0; // cabin air temperature, degC

    // Checked construction for states entering from user data.
    static PowertrainState make(double soc, double t_cl, double t_cab);
};

// Checked initial state: additionally requires t_cl >= ambient.
PowertrainState make_initial_state(double soc, double t_cl, double t_cab, const VehicleParams& params);

struct ControlInput {
    EngineMode mode = EngineMode::Off;
    double p_bat = 0.0;   // battery electrical power, W (positive = discharge)
    double q_heat = 0.0;  // cabin heating power drawn from the coolant, W
};

// Non-throwing status for the hot paths.
enum class StepStatus : int {
    ok = 0,
    infeasible_split,
    discriminant_negative,
    soc_out_of_table,
    negative_engine_power,
};

inline const char* to_string(StepStatus s) {
    switch (s) {
        case StepStatus::ok: return "ok";
        case StepStatus::infeasible_split: return "infeasible split";
        case StepStatus::discriminant_negative: return "discriminant negative";
        case StepStatus::soc_out_of_table: return "soc out of table";
        case StepStatus::negative_engine_power: return "negative engine power";
    }
    return "?";
}

// Off/Idle must balance the demanded traction with the motor alone; the
// residual engine power may differ from zero by at most this much.
inline constexpr double kSplitToleranceW = 1.0;

// --- power loop ------------------------------------------------------------

// Motor mechanical power delivered to the driveline for a given motor
// electrical power p_mg = p_bat - p_aux. Charging (p_mg < 0) absorbs more
// mechanical power than it stores.
inline double motor_mech_power(double p_mg, double eta_mg) noexcept {
    return p_mg >= 0.0 ? eta_mg * p_mg : p_mg / eta_mg;
}

// Inverse of motor_mech_power; exact on both branches.
inline double motor_elec_power(double p_mech, double eta_mg) noexcept {
    return p_mech >= 0.0 ? p_mech / eta_mg : p_mech * eta_mg;
}

// Battery power that makes the motor cover p_trac exactly (engine off/idle).
inline double balance_battery_power(double p_trac, const VehicleParams& p) noexcept {
    return motor_elec_power(p_trac, p.eta_mg) + p.battery.p_aux;
}

// Engine power implied by the power balance; feasibility of the (mode, p_bat)
// pair is the caller's check.
inline double engine_power_from_split(double p_trac, double p_bat, const VehicleParams& p) noexcept {
    return p_trac - motor_mech_power(p_bat - p.battery.p_aux, p.eta_mg);
}

StepStatus try_power_split(double p_trac, EngineMode mode, double p_bat, const VehicleParams& params,
                           double& p_e_out) noexcept;

// Throwing wrapper: returns the engine output power P_e, or raises
// InfeasibleSplit when (mode, p_bat) cannot meet p_trac.
double power_split(double p_trac, EngineMode mode, double p_bat, const VehicleParams& params);

// --- battery ---------------------------------------------------------------

StepStatus try_soc_derivative(double soc, double p_bat, const BatteryParams& battery, double& d_soc) noexcept;

// dSOC/dt in 1/s. Raises DiscriminantNegative when p_bat exceeds the
// deliverable power U_oc^2/(4 R_int), SocOutOfTable when soc leaves the maps.
double soc_derivative(double soc, double p_bat, const BatteryParams& battery);

// --- fuel ------------------------------------------------------------------

StepStatus try_fuel_rate(EngineMode mode, double p_e, double t_cl, const VehicleParams& params,
                         double& w_f) noexcept;

// Fuel rate in g/s. Off -> 0, Idle -> W_idle, On -> nominal line times the
// cold-temperature correction. Raises NegativeEnginePower for On with p_e <= 0.
double fuel_rate(EngineMode mode, double p_e, double t_cl, const VehicleParams& params);

// --- thermal loops ---------------------------------------------------------

struct CoolantHeatFlows {
    double q_fuel = 0.0;  // combustion heat release, W
    double q_exh = 0.0;   // exhaust loss, W
    double q_air = 0.0;   // convection to the engine compartment, W
    double q_rad = 0.0;   // radiator/fan rejection, W
};

// Engine compartment temperature: static blend between ambient and coolant.
inline double compartment_temperature(double t_cl, const VehicleParams& p) noexcept {
    return p.t_amb + p.engine.beta_com * (t_cl - p.t_amb);
}

// dT_cl/dt in degC/s given an already-computed fuel rate.
double coolant_derivative_from_fuel(double t_cl, double p_e, double w_f, double q_heat,
                                    const VehicleParams& params, CoolantHeatFlows* flows = nullptr) noexcept;

// dT_cl/dt in degC/s. Computes the mode's fuel rate internally.
double coolant_derivative(double t_cl, EngineMode mode, double p_e, double q_heat,
                          const VehicleParams& params, CoolantHeatFlows* flows = nullptr);

// dT_cab/dt in degC/s.
double cabin_derivative(double t_cab, double q_heat, const VehicleParams& params) noexcept;

// --- one-step discrete dynamics ---------------------------------------------

struct StepResult {
    PowertrainState next;
    double fuel_used = 0.0;  // g over the step
    // Diagnostics recorded for traces and energy bookkeeping.
    double p_e = 0.0;
    double w_f = 0.0;  // g/s
    CoolantHeatFlows flows;
    double d_soc = 0.0;   // 1/s
    double d_t_cl = 0.0;  // degC/s
    double d_t_cab = 0.0; // degC/s
};

StepStatus try_step(const PowertrainState& state, const ControlInput& u, double p_trac,
                    const VehicleParams& params, StepResult& out) noexcept;

// Forward-Euler advance of all three states by t_s. Raises the error of
// whichever sub-operation failed.
StepResult step(const PowertrainState& state, const ControlInput& u, double p_trac,
                const VehicleParams& params);

}  // namespace iptm

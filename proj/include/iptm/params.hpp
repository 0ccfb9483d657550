#pragma once

#include <string>

#include "iptm/table.hpp"

namespace iptm {

struct BatteryParams {
    double c_bat = 23400.0;   // charge capacity, coulombs
    Table1d u_oc;             // open-circuit voltage vs SOC, V
    Table1d r_int;            // internal resistance vs SOC, ohm
    double p_aux = 300.0;     // constant auxiliary electrical load, W
    double soc_min = 0.5;
    double soc_max = 0.7;
    double p_bat_min = -20000.0;  // W, negative = charge
    double p_bat_max = 25000.0;   // W, positive = discharge

    void validate() const;
};

struct EngineThermalParams {
    double m_eng_c_eng = 80000.0;   // lumped thermal capacitance, J/degC
    double lhv = 43500.0;           // fuel lower heating value, J/g
    double gamma_exh = 0.35;        // exhaust heat coefficient
    double a_eng_alpha_eng = 25.0;  // lumped convective conductance, W/degC
    double beta_com = 0.3;          // compartment temperature blend factor
    double w_idle = 0.16;           // idle fuel rate, g/s
    double t_cl_min = -15.0;        // degC, coolant state bounds
    double t_cl_max = 105.0;
    double t_rad_on = 95.0;     // radiator activation threshold, degC
    double t_cl_nominal = 90.0;  // warm temperature at which the cold correction is unity
    double p_e_max = 73000.0;    // engine power ceiling, W

    void validate() const;
};

struct FuelMaps {
    Table1d w_f_line;  // nominal fuel rate vs engine power on the optimal line, g/s vs W
    Table1d f_cl;      // cold-temperature correction factor vs coolant temperature
    Table1d q_rad;     // radiator heat rejection vs coolant temperature, W

    void validate(const EngineThermalParams& engine) const;
};

struct CabinParams {
    double m_cab_c_cab = 60000.0;  // cabin thermal capacitance, J/degC
    double ua_cab = 50.0;          // cabin shell conductance, W/degC
    double q_sun = 0.0;            // solar radiation heat, W
    double t_cab_lb = 18.0;        // comfort bounds, degC
    double t_cab_ub = 24.0;
    double q_heat_min = 1200.0;  // heating power envelope, W
    double q_heat_max = 1800.0;

    void validate() const;
};

struct VehicleParams {
    BatteryParams battery;
    EngineThermalParams engine;
    FuelMaps maps;
    CabinParams cabin;
    double eta_mg = 0.9;  // motor/generator electromechanical efficiency
    double t_amb = -10.0;  // ambient temperature, degC
    double t_s = 1.0;      // timestep, s

    void validate() const;
};

// Longitudinal road-load coefficients; only used when a drive cycle ships
// speed without a power column.
struct RoadLoadParams {
    double mass = 1530.0;           // kg
    double c_rr = 0.009;            // rolling resistance coefficient
    double cd_a = 0.58;             // drag area Cd*A, m^2
    double rho_air = 1.34;          // air density, kg/m^3
    double regen_floor_w = -20000.0;  // most negative traction power sent to the driveline, W

    void validate() const;
};

struct RuleParams {
    double soc_low = 0.57;   // charge-sustaining band
    double soc_high = 0.65;
    double p_trac_on = 12000.0;   // engine-on traction threshold, W
    double p_charge = 10000.0;    // engine charging power when on, W
    double t_cl_idle_on = 40.0;   // forced-idle coolant threshold, degC
    double t_cl_idle_off = 45.0;  // release threshold (hysteresis), degC

    void validate() const;
};

// Everything the JSON configuration file carries.
struct Config {
    VehicleParams vehicle;
    RoadLoadParams road_load;
    RuleParams rules;

    // Scenario defaults (overridable from the CLI).
    double q_heat_fixed = 1500.0;  // W
    double initial_soc = 0.6;
    double initial_t_cl = 60.0;
    double initial_t_cab = 18.0;

    // DP section defaults; grid mins/maxes derive from the parameter bounds.
    double soc_step = 0.01;
    double t_cl_step = 1.0;
    double t_cab_step = 1.0;
    double p_bat_step = 500.0;
    double q_heat_step = 50.0;
    std::string formulation = "thermal";
    double terminal_soc_target = 0.6;
    double terminal_t_cl_target = 40.0;
    double terminal_t_cab_target = 18.0;
    double terminal_w_soc = 600.0;   // g per unit SOC deficit
    double terminal_w_t_cl = 0.5;    // g per degC deficit
    double terminal_w_t_cab = 0.5;   // g per degC deficit

    void validate() const;
};

// Built-in defaults (the same values as data/default_params.json).
Config default_config();

Config load_config(const std::string& path);
void save_config(const Config& cfg, const std::string& path);

}  // namespace iptm

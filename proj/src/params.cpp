#include "iptm/params.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "iptm/errors.hpp"

namespace iptm {

namespace {

using json = nlohmann::ordered_json;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

Table1d table_from_json(const json& j, const std::string& name) {
    require(j.contains("breakpoints") && j.contains("values"),
            name + ": expected parallel 'breakpoints'/'values' arrays");
    return Table1d(j.at("breakpoints").get<std::vector<double>>(),
                   j.at("values").get<std::vector<double>>(), name);
}

json table_to_json(const Table1d& t) {
    return json{{"breakpoints", t.breakpoints()}, {"values", t.values()}};
}

// Read a scalar if present, keeping the compiled-in default otherwise.
template <typename T>
void get_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void BatteryParams::validate() const {
    require(c_bat > 0.0, "battery.c_bat must be > 0");
    require(p_aux >= 0.0, "battery.p_aux must be >= 0");
    require(soc_min >= 0.0 && soc_max <= 1.0 && soc_min < soc_max,
            "battery soc band must satisfy 0 <= soc_min < soc_max <= 1");
    require(p_bat_min < p_bat_max, "battery p_bat_min must be < p_bat_max");
    require(u_oc.covers(soc_min) && u_oc.covers(soc_max), "battery.u_oc table must cover the SOC band");
    require(r_int.covers(soc_min) && r_int.covers(soc_max), "battery.r_int table must cover the SOC band");
    for (double v : u_oc.values()) require(v > 0.0, "battery.u_oc values must be > 0");
    for (double v : r_int.values()) require(v > 0.0, "battery.r_int values must be > 0");
}

void EngineThermalParams::validate() const {
    require(m_eng_c_eng > 0.0, "engine.m_eng_c_eng must be > 0");
    require(lhv > 0.0, "engine.lhv must be > 0");
    require(gamma_exh > 0.0 && gamma_exh < 1.0, "engine.gamma_exh must be in (0,1)");
    require(a_eng_alpha_eng > 0.0, "engine.a_eng_alpha_eng must be > 0");
    require(beta_com >= 0.0 && beta_com <= 1.0, "engine.beta_com must be in [0,1]");
    require(w_idle > 0.0, "engine.w_idle must be > 0");
    require(t_cl_min < t_cl_max, "engine coolant bounds must satisfy t_cl_min < t_cl_max");
    require(t_rad_on < t_cl_max, "engine.t_rad_on must be below t_cl_max");
    require(p_e_max > 0.0, "engine.p_e_max must be > 0");
}

void FuelMaps::validate(const EngineThermalParams& engine) const {
    require(w_f_line.strictly_increasing_values(), "maps.w_f_line must be strictly increasing");
    require(w_f_line.values().front() > 0.0, "maps.w_f_line must be positive as P_e -> 0+");
    require(w_f_line.covers(engine.p_e_max) || w_f_line.x_max() >= engine.p_e_max,
            "maps.w_f_line must cover up to p_e_max");
    require(f_cl.non_increasing_values(), "maps.f_cl must be non-increasing in temperature");
    for (double v : f_cl.values()) require(v >= 1.0, "maps.f_cl values must be >= 1");
    require(std::abs(f_cl(engine.t_cl_nominal) - 1.0) < 1e-12, "maps.f_cl must equal 1 at t_cl_nominal");
    require(q_rad.non_decreasing_values(), "maps.q_rad must be non-decreasing");
    require(q_rad(engine.t_rad_on) == 0.0, "maps.q_rad must be 0 at/below t_rad_on");
    require(q_rad.x_min() >= engine.t_rad_on, "maps.q_rad breakpoints must start at t_rad_on");
}

void CabinParams::validate() const {
    require(m_cab_c_cab > 0.0, "cabin.m_cab_c_cab must be > 0");
    require(ua_cab > 0.0, "cabin.ua_cab must be > 0");
    require(t_cab_lb < t_cab_ub, "cabin comfort bounds must satisfy t_cab_lb < t_cab_ub");
    require(q_heat_min <= q_heat_max, "cabin.q_heat_min must be <= q_heat_max");
    require(q_heat_min >= 0.0, "cabin.q_heat_min must be >= 0");
}

void VehicleParams::validate() const {
    battery.validate();
    engine.validate();
    maps.validate(engine);
    cabin.validate();
    require(eta_mg > 0.0 && eta_mg <= 1.0, "vehicle.eta_mg must be in (0,1]");
    require(t_s > 0.0, "vehicle.t_s must be > 0");
    require(std::isfinite(t_amb), "vehicle.t_amb must be finite");
}

void RoadLoadParams::validate() const {
    require(mass > 0.0, "road_load.mass must be > 0");
    require(c_rr >= 0.0, "road_load.c_rr must be >= 0");
    require(cd_a >= 0.0, "road_load.cd_a must be >= 0");
    require(rho_air > 0.0, "road_load.rho_air must be > 0");
    require(regen_floor_w <= 0.0, "road_load.regen_floor_w must be <= 0");
}

void RuleParams::validate() const {
    require(soc_low < soc_high, "rules.soc_low must be < rules.soc_high");
    require(t_cl_idle_on < t_cl_idle_off, "rules.t_cl_idle_on must be < rules.t_cl_idle_off");
    require(p_trac_on > 0.0, "rules.p_trac_on must be > 0");
    require(p_charge >= 0.0, "rules.p_charge must be >= 0");
}

void Config::validate() const {
    vehicle.validate();
    road_load.validate();
    rules.validate();
    require(q_heat_fixed >= vehicle.cabin.q_heat_min && q_heat_fixed <= vehicle.cabin.q_heat_max,
            "scenario.q_heat_fixed must lie within the cabin heating envelope");
    require(initial_soc >= vehicle.battery.soc_min && initial_soc <= vehicle.battery.soc_max,
            "scenario.initial_soc must lie within the SOC band");
    require(initial_t_cl >= vehicle.t_amb, "scenario.initial_t_cl must be >= ambient");
    require(initial_t_cl >= vehicle.engine.t_cl_min && initial_t_cl <= vehicle.engine.t_cl_max,
            "scenario.initial_t_cl must lie within the coolant bounds");
    require(soc_step > 0.0 && t_cl_step > 0.0 && t_cab_step > 0.0 && p_bat_step > 0.0 && q_heat_step > 0.0,
            "dp grid steps must be > 0");
    require(terminal_w_soc >= 0.0 && terminal_w_t_cl >= 0.0 && terminal_w_t_cab >= 0.0,
            "dp terminal weights must be >= 0");
    require(formulation == "baseline" || formulation == "thermal" || formulation == "thermal-cabin",
            "dp.formulation must be one of baseline|thermal|thermal-cabin");
}

Config default_config() {
    Config cfg;
    cfg.vehicle.battery.u_oc =
        Table1d({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0},
                {185.0, 192.0, 196.0, 199.0, 201.0, 203.0, 205.0, 207.0, 210.0, 214.0, 220.0},
                "battery.u_oc");
    cfg.vehicle.battery.r_int =
        Table1d({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0},
                {0.420, 0.400, 0.385, 0.375, 0.370, 0.368, 0.368, 0.375, 0.385, 0.400, 0.420},
                "battery.r_int");
    cfg.vehicle.maps.w_f_line =
        Table1d({0.0, 5000.0, 10000.0, 20000.0, 30000.0, 40000.0, 50000.0, 60000.0, 73000.0},
                {0.12, 0.42, 0.72, 1.32, 1.92, 2.52, 3.12, 3.72, 4.50},
                "maps.w_f_line");
    cfg.vehicle.maps.f_cl =
        Table1d({-20.0, 0.0, 20.0, 40.0, 60.0, 80.0, 90.0},
                {1.35, 1.28, 1.20, 1.12, 1.06, 1.015, 1.0},
                "maps.f_cl");
    cfg.vehicle.maps.q_rad = Table1d({95.0, 105.0}, {0.0, 80000.0}, "maps.q_rad");
    return cfg;
}

namespace {

void load_vehicle(const json& j, VehicleParams& v) {
    if (j.contains("battery")) {
        const json& b = j.at("battery");
        get_opt(b, "c_bat_coulomb", v.battery.c_bat);
        get_opt(b, "p_aux_w", v.battery.p_aux);
        get_opt(b, "soc_min", v.battery.soc_min);
        get_opt(b, "soc_max", v.battery.soc_max);
        get_opt(b, "p_bat_min_w", v.battery.p_bat_min);
        get_opt(b, "p_bat_max_w", v.battery.p_bat_max);
        if (b.contains("u_oc_v_vs_soc")) v.battery.u_oc = table_from_json(b.at("u_oc_v_vs_soc"), "battery.u_oc");
        if (b.contains("r_int_ohm_vs_soc"))
            v.battery.r_int = table_from_json(b.at("r_int_ohm_vs_soc"), "battery.r_int");
    }
    if (j.contains("engine")) {
        const json& e = j.at("engine");
        get_opt(e, "m_eng_c_eng_j_per_degc", v.engine.m_eng_c_eng);
        get_opt(e, "lhv_j_per_g", v.engine.lhv);
        get_opt(e, "gamma_exh", v.engine.gamma_exh);
        get_opt(e, "a_eng_alpha_eng_w_per_degc", v.engine.a_eng_alpha_eng);
        get_opt(e, "beta_com", v.engine.beta_com);
        get_opt(e, "w_idle_g_per_s", v.engine.w_idle);
        get_opt(e, "t_cl_min_degc", v.engine.t_cl_min);
        get_opt(e, "t_cl_max_degc", v.engine.t_cl_max);
        get_opt(e, "t_rad_on_degc", v.engine.t_rad_on);
        get_opt(e, "t_cl_nominal_degc", v.engine.t_cl_nominal);
        get_opt(e, "p_e_max_w", v.engine.p_e_max);
    }
    if (j.contains("maps")) {
        const json& m = j.at("maps");
        if (m.contains("w_f_line_gps_vs_w")) v.maps.w_f_line = table_from_json(m.at("w_f_line_gps_vs_w"), "maps.w_f_line");
        if (m.contains("f_cl_vs_degc")) v.maps.f_cl = table_from_json(m.at("f_cl_vs_degc"), "maps.f_cl");
        if (m.contains("q_rad_w_vs_degc")) v.maps.q_rad = table_from_json(m.at("q_rad_w_vs_degc"), "maps.q_rad");
    }
    if (j.contains("cabin")) {
        const json& c = j.at("cabin");
        get_opt(c, "m_cab_c_cab_j_per_degc", v.cabin.m_cab_c_cab);
        get_opt(c, "ua_cab_w_per_degc", v.cabin.ua_cab);
        get_opt(c, "q_sun_w", v.cabin.q_sun);
        get_opt(c, "t_cab_lb_degc", v.cabin.t_cab_lb);
        get_opt(c, "t_cab_ub_degc", v.cabin.t_cab_ub);
        get_opt(c, "q_heat_min_w", v.cabin.q_heat_min);
        get_opt(c, "q_heat_max_w", v.cabin.q_heat_max);
    }
    get_opt(j, "eta_mg", v.eta_mg);
    get_opt(j, "t_amb_degc", v.t_amb);
    get_opt(j, "t_s_s", v.t_s);
}

}  // namespace

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }

    Config cfg = default_config();
    try {
        if (j.contains("vehicle")) load_vehicle(j.at("vehicle"), cfg.vehicle);
        if (j.contains("road_load")) {
            const json& r = j.at("road_load");
            get_opt(r, "mass_kg", cfg.road_load.mass);
            get_opt(r, "c_rr", cfg.road_load.c_rr);
            get_opt(r, "cd_a_m2", cfg.road_load.cd_a);
            get_opt(r, "rho_air_kg_per_m3", cfg.road_load.rho_air);
            get_opt(r, "regen_floor_w", cfg.road_load.regen_floor_w);
        }
        if (j.contains("rules")) {
            const json& r = j.at("rules");
            get_opt(r, "soc_low", cfg.rules.soc_low);
            get_opt(r, "soc_high", cfg.rules.soc_high);
            get_opt(r, "p_trac_on_w", cfg.rules.p_trac_on);
            get_opt(r, "p_charge_w", cfg.rules.p_charge);
            get_opt(r, "t_cl_idle_on_degc", cfg.rules.t_cl_idle_on);
            get_opt(r, "t_cl_idle_off_degc", cfg.rules.t_cl_idle_off);
        }
        if (j.contains("scenario")) {
            const json& s = j.at("scenario");
            get_opt(s, "q_heat_fixed_w", cfg.q_heat_fixed);
            get_opt(s, "initial_soc", cfg.initial_soc);
            get_opt(s, "initial_t_cl_degc", cfg.initial_t_cl);
            get_opt(s, "initial_t_cab_degc", cfg.initial_t_cab);
        }
        if (j.contains("dp")) {
            const json& d = j.at("dp");
            get_opt(d, "formulation", cfg.formulation);
            get_opt(d, "soc_step", cfg.soc_step);
            get_opt(d, "t_cl_step_degc", cfg.t_cl_step);
            get_opt(d, "t_cab_step_degc", cfg.t_cab_step);
            get_opt(d, "p_bat_step_w", cfg.p_bat_step);
            get_opt(d, "q_heat_step_w", cfg.q_heat_step);
            if (d.contains("terminal")) {
                const json& t = d.at("terminal");
                get_opt(t, "soc_target", cfg.terminal_soc_target);
                get_opt(t, "t_cl_target_degc", cfg.terminal_t_cl_target);
                get_opt(t, "t_cab_target_degc", cfg.terminal_t_cab_target);
                get_opt(t, "w_soc_g_per_unit", cfg.terminal_w_soc);
                get_opt(t, "w_t_cl_g_per_degc", cfg.terminal_w_t_cl);
                get_opt(t, "w_t_cab_g_per_degc", cfg.terminal_w_t_cab);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("config field error in " + path + ": " + e.what());
    }
    return cfg;
}

void save_config(const Config& cfg, const std::string& path) {
    json j;
    j["vehicle"] = {
        {"battery",
         {{"c_bat_coulomb", cfg.vehicle.battery.c_bat},
          {"u_oc_v_vs_soc", table_to_json(cfg.vehicle.battery.u_oc)},
          {"r_int_ohm_vs_soc", table_to_json(cfg.vehicle.battery.r_int)},
          {"p_aux_w", cfg.vehicle.battery.p_aux},
          {"soc_min", cfg.vehicle.battery.soc_min},
          {"soc_max", cfg.vehicle.battery.soc_max},
          {"p_bat_min_w", cfg.vehicle.battery.p_bat_min},
          {"p_bat_max_w", cfg.vehicle.battery.p_bat_max}}},
        {"engine",
         {{"m_eng_c_eng_j_per_degc", cfg.vehicle.engine.m_eng_c_eng},
          {"lhv_j_per_g", cfg.vehicle.engine.lhv},
          {"gamma_exh", cfg.vehicle.engine.gamma_exh},
          {"a_eng_alpha_eng_w_per_degc", cfg.vehicle.engine.a_eng_alpha_eng},
          {"beta_com", cfg.vehicle.engine.beta_com},
          {"w_idle_g_per_s", cfg.vehicle.engine.w_idle},
          {"t_cl_min_degc", cfg.vehicle.engine.t_cl_min},
          {"t_cl_max_degc", cfg.vehicle.engine.t_cl_max},
          {"t_rad_on_degc", cfg.vehicle.engine.t_rad_on},
          {"t_cl_nominal_degc", cfg.vehicle.engine.t_cl_nominal},
          {"p_e_max_w", cfg.vehicle.engine.p_e_max}}},
        {"maps",
         {{"w_f_line_gps_vs_w", table_to_json(cfg.vehicle.maps.w_f_line)},
          {"f_cl_vs_degc", table_to_json(cfg.vehicle.maps.f_cl)},
          {"q_rad_w_vs_degc", table_to_json(cfg.vehicle.maps.q_rad)}}},
        {"cabin",
         {{"m_cab_c_cab_j_per_degc", cfg.vehicle.cabin.m_cab_c_cab},
          {"ua_cab_w_per_degc", cfg.vehicle.cabin.ua_cab},
          {"q_sun_w", cfg.vehicle.cabin.q_sun},
          {"t_cab_lb_degc", cfg.vehicle.cabin.t_cab_lb},
          {"t_cab_ub_degc", cfg.vehicle.cabin.t_cab_ub},
          {"q_heat_min_w", cfg.vehicle.cabin.q_heat_min},
          {"q_heat_max_w", cfg.vehicle.cabin.q_heat_max}}},
        {"eta_mg", cfg.vehicle.eta_mg},
        {"t_amb_degc", cfg.vehicle.t_amb},
        {"t_s_s", cfg.vehicle.t_s}};
    j["road_load"] = {{"mass_kg", cfg.road_load.mass},
                      {"c_rr", cfg.road_load.c_rr},
                      {"cd_a_m2", cfg.road_load.cd_a},
                      {"rho_air_kg_per_m3", cfg.road_load.rho_air},
                      {"regen_floor_w", cfg.road_load.regen_floor_w}};
    j["rules"] = {{"soc_low", cfg.rules.soc_low},
                  {"soc_high", cfg.rules.soc_high},
                  {"p_trac_on_w", cfg.rules.p_trac_on},
                  {"p_charge_w", cfg.rules.p_charge},
                  {"t_cl_idle_on_degc", cfg.rules.t_cl_idle_on},
                  {"t_cl_idle_off_degc", cfg.rules.t_cl_idle_off}};
    j["scenario"] = {{"q_heat_fixed_w", cfg.q_heat_fixed},
                     {"initial_soc", cfg.initial_soc},
                     {"initial_t_cl_degc", cfg.initial_t_cl},
                     {"initial_t_cab_degc", cfg.initial_t_cab}};
    j["dp"] = {{"formulation", cfg.formulation},
               {"soc_step", cfg.soc_step},
               {"t_cl_step_degc", cfg.t_cl_step},
               {"t_cab_step_degc", cfg.t_cab_step},
               {"p_bat_step_w", cfg.p_bat_step},
               {"q_heat_step_w", cfg.q_heat_step},
               {"terminal",
                {{"soc_target", cfg.terminal_soc_target},
                 {"t_cl_target_degc", cfg.terminal_t_cl_target},
                 {"t_cab_target_degc", cfg.terminal_t_cab_target},
                 {"w_soc_g_per_unit", cfg.terminal_w_soc},
                 {"w_t_cl_g_per_degc", cfg.terminal_w_t_cl},
                 {"w_t_cab_g_per_degc", cfg.terminal_w_t_cab}}}};

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace iptm

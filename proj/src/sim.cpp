#include "iptm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "iptm/errors.hpp"

namespace iptm {

double SimTrace::mean_t_cab() const {
    if (t_cab.empty()) return 0.0;
    return std::accumulate(t_cab.begin(), t_cab.end(), 0.0) / static_cast<double>(t_cab.size());
}

double SimTrace::mean_t_cl() const {
    if (t_cl.empty()) return 0.0;
    return std::accumulate(t_cl.begin(), t_cl.end(), 0.0) / static_cast<double>(t_cl.size());
}

double SimTrace::mean_soc() const {
    if (soc.empty()) return 0.0;
    return std::accumulate(soc.begin(), soc.end(), 0.0) / static_cast<double>(soc.size());
}

std::size_t SimTrace::time_below(double t_cab_bound) const {
    std::size_t n = 0;
    for (double x : t_cab)
        if (x < t_cab_bound) ++n;
    return n;
}

SimTrace simulate(Controller& controller, const DriveCycle& cycle, const VehicleParams& params,
                  const PowertrainState& initial, const StateBounds& bounds, std::string name) {
    const std::size_t N = cycle.steps();
    SimTrace tr;
    tr.name = std::move(name);
    tr.t = cycle.t;
    tr.v = cycle.v;
    tr.p_trac = cycle.p_trac;
    tr.mode.assign(N + 1, 0);
    tr.p_bat.assign(N + 1, 0.0);
    tr.q_heat.assign(N + 1, 0.0);
    tr.soc.assign(N + 1, 0.0);
    tr.t_cl.assign(N + 1, 0.0);
    tr.t_cab.assign(N + 1, 0.0);
    tr.w_f.assign(N + 1, 0.0);
    tr.fuel_cum.assign(N + 1, 0.0);
    tr.p_e.assign(N + 1, 0.0);
    tr.q_fuel.assign(N + 1, 0.0);
    tr.q_exh.assign(N + 1, 0.0);
    tr.q_air.assign(N + 1, 0.0);
    tr.q_rad.assign(N + 1, 0.0);

    PowertrainState x = initial;
    tr.soc[0] = x.soc;
    tr.t_cl[0] = x.t_cl;
    tr.t_cab[0] = x.t_cab;

    double fuel = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const ControlInput u = controller.decide(k, x);
        StepResult r;
        const StepStatus st = try_step(x, u, cycle.p_trac[k], params, r);
        if (st != StepStatus::ok)
            throw ControllerFailure("simulate[" + tr.name + "]: " + to_string(st) + " at t=" +
                                    std::to_string(k) + " s (mode=" + to_string(u.mode) +
                                    ", p_bat=" + std::to_string(u.p_bat) + ")");

        tr.mode[k] = static_cast<int>(u.mode);
        tr.p_bat[k] = u.p_bat;
        tr.q_heat[k] = u.q_heat;
        tr.w_f[k] = r.w_f;
        tr.p_e[k] = r.p_e;
        tr.q_fuel[k] = r.flows.q_fuel;
        tr.q_exh[k] = r.flows.q_exh;
        tr.q_air[k] = r.flows.q_air;
        tr.q_rad[k] = r.flows.q_rad;

        fuel += r.fuel_used;
        x = r.next;
        tr.soc[k + 1] = x.soc;
        tr.t_cl[k + 1] = x.t_cl;
        tr.t_cab[k + 1] = x.t_cab;
        tr.fuel_cum[k + 1] = fuel;

        const bool violated = x.soc < bounds.soc_min - bounds.soc_tol ||
                              x.soc > bounds.soc_max + bounds.soc_tol ||
                              x.t_cl < bounds.t_cl_min - bounds.t_cl_tol ||
                              x.t_cl > bounds.t_cl_max + bounds.t_cl_tol ||
                              x.t_cab < bounds.t_cab_min - bounds.t_cab_tol ||
                              x.t_cab > bounds.t_cab_max + bounds.t_cab_tol;
        if (violated) ++tr.constraint_violations;
    }

    tr.fuel_total_g = fuel;
    tr.final_state = x;
    return tr;
}

namespace {

bool same_cycle(const SimTrace& a, const SimTrace& b) {
    if (a.t.size() != b.t.size()) return false;
    const auto close = [](double x, double y) {
        return std::abs(x - y) <= 1e-6 * std::max({1.0, std::abs(x), std::abs(y)});
    };
    for (std::size_t k = 0; k < a.t.size(); ++k)
        if (!close(a.t[k], b.t[k]) || !close(a.v[k], b.v[k]) || !close(a.p_trac[k], b.p_trac[k]))
            return false;
    return true;
}

}  // namespace

Comparison compare(const std::vector<SimTrace>& traces, const VehicleParams& params) {
    if (traces.size() < 2) throw CycleMismatch("compare: need at least two traces");
    for (std::size_t i = 1; i < traces.size(); ++i)
        if (!same_cycle(traces[0], traces[i]))
            throw CycleMismatch("compare: trace '" + traces[i].name + "' was recorded over a different cycle");

    Comparison cmp;
    for (const SimTrace& tr : traces) {
        StrategySummary s;
        s.name = tr.name;
        s.fuel_g = tr.fuel_total_g;
        s.final_soc = tr.final_state.soc;
        s.final_t_cl = tr.final_state.t_cl;
        s.mean_t_cab = tr.mean_t_cab();
        s.time_below_cabin_lb = tr.time_below(params.cabin.t_cab_lb);
        s.constraint_violations = tr.constraint_violations;
        cmp.strategies.push_back(s);
    }
    for (std::size_t a = 0; a < traces.size(); ++a) {
        for (std::size_t b = 0; b < traces.size(); ++b) {
            if (a == b) continue;
            PairwiseSaving ps;
            ps.strategy_a = traces[a].name;
            ps.strategy_b = traces[b].name;
            ps.soc_difference = std::abs(traces[a].final_state.soc - traces[b].final_state.soc);
            ps.comparable = ps.soc_difference <= kSocComparabilityThreshold;
            if (ps.comparable && traces[b].fuel_total_g != 0.0)
                ps.savings_pct = (traces[b].fuel_total_g - traces[a].fuel_total_g) / traces[b].fuel_total_g * 100.0;
            cmp.pairwise.push_back(ps);
        }
    }
    return cmp;
}

void write_trace_csv(const SimTrace& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write trace file: " + path);
    out << "t,v,p_trac,mode,p_bat,q_heat,soc,t_cl,t_cab,w_f,cumulative_fuel_g\n";
    char buf[320];
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                      tr.t[k], tr.v[k], tr.p_trac[k], tr.mode[k], tr.p_bat[k], tr.q_heat[k], tr.soc[k],
                      tr.t_cl[k], tr.t_cab[k], tr.w_f[k], tr.fuel_cum[k]);
        out << buf;
    }
}

SimTrace read_trace_csv(const std::string& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,v,p_trac,mode,", 0) != 0)
        throw Error("not a trace CSV: " + path);

    SimTrace tr;
    tr.name = name;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<double> row;
        while (std::getline(ss, f, ',')) row.push_back(std::stod(f));
        if (row.size() != 11) throw Error("trace row with wrong column count in " + path);
        tr.t.push_back(row[0]);
        tr.v.push_back(row[1]);
        tr.p_trac.push_back(row[2]);
        tr.mode.push_back(static_cast<int>(row[3]));
        tr.p_bat.push_back(row[4]);
        tr.q_heat.push_back(row[5]);
        tr.soc.push_back(row[6]);
        tr.t_cl.push_back(row[7]);
        tr.t_cab.push_back(row[8]);
        tr.w_f.push_back(row[9]);
        tr.fuel_cum.push_back(row[10]);
    }
    if (tr.t.size() < 2) throw Error("trace CSV too short: " + path);
    tr.fuel_total_g = tr.fuel_cum.back();
    tr.final_state = PowertrainState{tr.soc.back(), tr.t_cl.back(), tr.t_cab.back()};
    return tr;
}

void write_comparison_json(const Comparison& cmp, const std::string& path) {
    using json = nlohmann::ordered_json;
    json j;
    j["strategies"] = json::array();
    for (const StrategySummary& s : cmp.strategies) {
        j["strategies"].push_back({{"name", s.name},
                                   {"fuel_g", s.fuel_g},
                                   {"final_soc", s.final_soc},
                                   {"final_t_cl_degc", s.final_t_cl},
                                   {"mean_t_cab_degc", s.mean_t_cab},
                                   {"time_below_cabin_lb_s", s.time_below_cabin_lb},
                                   {"constraint_violations", s.constraint_violations}});
    }
    j["pairwise_savings"] = json::array();
    for (const PairwiseSaving& p : cmp.pairwise) {
        json e = {{"strategy", p.strategy_a},
                  {"vs", p.strategy_b},
                  {"final_soc_difference", p.soc_difference},
                  {"comparable", p.comparable}};
        if (p.savings_pct)
            e["savings_pct"] = *p.savings_pct;
        else
            e["savings_pct"] = nullptr;
        j["pairwise_savings"].push_back(e);
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write comparison file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace iptm

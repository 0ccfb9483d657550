#include "iptm/dp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "iptm/errors.hpp"

namespace iptm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}  // namespace

const char* to_string(Formulation f) {
    switch (f) {
        case Formulation::BaselineDp: return "baseline";
        case Formulation::ThermalDp: return "thermal";
        case Formulation::ThermalCabinDp: return "thermal-cabin";
    }
    return "?";
}

Formulation formulation_from_string(const std::string& s) {
    if (s == "baseline") return Formulation::BaselineDp;
    if (s == "thermal") return Formulation::ThermalDp;
    if (s == "thermal-cabin") return Formulation::ThermalCabinDp;
    throw ConfigError("unknown formulation '" + s + "' (expected baseline|thermal|thermal-cabin)");
}

int state_dims(Formulation f) { return static_cast<int>(f); }

GridSpec GridSpec::from_config(const Config& cfg) {
    const VehicleParams& v = cfg.vehicle;
    GridSpec g;
    g.soc = AxisSpec{v.battery.soc_min, cfg.soc_step, v.battery.soc_max};
    g.t_cl = AxisSpec{v.engine.t_cl_min, cfg.t_cl_step, v.engine.t_cl_max};
    g.t_cab = AxisSpec{v.cabin.t_cab_lb, cfg.t_cab_step, v.cabin.t_cab_ub};
    g.p_bat = AxisSpec{v.battery.p_bat_min, cfg.p_bat_step, v.battery.p_bat_max};
    g.q_heat = AxisSpec{v.cabin.q_heat_min, cfg.q_heat_step, v.cabin.q_heat_max};
    return g;
}

void GridSpec::apply_override(const std::string& key, double value) {
    const auto apply = [&](AxisSpec& a, const std::string& field) {
        if (field == "min") a.min = value;
        else if (field == "step") a.step = value;
        else if (field == "max") a.max = value;
        else throw ConfigError("grid override: unknown field '" + field + "' in '" + key + "'");
    };
    const auto pos = key.rfind('_');
    if (pos == std::string::npos) throw ConfigError("grid override: expected <var>_<min|step|max>, got '" + key + "'");
    const std::string var = key.substr(0, pos);
    const std::string field = key.substr(pos + 1);
    if (var == "soc") apply(soc, field);
    else if (var == "t_cl") apply(t_cl, field);
    else if (var == "t_cab") apply(t_cab, field);
    else if (var == "p_bat") apply(p_bat, field);
    else if (var == "q_heat") apply(q_heat, field);
    else throw ConfigError("grid override: unknown variable '" + var + "'");
}

double TerminalSpec::cost(Formulation f, double soc, double t_cl, double t_cab) const noexcept {
    double c = w_soc * std::max(0.0, soc_target - soc);
    if (state_dims(f) >= 2) c += w_t_cl * std::max(0.0, t_cl_target - t_cl);
    if (state_dims(f) >= 3) c += w_t_cab * std::max(0.0, t_cab_target - t_cab);
    return c;
}

void DpProblem::validate() const {
    params.validate();
    if (cycle.steps() == 0) throw ConfigError("dp: drive cycle has no steps");
    grid.soc.to_axis("grid.soc", 2);
    if (state_dims(formulation) >= 2) grid.t_cl.to_axis("grid.t_cl", 2);
    if (state_dims(formulation) >= 3) grid.t_cab.to_axis("grid.t_cab", 2);
    grid.p_bat.to_axis("grid.p_bat", 1);
    if (formulation == Formulation::ThermalCabinDp) grid.q_heat.to_axis("grid.q_heat", 1);
    if (grid.p_bat.min < params.battery.p_bat_min - 1e-9 || grid.p_bat.max > params.battery.p_bat_max + 1e-9)
        throw ConfigError("dp: p_bat grid exceeds the battery power bounds");
    if (formulation != Formulation::ThermalCabinDp) {
        if (q_heat_fixed < params.cabin.q_heat_min || q_heat_fixed > params.cabin.q_heat_max)
            throw ConfigError("dp: q_heat_fixed outside the cabin heating envelope");
    }
    if (terminal.w_soc < 0 || terminal.w_t_cl < 0 || terminal.w_t_cab < 0)
        throw ConfigError("dp: terminal weights must be >= 0");
}

DpProblem DpProblem::from_config(const Config& cfg, const DriveCycle& cycle, Formulation f) {
    DpProblem p;
    p.formulation = f;
    p.grid = GridSpec::from_config(cfg);
    p.cycle = cycle;
    p.params = cfg.vehicle;
    p.q_heat_fixed = cfg.q_heat_fixed;
    p.terminal = TerminalSpec{cfg.terminal_soc_target, cfg.terminal_t_cl_target, cfg.terminal_t_cab_target,
                              cfg.terminal_w_soc,      cfg.terminal_w_t_cl,      cfg.terminal_w_t_cab};
    p.initial_state = make_initial_state(cfg.initial_soc, cfg.initial_t_cl, cfg.initial_t_cab, cfg.vehicle);
    return p;
}

namespace {

StateGrid make_state_grid(const DpProblem& pb) {
    StateGrid g;
    g.ndim = state_dims(pb.formulation);
    g.axes[0] = pb.grid.soc.to_axis("grid.soc", 2);
    if (g.ndim >= 2) g.axes[1] = pb.grid.t_cl.to_axis("grid.t_cl", 2);
    if (g.ndim >= 3) g.axes[2] = pb.grid.t_cab.to_axis("grid.t_cab", 2);
    return g;
}

std::vector<double> axis_values(const Axis& ax) {
    std::vector<double> v(static_cast<std::size_t>(ax.count));
    for (int i = 0; i < ax.count; ++i) v[static_cast<std::size_t>(i)] = ax.at(i);
    return v;
}

// Active-dimension coordinates of a full state.
std::array<double, 3> active_coords(const PowertrainState& s) {
    return {s.soc, s.t_cl, s.t_cab};
}

}  // namespace

std::vector<ControlCandidate> build_candidates(const DpProblem& pb, std::size_t k) {
    const VehicleParams& vp = pb.params;
    const double p_trac = pb.cycle.p_trac.at(k);

    std::vector<double> q_list;
    if (pb.formulation == Formulation::ThermalCabinDp)
        q_list = axis_values(pb.grid.q_heat.to_axis("grid.q_heat", 1));
    else
        q_list = {pb.q_heat_fixed};
    const std::vector<double> p_list = axis_values(pb.grid.p_bat.to_axis("grid.p_bat", 1));

    const double balance = balance_battery_power(p_trac, vp);
    const bool balance_ok = balance >= vp.battery.p_bat_min && balance <= vp.battery.p_bat_max;

    // While braking, partial regeneration is allowed (friction covers the
    // rest), so engine-off/idle also spans the battery grid points between
    // full recuperation and coasting.
    std::vector<std::size_t> partial_regen;
    if (p_trac < 0.0) {
        const double coast = balance_battery_power(0.0, vp);
        for (std::size_t gi = 0; gi < p_list.size(); ++gi)
            if (p_list[gi] > balance && p_list[gi] <= coast) partial_regen.push_back(gi);
    }

    std::vector<ControlCandidate> out;
    out.reserve((2 + partial_regen.size()) * q_list.size() + p_list.size() * q_list.size());

    for (EngineMode mode : {EngineMode::Off, EngineMode::Idle}) {
        for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
            ControlCandidate c;
            c.mode = mode;
            c.p_bat = balance;
            c.q_heat = q_list[qi];
            c.p_e = 0.0;
            c.w_f_base = (mode == EngineMode::Idle) ? vp.engine.w_idle : 0.0;
            c.p_bat_index = 0;
            c.q_heat_index = static_cast<int>(qi);
            c.split_ok = balance_ok;
            out.push_back(c);
            for (std::size_t gi : partial_regen) {
                c.p_bat = p_list[gi];
                c.p_bat_index = 1 + static_cast<int>(gi);
                c.split_ok = true;
                out.push_back(c);
            }
            c.p_bat = balance;
            c.p_bat_index = 0;
        }
    }
    for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
        for (std::size_t gi = 0; gi < p_list.size(); ++gi) {
            ControlCandidate c;
            c.mode = EngineMode::On;
            c.p_bat = p_list[gi];
            c.q_heat = q_list[qi];
            c.p_e = engine_power_from_split(p_trac, c.p_bat, vp);
            c.split_ok = c.p_e > 0.0 && c.p_e <= vp.engine.p_e_max;
            c.w_f_base = c.split_ok ? vp.maps.w_f_line(c.p_e) : 0.0;
            c.p_bat_index = 1 + static_cast<int>(gi);
            c.q_heat_index = static_cast<int>(qi);
            out.push_back(c);
        }
    }
    return out;
}

StageOutcome stage_transition(const PowertrainState& state, const ControlCandidate& u, std::size_t k,
                              const DpProblem& problem) {
    StageOutcome out;
    PowertrainState eval = state;
    if (problem.formulation == Formulation::BaselineDp) eval.t_cl = problem.params.engine.t_cl_nominal;

    StepResult r;
    out.status = try_step(eval, u.to_control(), problem.cycle.p_trac.at(k), problem.params, r);
    if (out.status != StepStatus::ok) return out;
    out.successor = r.next;
    out.stage_cost = r.fuel_used;

    const StateGrid grid = make_state_grid(problem);
    std::array<double, 3> x = active_coords(r.next);
    if (problem.snap_to_grid) {
        if (!grid.contains(x)) return out;  // infeasible: left the state box
        x = grid.snap(x);
        out.successor.soc = x[0];
        if (grid.ndim >= 2) out.successor.t_cl = x[1];
        if (grid.ndim >= 3) out.successor.t_cab = x[2];
    } else if (!grid.contains(x)) {
        return out;
    }
    out.feasible = true;
    return out;
}

namespace {

// Per-timestep successor/cost tables. Entries are produced by the same model
// calls as try_step, so sweep arithmetic matches the plant bit for bit.
struct SweepTables {
    std::vector<ControlCandidate> cands;
    std::size_t n_pbat = 0;   // battery-power list: 0 = off/idle balance, 1.. = grid
    std::size_t n_qheat = 0;

    std::vector<double> soc_next;  // [p_bat_index * n_soc + i], NaN = infeasible
    std::vector<double> tcl_next;  // [cand * n_tcl + j]
    std::vector<double> fuel;      // [cand * n_tcl + j] stage fuel, g (ndim >= 2)
    std::vector<double> fuel_1d;   // [cand] stage fuel at nominal coolant (ndim == 1)
    std::vector<double> cab_next;  // [q_index * n_cab + l]
};

void build_tables(const DpProblem& pb, const StateGrid& grid, std::size_t k, SweepTables& tb) {
    const VehicleParams& vp = pb.params;
    const double ts = vp.t_s;
    tb.cands = build_candidates(pb, k);

    const Axis& soc_ax = grid.axes[0];
    tb.n_pbat = 0;
    for (const ControlCandidate& c : tb.cands)
        tb.n_pbat = std::max(tb.n_pbat, static_cast<std::size_t>(c.p_bat_index) + 1);
    tb.n_qheat = 0;
    for (const ControlCandidate& c : tb.cands)
        tb.n_qheat = std::max(tb.n_qheat, static_cast<std::size_t>(c.q_heat_index) + 1);

    // Battery state advance per distinct battery power.
    const std::size_t n_soc = static_cast<std::size_t>(soc_ax.count);
    tb.soc_next.assign(tb.n_pbat * n_soc, kNan);
    std::vector<char> pb_seen(tb.n_pbat, 0);
    std::vector<double> pb_value(tb.n_pbat, 0.0);
    for (const ControlCandidate& c : tb.cands) {
        if (!pb_seen[static_cast<std::size_t>(c.p_bat_index)]) {
            pb_seen[static_cast<std::size_t>(c.p_bat_index)] = 1;
            pb_value[static_cast<std::size_t>(c.p_bat_index)] = c.p_bat;
        }
    }
    for (std::size_t pi = 0; pi < tb.n_pbat; ++pi) {
        if (!pb_seen[pi]) continue;
        for (std::size_t i = 0; i < n_soc; ++i) {
            const double soc = soc_ax.at(static_cast<int>(i));
            double d_soc = 0.0;
            if (try_soc_derivative(soc, pb_value[pi], vp.battery, d_soc) == StepStatus::ok)
                tb.soc_next[pi * n_soc + i] = soc + ts * d_soc;
        }
    }

    if (grid.ndim == 1) {
        // Coolant held at the nominal warm temperature inside the optimization.
        const double t_nom = vp.engine.t_cl_nominal;
        tb.fuel_1d.assign(tb.cands.size(), 0.0);
        for (std::size_t ci = 0; ci < tb.cands.size(); ++ci) {
            const ControlCandidate& c = tb.cands[ci];
            if (!c.split_ok) continue;
            double w_f = 0.0;
            try_fuel_rate(c.mode, c.p_e, t_nom, vp, w_f);
            tb.fuel_1d[ci] = w_f * ts;
        }
        return;
    }

    // Coolant advance and stage fuel per (candidate, coolant node).
    const Axis& tcl_ax = grid.axes[1];
    const std::size_t n_tcl = static_cast<std::size_t>(tcl_ax.count);
    tb.tcl_next.assign(tb.cands.size() * n_tcl, 0.0);
    tb.fuel.assign(tb.cands.size() * n_tcl, 0.0);
    std::vector<double> fcl(n_tcl);
    for (std::size_t j = 0; j < n_tcl; ++j) fcl[j] = vp.maps.f_cl(tcl_ax.at(static_cast<int>(j)));
    for (std::size_t ci = 0; ci < tb.cands.size(); ++ci) {
        const ControlCandidate& c = tb.cands[ci];
        if (!c.split_ok) continue;
        for (std::size_t j = 0; j < n_tcl; ++j) {
            const double t_cl = tcl_ax.at(static_cast<int>(j));
            // Same product as try_fuel_rate: nominal line times cold correction.
            const double w_f = (c.mode == EngineMode::On) ? c.w_f_base * fcl[j] : c.w_f_base;
            const double d_tcl = coolant_derivative_from_fuel(t_cl, c.p_e, w_f, c.q_heat, vp);
            tb.tcl_next[ci * n_tcl + j] = t_cl + ts * d_tcl;
            tb.fuel[ci * n_tcl + j] = w_f * ts;
        }
    }

    if (grid.ndim < 3) return;

    const Axis& cab_ax = grid.axes[2];
    const std::size_t n_cab = static_cast<std::size_t>(cab_ax.count);
    std::vector<double> q_values(tb.n_qheat, 0.0);
    for (const ControlCandidate& c : tb.cands) q_values[static_cast<std::size_t>(c.q_heat_index)] = c.q_heat;
    tb.cab_next.assign(tb.n_qheat * n_cab, 0.0);
    for (std::size_t qi = 0; qi < tb.n_qheat; ++qi) {
        for (std::size_t l = 0; l < n_cab; ++l) {
            const double t_cab = cab_ax.at(static_cast<int>(l));
            tb.cab_next[qi * n_cab + l] = t_cab + ts * cabin_derivative(t_cab, q_values[qi], vp);
        }
    }
}

// Minimum over candidates at one node; returns the best cost and writes the
// best candidate index (kNoControl when every candidate is infeasible).
double best_at_node(const DpProblem& pb, const StateGrid& grid, const SweepTables& tb,
                    const double* v_next, std::size_t node, std::uint32_t& best_index) {
    const std::array<int, 3> idx = grid.unflatten(node);
    const std::size_t n_soc = static_cast<std::size_t>(grid.axes[0].count);
    const std::size_t n_tcl = grid.ndim >= 2 ? static_cast<std::size_t>(grid.axes[1].count) : 0;
    const std::size_t n_cab = grid.ndim >= 3 ? static_cast<std::size_t>(grid.axes[2].count) : 0;
    const std::size_t i = static_cast<std::size_t>(idx[0]);
    const std::size_t j = grid.ndim >= 2 ? static_cast<std::size_t>(idx[1]) : 0;
    const std::size_t l = grid.ndim >= 3 ? static_cast<std::size_t>(idx[2]) : 0;

    double best = kInf;
    best_index = kNoControl;

    for (std::size_t ci = 0; ci < tb.cands.size(); ++ci) {
        const ControlCandidate& c = tb.cands[ci];
        if (!c.split_ok) continue;

        std::array<double, 3> x{0.0, 0.0, 0.0};
        x[0] = tb.soc_next[static_cast<std::size_t>(c.p_bat_index) * n_soc + i];
        if (std::isnan(x[0])) continue;
        double stage = 0.0;
        if (grid.ndim == 1) {
            stage = tb.fuel_1d[ci];
        } else {
            x[1] = tb.tcl_next[ci * n_tcl + j];
            stage = tb.fuel[ci * n_tcl + j];
            if (grid.ndim >= 3) x[2] = tb.cab_next[static_cast<std::size_t>(c.q_heat_index) * n_cab + l];
        }

        if (!grid.contains(x)) continue;  // state constraints are the grid box

        double v;
        if (pb.snap_to_grid) {
            v = v_next[grid.nearest_node(x)];
        } else {
            v = interpolate_value(grid, v_next, x);
        }
        if (std::isinf(v)) continue;

        const double cost = stage + v;
        if (cost < best) {
            best = cost;
            best_index = static_cast<std::uint32_t>(ci);
        }
    }
    return best;
}

// Rollout-side evaluation at a continuous state on the full thermal model;
// feasibility still requires the active dimensions to stay inside the box.
struct RolloutEval {
    PowertrainState successor;
    double stage_cost = 0.0;
    bool feasible = false;
};

RolloutEval rollout_eval(const DpProblem& pb, const StateGrid& grid, const PowertrainState& state,
                         const ControlCandidate& c, std::size_t k) {
    RolloutEval out;
    if (!c.split_ok) return out;
    StepResult r;
    if (try_step(state, c.to_control(), pb.cycle.p_trac.at(k), pb.params, r) != StepStatus::ok) return out;
    out.successor = r.next;
    out.stage_cost = r.fuel_used;
    out.feasible = grid.contains(active_coords(r.next));
    return out;
}

class PolicyController final : public Controller {
  public:
    PolicyController(const DpProblem& pb, const DpSolution& sol) : pb_(&pb), sol_(&sol), grid_(sol.grid) {}

    ControlInput decide(std::size_t k, const PowertrainState& state) override {
        if (k != cands_k_) {
            cands_ = build_candidates(*pb_, k);
            cands_k_ = k;
        }
        const std::size_t node = grid_.nearest_node(active_coords(state));
        const std::uint32_t ci = sol_->policy[k * grid_.nodes() + node];
        if (ci != kNoControl) {
            const RolloutEval ev = rollout_eval(*pb_, grid_, state, cands_[ci], k);
            if (ev.feasible) return cands_[ci].to_control();
        }
        // Nearest-node control failed on the continuous state: fall back to
        // the feasible candidate minimizing stage cost plus interpolated
        // cost-to-go at the true successor.
        double best = kInf;
        std::size_t best_ci = cands_.size();
        const std::vector<float>& v_next = sol_->values[k + 1];
        for (std::size_t i = 0; i < cands_.size(); ++i) {
            const RolloutEval ev = rollout_eval(*pb_, grid_, state, cands_[i], k);
            if (!ev.feasible) continue;
            const double v = interpolate_value(grid_, v_next, active_coords(ev.successor));
            if (std::isinf(v)) continue;
            const double cost = ev.stage_cost + v;
            if (cost < best) {
                best = cost;
                best_ci = i;
            }
        }
        if (best_ci == cands_.size())
            throw ControllerFailure("policy rollout: no feasible control at t=" + std::to_string(k) +
                                    " (soc=" + std::to_string(state.soc) + ", t_cl=" + std::to_string(state.t_cl) + ")");
        return cands_[best_ci].to_control();
    }

  private:
    const DpProblem* pb_;
    const DpSolution* sol_;
    StateGrid grid_;
    std::vector<ControlCandidate> cands_;
    std::size_t cands_k_ = static_cast<std::size_t>(-1);
};

StateBounds rollout_bounds(const DpProblem& pb) {
    StateBounds b = StateBounds::from_params(pb.params);
    // One grid step of tolerance when counting violations.
    b.soc_tol = pb.grid.soc.step;
    b.t_cl_tol = pb.grid.t_cl.step;
    b.t_cab_tol = pb.grid.t_cab.step;
    return b;
}

}  // namespace

SimTrace rollout_policy(const DpProblem& problem, const DpSolution& solution,
                        const PowertrainState& initial, const std::string& name) {
    PolicyController ctrl(problem, solution);
    return simulate(ctrl, problem.cycle, problem.params, initial, rollout_bounds(problem), name);
}

DpSolution solve(const DpProblem& problem) {
    problem.validate();
    const auto t_start = std::chrono::steady_clock::now();

    DpSolution sol;
    sol.formulation = problem.formulation;
    sol.grid = make_state_grid(problem);
    const StateGrid& grid = sol.grid;
    const std::size_t nodes = grid.nodes();
    const std::size_t N = problem.cycle.steps();
    sol.horizon = N;

    sol.policy.assign((N + 1) * nodes, kNoControl);
    sol.values.assign(N + 1, {});

    // Terminal layer.
    std::vector<double> v_next(nodes), v_curr(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        const std::array<int, 3> idx = grid.unflatten(n);
        const double soc = grid.axes[0].at(idx[0]);
        const double t_cl = grid.ndim >= 2 ? grid.axes[1].at(idx[1]) : 0.0;
        const double t_cab = grid.ndim >= 3 ? grid.axes[2].at(idx[2]) : 0.0;
        v_next[n] = problem.terminal.cost(problem.formulation, soc, t_cl, t_cab);
    }
    sol.values[N].assign(v_next.begin(), v_next.end());

    const unsigned hw = std::thread::hardware_concurrency();
    const int workers = problem.workers > 0 ? problem.workers : static_cast<int>(hw > 0 ? hw : 1);

    SweepTables tables;
    for (std::size_t kk = N; kk-- > 0;) {
        build_tables(problem, grid, kk, tables);

        std::uint32_t* policy_layer = sol.policy.data() + kk * nodes;
        std::vector<std::size_t> infeasible(static_cast<std::size_t>(workers), 0);

        const auto work = [&](std::size_t begin, std::size_t end, std::size_t wi) {
            std::size_t inf_count = 0;
            for (std::size_t n = begin; n < end; ++n) {
                std::uint32_t best_index = kNoControl;
                v_curr[n] = best_at_node(problem, grid, tables, v_next.data(), n, best_index);
                policy_layer[n] = best_index;
                if (best_index == kNoControl) ++inf_count;
            }
            infeasible[wi] = inf_count;
        };

        if (workers == 1 || nodes < 256) {
            work(0, nodes, 0);
        } else {
            std::vector<std::thread> threads;
            const std::size_t chunk = (nodes + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
            for (int w = 0; w < workers; ++w) {
                const std::size_t b = static_cast<std::size_t>(w) * chunk;
                const std::size_t e = std::min(nodes, b + chunk);
                if (b >= e) break;
                threads.emplace_back(work, b, e, static_cast<std::size_t>(w));
            }
            for (std::thread& th : threads) th.join();
        }

        std::size_t inf_total = 0;
        for (std::size_t c : infeasible) inf_total += c;
        const double frac = static_cast<double>(inf_total) / static_cast<double>(nodes);
        if (frac > sol.max_infeasible_fraction) {
            sol.max_infeasible_fraction = frac;
            sol.worst_layer = kk;
        }

        sol.values[kk].assign(v_curr.begin(), v_curr.end());
        std::swap(v_curr, v_next);

        if (problem.verbose && (kk % 100 == 0))
            std::fprintf(stderr, "dp[%s]: layer %zu/%zu, infeasible %.1f%%\n", to_string(problem.formulation),
                         kk, N, 100.0 * frac);
    }

    sol.value_layer0 = v_next;
    if (sol.max_infeasible_fraction > 0.5) {
        sol.grid_too_coarse = true;
        std::fprintf(stderr,
                     "dp[%s]: warning: grid too coarse, %.1f%% of nodes infeasible at timestep %zu\n",
                     to_string(problem.formulation), 100.0 * sol.max_infeasible_fraction, sol.worst_layer);
    }

    std::array<double, 3> x0 = active_coords(problem.initial_state);
    if (problem.snap_to_grid) {
        sol.value = sol.value_layer0[grid.nearest_node(x0)];
    } else {
        sol.value = interpolate_value(grid, sol.value_layer0, x0);
    }
    if (std::isinf(sol.value))
        throw NoFeasibleControl("dp: cost-to-go at the initial state is infinite (no feasible policy)");

    sol.rollout = rollout_policy(problem, sol, problem.initial_state,
                                 std::string(to_string(problem.formulation)) + "-dp");

    sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return sol;
}

double bellman_residual(const DpProblem& problem, const DpSolution& solution, std::size_t k,
                        std::size_t node) {
    const StateGrid& grid = solution.grid;
    SweepTables tables;
    build_tables(problem, grid, k, tables);

    const std::vector<float>& v_next_f = solution.values[k + 1];
    std::vector<double> v_next(v_next_f.begin(), v_next_f.end());
    std::uint32_t best_index = kNoControl;
    const double best = best_at_node(problem, grid, tables, v_next.data(), node, best_index);

    const double stored = static_cast<double>(solution.values[k][node]);
    if (std::isinf(stored) && std::isinf(best)) return 0.0;
    return std::abs(stored - best);
}

std::uint64_t cycle_checksum(const DriveCycle& cycle) {
    // FNV-1a over the raw bytes of the speed and power arrays.
    std::uint64_t h = 1469598103934665603ull;
    const auto mix = [&h](const std::vector<double>& v) {
        const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());
        const std::size_t bytes = v.size() * sizeof(double);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    mix(cycle.v);
    mix(cycle.p_trac);
    return h;
}

namespace {

constexpr char kPolicyMagic[8] = {'I', 'P', 'T', 'M', 'P', 'O', 'L', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void put_axis_spec(std::ofstream& out, const AxisSpec& a) {
    put(out, a.min);
    put(out, a.step);
    put(out, a.max);
}
void get_axis_spec(std::ifstream& in, AxisSpec& a) {
    get(in, a.min);
    get(in, a.step);
    get(in, a.max);
}

}  // namespace

void save_policy(const DpProblem& problem, const DpSolution& solution, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write policy file: " + path);
    out.write(kPolicyMagic, sizeof(kPolicyMagic));
    put(out, static_cast<std::uint32_t>(problem.formulation));
    put(out, static_cast<std::uint64_t>(solution.horizon));
    put(out, static_cast<std::uint64_t>(solution.grid.nodes()));
    put(out, problem.q_heat_fixed);
    put(out, problem.terminal.soc_target);
    put(out, problem.terminal.t_cl_target);
    put(out, problem.terminal.t_cab_target);
    put(out, problem.terminal.w_soc);
    put(out, problem.terminal.w_t_cl);
    put(out, problem.terminal.w_t_cab);
    put(out, problem.initial_state.soc);
    put(out, problem.initial_state.t_cl);
    put(out, problem.initial_state.t_cab);
    put_axis_spec(out, problem.grid.soc);
    put_axis_spec(out, problem.grid.t_cl);
    put_axis_spec(out, problem.grid.t_cab);
    put_axis_spec(out, problem.grid.p_bat);
    put_axis_spec(out, problem.grid.q_heat);
    put(out, static_cast<std::uint64_t>(problem.cycle.steps()));
    put(out, cycle_checksum(problem.cycle));
    put(out, solution.value);
    out.write(reinterpret_cast<const char*>(solution.policy.data()),
              static_cast<std::streamsize>(solution.policy.size() * sizeof(std::uint32_t)));
    for (const std::vector<float>& layer : solution.values)
        out.write(reinterpret_cast<const char*>(layer.data()),
                  static_cast<std::streamsize>(layer.size() * sizeof(float)));
    if (!out) throw Error("short write to policy file: " + path);
}

LoadedPolicy load_policy(const std::string& path, const VehicleParams& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open policy file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kPolicyMagic, 8) != 0)
        throw Error("not a policy file: " + path);

    LoadedPolicy lp;
    lp.problem.params = params;
    std::uint32_t formulation = 0;
    std::uint64_t horizon = 0, nodes = 0;
    get(in, formulation);
    get(in, horizon);
    get(in, nodes);
    lp.problem.formulation = static_cast<Formulation>(formulation);
    get(in, lp.problem.q_heat_fixed);
    get(in, lp.problem.terminal.soc_target);
    get(in, lp.problem.terminal.t_cl_target);
    get(in, lp.problem.terminal.t_cab_target);
    get(in, lp.problem.terminal.w_soc);
    get(in, lp.problem.terminal.w_t_cl);
    get(in, lp.problem.terminal.w_t_cab);
    get(in, lp.problem.initial_state.soc);
    get(in, lp.problem.initial_state.t_cl);
    get(in, lp.problem.initial_state.t_cab);
    get_axis_spec(in, lp.problem.grid.soc);
    get_axis_spec(in, lp.problem.grid.t_cl);
    get_axis_spec(in, lp.problem.grid.t_cab);
    get_axis_spec(in, lp.problem.grid.p_bat);
    get_axis_spec(in, lp.problem.grid.q_heat);
    std::uint64_t cycle_steps = 0;
    get(in, cycle_steps);
    get(in, lp.checksum);
    lp.cycle_steps = cycle_steps;

    DpSolution& sol = lp.solution;
    sol.formulation = lp.problem.formulation;
    sol.grid = make_state_grid(lp.problem);
    sol.horizon = horizon;
    if (sol.grid.nodes() != nodes) throw Error("policy file grid mismatch: " + path);
    get(in, sol.value);
    sol.policy.resize((horizon + 1) * nodes);
    in.read(reinterpret_cast<char*>(sol.policy.data()),
            static_cast<std::streamsize>(sol.policy.size() * sizeof(std::uint32_t)));
    sol.values.assign(horizon + 1, {});
    for (std::vector<float>& layer : sol.values) {
        layer.resize(nodes);
        in.read(reinterpret_cast<char*>(layer.data()), static_cast<std::streamsize>(nodes * sizeof(float)));
    }
    if (!in) throw Error("truncated policy file: " + path);
    return lp;
}

void write_solution_summary_json(const DpProblem& problem, const DpSolution& solution,
                                 const std::string& path) {
    using json = nlohmann::ordered_json;
    const SimTrace& r = solution.rollout;

    double idle_s = 0, on_s = 0, off_s = 0;
    for (std::size_t k = 0; k < r.steps(); ++k) {
        if (r.mode[k] == static_cast<int>(EngineMode::On)) on_s += 1;
        else if (r.mode[k] == static_cast<int>(EngineMode::Idle)) idle_s += 1;
        else off_s += 1;
    }

    json j;
    j["formulation"] = to_string(problem.formulation);
    j["horizon_steps"] = solution.horizon;
    j["state_nodes"] = solution.grid.nodes();
    j["grid"] = json::object();
    const char* dim_names[3] = {"soc", "t_cl", "t_cab"};
    for (int d = 0; d < solution.grid.ndim; ++d) {
        const Axis& ax = solution.grid.axes[d];
        j["grid"][dim_names[d]] = {{"min", ax.min}, {"step", ax.step}, {"count", ax.count}};
    }
    j["q_heat_fixed_w"] = problem.q_heat_fixed;
    j["value_g"] = solution.value;
    j["max_infeasible_node_fraction"] = solution.max_infeasible_fraction;
    j["grid_too_coarse"] = solution.grid_too_coarse;
    j["solve_seconds"] = solution.solve_seconds;
    j["rollout"] = {{"fuel_g", r.fuel_total_g},
                    {"final_soc", r.final_state.soc},
                    {"final_t_cl_degc", r.final_state.t_cl},
                    {"final_t_cab_degc", r.final_state.t_cab},
                    {"mean_t_cab_degc", r.mean_t_cab()},
                    {"engine_on_s", on_s},
                    {"engine_idle_s", idle_s},
                    {"engine_off_s", off_s},
                    {"constraint_violations", r.constraint_violations}};

    std::ofstream out(path);
    if (!out) throw Error("cannot write summary file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace iptm

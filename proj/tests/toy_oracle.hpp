#pragma once

// Brute-force oracle for small DP instances: exhaustive enumeration over all
// control sequences on grid-snapped dynamics. Deliberately built on
// stage_transition/try_step only, independent of the backward sweep it checks.

#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "iptm/dp.hpp"

namespace iptm_test {

inline double enumerate_cost_to_go(const iptm::DpProblem& pb, const iptm::StateGrid& grid,
                                   const iptm::PowertrainState& state, std::size_t k) {
    if (k == pb.cycle.steps())
        return pb.terminal.cost(pb.formulation, state.soc, state.t_cl, state.t_cab);
    double best = std::numeric_limits<double>::infinity();
    const std::vector<iptm::ControlCandidate> cands = iptm::build_candidates(pb, k);
    for (const iptm::ControlCandidate& c : cands) {
        if (!c.split_ok) continue;
        const iptm::StageOutcome out = iptm::stage_transition(state, c, k, pb);
        if (!out.feasible) continue;
        const double cost = out.stage_cost + enumerate_cost_to_go(pb, grid, out.successor, k + 1);
        if (cost < best) best = cost;
    }
    return best;
}

// A randomized toy instance: horizon <= 6, <= 5 nodes per state dimension,
// <= 6 control candidates, snap-to-grid dynamics.
inline iptm::DpProblem make_toy_problem(const iptm::Config& cfg, std::mt19937& rng,
                                        iptm::Formulation f) {
    using namespace iptm;
    std::uniform_int_distribution<int> horizon_dist(3, 6);
    std::uniform_real_distribution<double> p_dist(-5000.0, 15000.0);
    std::uniform_int_distribution<int> zero_dist(0, 3);

    const int N = horizon_dist(rng);
    DriveCycle cycle;
    cycle.t.resize(static_cast<std::size_t>(N) + 1);
    cycle.v.assign(static_cast<std::size_t>(N) + 1, 0.0);
    cycle.p_trac.resize(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k) {
        cycle.t[static_cast<std::size_t>(k)] = k;
        cycle.p_trac[static_cast<std::size_t>(k)] = zero_dist(rng) == 0 ? 0.0 : p_dist(rng);
    }

    DpProblem pb;
    pb.formulation = f;
    pb.cycle = cycle;
    pb.params = cfg.vehicle;
    pb.grid.soc = AxisSpec{0.55, 0.025, 0.65};   // 5 nodes
    pb.grid.t_cl = AxisSpec{40.0, 10.0, 80.0};   // 5 nodes
    pb.grid.t_cab = AxisSpec{16.0, 2.0, 24.0};   // 5 nodes
    pb.grid.p_bat = AxisSpec{-6000.0, 12000.0, 6000.0};  // 2 On-candidates, <= 6 controls total
    pb.grid.q_heat = AxisSpec{1500.0, 100.0, 1500.0};   // singleton
    pb.q_heat_fixed = 1500.0;
    pb.terminal = TerminalSpec{0.62, 55.0, 20.0, 400.0, 2.0, 5.0};
    pb.snap_to_grid = true;
    pb.workers = 1;

    const StateGrid grid = [&] {
        StateGrid g;
        g.ndim = state_dims(f);
        g.axes[0] = pb.grid.soc.to_axis("soc");
        if (g.ndim >= 2) g.axes[1] = pb.grid.t_cl.to_axis("t_cl");
        if (g.ndim >= 3) g.axes[2] = pb.grid.t_cab.to_axis("t_cab");
        return g;
    }();
    std::uniform_int_distribution<int> node_dist(0, static_cast<int>(grid.nodes()) - 1);
    const auto idx = grid.unflatten(static_cast<std::size_t>(node_dist(rng)));
    pb.initial_state.soc = grid.axes[0].at(idx[0]);
    pb.initial_state.t_cl = grid.ndim >= 2 ? grid.axes[1].at(idx[1]) : 60.0;
    pb.initial_state.t_cab = grid.ndim >= 3 ? grid.axes[2].at(idx[2]) : 18.0;
    return pb;
}

}  // namespace iptm_test

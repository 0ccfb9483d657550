#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iptm/drive_cycle.hpp"
#include "iptm/grid.hpp"
#include "iptm/model.hpp"
#include "iptm/params.hpp"
#include "iptm/sim.hpp"

namespace iptm {

// The three problem formulations: states {SOC}, {SOC, T_cl} and
// {SOC, T_cl, T_cab}, with the heating power joining the control vector only
// in the three-state case.
enum class Formulation : int { BaselineDp = 1, ThermalDp = 2, ThermalCabinDp = 3 };

const char* to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);
int state_dims(Formulation f);

// Per-variable quantization, Table-II style.
struct GridSpec {
    AxisSpec soc;
    AxisSpec t_cl;
    AxisSpec t_cab;
    AxisSpec p_bat;
    AxisSpec q_heat;

    static GridSpec from_config(const Config& cfg);
    // Applies "name=value" overrides, e.g. "t_cab_step=2" or "q_heat_min=1500".
    void apply_override(const std::string& key, double value);
};

// One-sided linear terminal penalty: deficits below the per-state targets
// cost the given weights; surpluses are free.
struct TerminalSpec {
    double soc_target = 0.6;
    double t_cl_target = 40.0;
    double t_cab_target = 18.0;
    double w_soc = 600.0;   // g per unit SOC
    double w_t_cl = 2.0;    // g per degC
    double w_t_cab = 5.0;   // g per degC

    double cost(Formulation f, double soc, double t_cl, double t_cab) const noexcept;
};

struct DpProblem {
    Formulation formulation = Formulation::ThermalDp;
    GridSpec grid;
    DriveCycle cycle;
    VehicleParams params;
    double q_heat_fixed = 1500.0;  // used by the 1- and 2-state formulations
    TerminalSpec terminal;
    PowertrainState initial_state;

    // Verification mode: successors are snapped to the nearest grid node so
    // the DP value can be compared against exhaustive enumeration.
    bool snap_to_grid = false;
    int workers = 0;  // 0 = hardware concurrency
    bool verbose = false;

    void validate() const;
    static DpProblem from_config(const Config& cfg, const DriveCycle& cycle, Formulation f);
};

// One control candidate in the deterministic enumeration order. Off and Idle
// carry the unique battery power that balances the traction demand; On spans
// the battery-power grid.
struct ControlCandidate {
    EngineMode mode = EngineMode::Off;
    double p_bat = 0.0;
    double q_heat = 0.0;
    double p_e = 0.0;       // engine power implied by the split (On only)
    double w_f_base = 0.0;  // nominal fuel rate before cold correction, g/s
    int p_bat_index = 0;    // index into the per-problem battery-power list
    int q_heat_index = 0;
    bool split_ok = false;

    ControlInput to_control() const { return ControlInput{mode, p_bat, q_heat}; }
};

inline constexpr std::uint32_t kNoControl = 0xffffffffu;

struct DpSolution {
    Formulation formulation = Formulation::ThermalDp;
    StateGrid grid;
    std::size_t horizon = 0;  // N

    // Optimal control index per timestep and node, (N+1) layers; the layer at
    // k = N is all kNoControl. Values archived per timestep in single
    // precision for rollout fallback and post-hoc Bellman checks.
    std::vector<std::uint32_t> policy;
    std::vector<std::vector<float>> values;
    std::vector<double> value_layer0;  // full-precision cost-to-go at k = 0

    double value = 0.0;  // cost-to-go at k = 0 for the initial state, g
    SimTrace rollout;

    double max_infeasible_fraction = 0.0;
    std::size_t worst_layer = 0;
    bool grid_too_coarse = false;  // > 50 % of nodes infeasible at some timestep
    double solve_seconds = 0.0;

    std::size_t policy_at(std::size_t k, std::size_t node) const { return policy[k * grid.nodes() + node]; }
};

// Shared by the sweep, the rollout and the tests: the candidate list for
// timestep k in enumeration order (ties in the sweep resolve to the lowest
// index).
std::vector<ControlCandidate> build_candidates(const DpProblem& problem, std::size_t k);

// Result of applying one candidate from one (possibly off-grid) state.
struct StageOutcome {
    PowertrainState successor;   // full model state; inactive dims carried through
    double stage_cost = 0.0;     // g of fuel
    bool feasible = false;
    StepStatus status = StepStatus::ok;
};

// Wraps the plant step for the formulation at hand: inactive states are held
// at their formulation-specific fixed values, and successors violating the
// state bounds are reported infeasible.
StageOutcome stage_transition(const PowertrainState& state, const ControlCandidate& u, std::size_t k,
                              const DpProblem& problem);

// Backward-induction solve plus forward rollout on the continuous model.
DpSolution solve(const DpProblem& problem);

// Rollout of a solved policy from an arbitrary initial state (the solve()
// rollout uses problem.initial_state).
SimTrace rollout_policy(const DpProblem& problem, const DpSolution& solution,
                        const PowertrainState& initial, const std::string& name);

// Post-hoc Bellman residual from the archived tables:
// stored V_k(node) minus min_u [stage + interp(V_{k+1})]. Small residuals
// (single-precision archive) certify the sweep.
double bellman_residual(const DpProblem& problem, const DpSolution& solution, std::size_t k,
                        std::size_t node);

// Compact binary export of a solved policy (with value layers) so a rollout
// can run in a separate process.
void save_policy(const DpProblem& problem, const DpSolution& solution, const std::string& path);
struct LoadedPolicy {
    DpProblem problem;  // cycle omitted; grids/terminal restored
    DpSolution solution;
    std::size_t cycle_steps = 0;
    std::uint64_t checksum = 0;
};
LoadedPolicy load_policy(const std::string& path, const VehicleParams& params);
std::uint64_t cycle_checksum(const DriveCycle& cycle);

void write_solution_summary_json(const DpProblem& problem, const DpSolution& solution,
                                 const std::string& path);

}  // namespace iptm

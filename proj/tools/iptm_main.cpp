#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iptm/dp.hpp"
#include "iptm/drive_cycle.hpp"
#include "iptm/errors.hpp"
#include "iptm/params.hpp"
#include "iptm/rule_based.hpp"
#include "iptm/sim.hpp"

namespace {

namespace fs = std::filesystem;
using namespace iptm;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitInfeasible = 2;

struct CommonOpts {
    std::string config_path;
    std::string cycle_path;
    std::string out_dir = "out";
};

Config load_config_or_default(const std::string& path) {
    if (path.empty()) return default_config();
    return load_config(path);
}

DriveCycle load_cycle_checked(const CommonOpts& opts, const Config& cfg) {
    if (opts.cycle_path.empty())
        throw ConfigError("missing --cycle (path to a drive-cycle CSV)");
    return load_cycle(opts.cycle_path, cfg.road_load);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

void apply_grid_overrides(GridSpec& grid, const std::vector<std::string>& overrides) {
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("grid override must look like KEY=VALUE, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        double value = 0.0;
        try {
            value = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("grid override '" + kv + "': value is not a number");
        }
        grid.apply_override(key, value);
    }
}

int run_solve(const CommonOpts& opts, const std::string& formulation_name,
              const std::vector<std::string>& grid_overrides, int workers, bool save_policy_file,
              bool verbose) {
    Config cfg = load_config_or_default(opts.config_path);
    cfg.validate();
    const DriveCycle cycle = load_cycle_checked(opts, cfg);

    const Formulation f =
        formulation_from_string(formulation_name.empty() ? cfg.formulation : formulation_name);
    DpProblem problem = DpProblem::from_config(cfg, cycle, f);
    apply_grid_overrides(problem.grid, grid_overrides);
    problem.workers = workers;
    problem.verbose = verbose;

    std::fprintf(stderr, "solve: formulation=%s, horizon=%zu steps, workers=%d\n", to_string(f),
                 cycle.steps(), workers);
    const DpSolution sol = solve(problem);
    std::fprintf(stderr, "solve: value=%.3f g, rollout fuel=%.3f g, %.1f s\n", sol.value,
                 sol.rollout.fuel_total_g, sol.solve_seconds);

    ensure_out_dir(opts.out_dir);
    const std::string base = opts.out_dir + "/" + to_string(f);
    write_solution_summary_json(problem, sol, base + "_summary.json");
    write_trace_csv(sol.rollout, base + "_rollout.csv");
    if (save_policy_file) save_policy(problem, sol, base + "_policy.bin");
    return kExitOk;
}

int run_simulate(const CommonOpts& opts, const std::string& controller, const std::string& policy_path,
                 const std::string& replay_path) {
    Config cfg = load_config_or_default(opts.config_path);
    cfg.validate();
    const DriveCycle cycle = load_cycle_checked(opts, cfg);
    ensure_out_dir(opts.out_dir);

    SimTrace trace;
    if (controller == "rule") {
        RuleBasedController ctrl(cfg.rules, cfg.vehicle, cycle, cfg.q_heat_fixed);
        StateBounds bounds = StateBounds::from_params(cfg.vehicle);
        bounds.soc_tol = cfg.soc_step;
        bounds.t_cl_tol = cfg.t_cl_step;
        bounds.t_cab_tol = cfg.t_cab_step;
        const PowertrainState x0 =
            make_initial_state(cfg.initial_soc, cfg.initial_t_cl, cfg.initial_t_cab, cfg.vehicle);
        trace = simulate(ctrl, cycle, cfg.vehicle, x0, bounds, "rule-based");
    } else if (controller == "policy") {
        if (policy_path.empty()) throw ConfigError("--policy required with --controller policy");
        LoadedPolicy lp = load_policy(policy_path, cfg.vehicle);
        if (lp.cycle_steps != cycle.steps() || lp.checksum != cycle_checksum(cycle))
            throw CycleMismatch("policy file was solved on a different drive cycle");
        lp.problem.cycle = cycle;
        trace = rollout_policy(lp.problem, lp.solution, lp.problem.initial_state,
                               std::string(to_string(lp.problem.formulation)) + "-dp");
    } else if (controller == "replay") {
        if (replay_path.empty()) throw ConfigError("--replay required with --controller replay");
        const SimTrace recorded = read_trace_csv(replay_path, "recorded");
        if (recorded.steps() != cycle.steps())
            throw CycleMismatch("replay trace does not match the cycle length");
        ReplayController ctrl(recorded);
        const PowertrainState x0 =
            PowertrainState::make(recorded.soc[0], recorded.t_cl[0], recorded.t_cab[0]);
        trace = simulate(ctrl, cycle, cfg.vehicle, x0, StateBounds::from_params(cfg.vehicle), "replay");
    } else {
        throw ConfigError("unknown controller '" + controller + "' (expected rule|policy|replay)");
    }

    const std::string out_path = opts.out_dir + "/" + trace.name + "_trace.csv";
    write_trace_csv(trace, out_path);
    std::fprintf(stderr, "simulate: %s fuel=%.3f g, final soc=%.4f, t_cl=%.2f C, written %s\n",
                 trace.name.c_str(), trace.fuel_total_g, trace.final_state.soc, trace.final_state.t_cl,
                 out_path.c_str());
    return kExitOk;
}

int run_compare(const CommonOpts& opts, const std::vector<std::string>& named_traces) {
    Config cfg = load_config_or_default(opts.config_path);
    cfg.validate();

    std::vector<SimTrace> traces;
    for (const std::string& spec : named_traces) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("trace must look like NAME=PATH, got '" + spec + "'");
        traces.push_back(read_trace_csv(spec.substr(eq + 1), spec.substr(0, eq)));
    }
    const Comparison cmp = compare(traces, cfg.vehicle);

    ensure_out_dir(opts.out_dir);
    const std::string out_path = opts.out_dir + "/comparison.json";
    write_comparison_json(cmp, out_path);
    for (const StrategySummary& s : cmp.strategies)
        std::fprintf(stderr, "compare: %-16s fuel=%8.3f g  final_soc=%.4f  mean_t_cab=%.2f C\n",
                     s.name.c_str(), s.fuel_g, s.final_soc, s.mean_t_cab);
    std::fprintf(stderr, "compare: written %s\n", out_path.c_str());
    return kExitOk;
}

int run_validate(const CommonOpts& opts) {
    const Config cfg = load_config_or_default(opts.config_path);
    cfg.validate();
    std::fprintf(stderr, "validate-params: configuration OK\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power and thermal management simulator/optimizer for a power-split HEV"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string formulation;
    std::vector<std::string> grid_overrides;
    std::vector<std::string> named_traces;
    std::string controller = "rule";
    std::string policy_path, replay_path;
    int workers = 0;
    bool save_policy_file = false;
    bool verbose = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_cycle) {
        cmd->add_option("--config", opts.config_path, "JSON configuration file (defaults built in)");
        if (needs_cycle) cmd->add_option("--cycle", opts.cycle_path, "drive-cycle CSV")->required();
        cmd->add_option("--out", opts.out_dir, "output directory");
    };

    CLI::App* solve_cmd = app.add_subcommand("solve", "run a DP formulation and roll out its policy");
    add_common(solve_cmd, true);
    solve_cmd->add_option("--formulation", formulation, "baseline|thermal|thermal-cabin");
    solve_cmd->add_option("--grid-override", grid_overrides, "grid override KEY=VALUE (repeatable)");
    solve_cmd->add_option("--workers", workers, "worker threads (0 = hardware)");
    solve_cmd->add_flag("--save-policy", save_policy_file, "write the binary policy file");
    solve_cmd->add_flag("--verbose", verbose, "progress to stderr");

    CLI::App* sim_cmd = app.add_subcommand("simulate", "roll out a saved policy or the rule-based controller");
    add_common(sim_cmd, true);
    sim_cmd->add_option("--controller", controller, "rule|policy|replay");
    sim_cmd->add_option("--policy", policy_path, "policy file from solve --save-policy");
    sim_cmd->add_option("--replay", replay_path, "trace CSV whose controls are replayed");

    CLI::App* cmp_cmd = app.add_subcommand("compare", "multi-strategy fuel/comfort report");
    add_common(cmp_cmd, false);
    cmp_cmd->add_option("--trace", named_traces, "NAME=PATH of a rollout trace CSV (repeat >= 2x)")
        ->required();

    CLI::App* val_cmd = app.add_subcommand("validate-params", "invariant check on a configuration");
    add_common(val_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (solve_cmd->parsed())
            return run_solve(opts, formulation, grid_overrides, workers, save_policy_file, verbose);
        if (sim_cmd->parsed()) return run_simulate(opts, controller, policy_path, replay_path);
        if (cmp_cmd->parsed()) return run_compare(opts, named_traces);
        if (val_cmd->parsed()) return run_validate(opts);
    } catch (const NoFeasibleControl& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInfeasible;
    } catch (const ControllerFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInfeasible;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    }
    return kExitInputError;
}

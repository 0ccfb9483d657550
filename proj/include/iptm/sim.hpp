#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "iptm/drive_cycle.hpp"
#include "iptm/model.hpp"
#include "iptm/params.hpp"

namespace iptm {

// Any supervisory controller: returns the control applied over [t_k, t_k+1).
class Controller {
  public:
    virtual ~Controller() = default;
    virtual ControlInput decide(std::size_t k, const PowertrainState& state) = 0;
};

// Full record of one forward simulation. State arrays hold N+1 samples;
// control/flow arrays also hold N+1 rows with a zeroed terminal row so all
// columns align in the exported CSV.
struct SimTrace {
    std::string name;

    std::vector<double> t;
    std::vector<double> v;
    std::vector<double> p_trac;
    std::vector<int> mode;  // e_mode 1/2/3; 0 on the terminal row
    std::vector<double> p_bat;
    std::vector<double> q_heat;
    std::vector<double> soc;
    std::vector<double> t_cl;
    std::vector<double> t_cab;
    std::vector<double> w_f;      // g/s
    std::vector<double> fuel_cum; // g

    // Heat flows and engine power per step, for energy bookkeeping.
    std::vector<double> p_e;
    std::vector<double> q_fuel;
    std::vector<double> q_exh;
    std::vector<double> q_air;
    std::vector<double> q_rad;

    double fuel_total_g = 0.0;
    PowertrainState final_state;
    std::size_t constraint_violations = 0;  // state-bound violations beyond tolerance

    std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
    double mean_t_cab() const;
    double mean_t_cl() const;
    double mean_soc() const;
    // Seconds with t_cab below the given bound (strictly).
    std::size_t time_below(double t_cab_bound) const;
};

// Bounds used when counting constraint violations in a trace. A tolerance of
// one grid step is customary for rollouts of grid policies.
struct StateBounds {
    double soc_min, soc_max;
    double t_cl_min, t_cl_max;
    double t_cab_min, t_cab_max;
    double soc_tol = 0.0;
    double t_cl_tol = 0.0;
    double t_cab_tol = 0.0;

    static StateBounds from_params(const VehicleParams& p) {
        return StateBounds{p.battery.soc_min, p.battery.soc_max, p.engine.t_cl_min,
                           p.engine.t_cl_max, p.cabin.t_cab_lb,  p.cabin.t_cab_ub};
    }
};

// Forward simulation of a controller on the full thermal model.
SimTrace simulate(Controller& controller, const DriveCycle& cycle, const VehicleParams& params,
                  const PowertrainState& initial, const StateBounds& bounds, std::string name = "trace");

// Controller that replays a recorded control sequence.
class ReplayController final : public Controller {
  public:
    explicit ReplayController(const SimTrace& trace) : trace_(&trace) {}
    ControlInput decide(std::size_t k, const PowertrainState&) override {
        return ControlInput{static_cast<EngineMode>(trace_->mode[k]), trace_->p_bat[k], trace_->q_heat[k]};
    }

  private:
    const SimTrace* trace_;
};

// --- strategy comparison -----------------------------------------------------

struct StrategySummary {
    std::string name;
    double fuel_g = 0.0;
    double final_soc = 0.0;
    double final_t_cl = 0.0;
    double mean_t_cab = 0.0;
    std::size_t time_below_cabin_lb = 0;
    std::size_t constraint_violations = 0;
};

struct PairwiseSaving {
    std::string strategy_a;
    std::string strategy_b;
    // (fuel_b - fuel_a) / fuel_b * 100; absent when final SOCs differ by more
    // than the comparability threshold.
    std::optional<double> savings_pct;
    double soc_difference = 0.0;
    bool comparable = false;
};

struct Comparison {
    std::vector<StrategySummary> strategies;
    std::vector<PairwiseSaving> pairwise;
};

inline constexpr double kSocComparabilityThreshold = 0.02;

// Compares >= 2 traces recorded over the same cycle. Raises CycleMismatch
// when the cycles differ.
Comparison compare(const std::vector<SimTrace>& traces, const VehicleParams& params);

// --- file output --------------------------------------------------------------

void write_trace_csv(const SimTrace& trace, const std::string& path);
SimTrace read_trace_csv(const std::string& path, const std::string& name);
void write_comparison_json(const Comparison& cmp, const std::string& path);

}  // namespace iptm

#pragma once

#include <cstddef>

#include "iptm/drive_cycle.hpp"
#include "iptm/model.hpp"
#include "iptm/params.hpp"
#include "iptm/sim.hpp"

namespace iptm {

// Load-leveling charge-sustaining controller with the cold-weather forced-idle
// rule: below t_cl_idle_on the engine at least idles (latched, with hysteresis,
// until t_cl_idle_off) so cabin heating does not drain the coolant.
//
// State: the single idle-latch bit. Copying a controller copies the latch.
class RuleBasedController final : public Controller {
  public:
    RuleBasedController(const RuleParams& rules, const VehicleParams& params, const DriveCycle& cycle,
                        double q_heat_fixed)
        : rules_(rules), params_(&params), cycle_(&cycle), q_heat_(q_heat_fixed) {}

    ControlInput decide(std::size_t k, const PowertrainState& state) override;

    bool idle_latched() const { return latch_; }
    std::size_t infeasible_demand_count() const { return infeasible_demands_; }

  private:
    RuleParams rules_;
    const VehicleParams* params_;
    const DriveCycle* cycle_;
    double q_heat_;
    bool latch_ = false;
    std::size_t infeasible_demands_ = 0;
};

// One decision, stateless apart from the caller-held latch bit.
ControlInput rule_decide(const PowertrainState& state, double p_trac, const VehicleParams& params,
                         const RuleParams& rules, double q_heat_fixed, bool& idle_latch,
                         bool* infeasible_demand = nullptr);

}  // namespace iptm

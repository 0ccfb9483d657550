#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iptm/params.hpp"

namespace iptm {

// Drive cycle resampled to a uniform 1 s grid. Arrays share one length;
// t runs 0..duration_s. p_trac[k] is the demand over [t_k, t_k + 1).
struct DriveCycle {
    std::vector<double> t;       // s
    std::vector<double> v;       // m/s
    std::vector<double> p_trac;  // W, negative while regenerating

    std::size_t samples() const { return t.size(); }
    // Number of DP/simulation steps (intervals).
    std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
    double duration() const { return t.empty() ? 0.0 : t.back(); }
};

// Road-load traction power at a given speed and acceleration, clamped below
// at the regeneration floor (friction brakes absorb the rest).
double traction_power(double v, double a, const RoadLoadParams& road);

// Load a cycle from CSV with header time_s,speed_mps[,p_trac_w], resampling
// to the 1 s grid by linear interpolation. Without a power column, p_trac is
// computed from longitudinal dynamics with the given road-load coefficients.
DriveCycle load_cycle(const std::string& path, const RoadLoadParams& road);

// Build a cycle directly from uniformly sampled speeds (1 s apart).
DriveCycle cycle_from_speeds(const std::vector<double>& v, const RoadLoadParams& road);

void save_cycle_csv(const DriveCycle& cycle, const std::string& path);

}  // namespace iptm

#include "iptm/drive_cycle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iptm/errors.hpp"

namespace iptm {

namespace {

constexpr double kGravity = 9.81;  // m/s^2

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return fields;
}

double parse_number(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw MalformedCsv("drive cycle: cannot parse '" + s + "' in " + context);
    }
}

// Linear interpolation of (xs, ys) at x; xs strictly increasing, x within range.
double lerp_at(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

}  // namespace

double traction_power(double v, double a, const RoadLoadParams& road) {
    const double force =
        road.mass * a + road.mass * kGravity * road.c_rr + 0.5 * road.rho_air * road.cd_a * v * v;
    const double p = force * v;
    return std::max(p, road.regen_floor_w);
}

DriveCycle cycle_from_speeds(const std::vector<double>& v, const RoadLoadParams& road) {
    if (v.size() < 2) throw MalformedCsv("drive cycle: need at least 2 samples");
    DriveCycle cycle;
    cycle.t.resize(v.size());
    cycle.v = v;
    cycle.p_trac.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] < 0.0) throw NegativeSpeed("drive cycle: negative speed at sample " + std::to_string(k));
        cycle.t[k] = static_cast<double>(k);
        const double a = (k + 1 < v.size()) ? v[k + 1] - v[k] : 0.0;  // forward difference, 1 s grid
        cycle.p_trac[k] = traction_power(v[k], a, road);
    }
    return cycle;
}

DriveCycle load_cycle(const std::string& path, const RoadLoadParams& road) {
    std::ifstream in(path);
    if (!in) throw MalformedCsv("drive cycle: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw MalformedCsv("drive cycle: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "time_s" || header[1] != "speed_mps")
        throw MalformedCsv("drive cycle: expected header time_s,speed_mps[,p_trac_w] in " + path);
    const bool has_power = header.size() >= 3 && header[2] == "p_trac_w";
    if (header.size() > (has_power ? 3u : 2u))
        throw MalformedCsv("drive cycle: unexpected extra columns in " + path);

    std::vector<double> t_raw, v_raw, p_raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw MalformedCsv("drive cycle: wrong field count at line " + std::to_string(line_no));
        const std::string ctx = "line " + std::to_string(line_no);
        const double t = parse_number(fields[0], ctx);
        const double v = parse_number(fields[1], ctx);
        if (!t_raw.empty() && !(t > t_raw.back()))
            throw NonMonotoneTime("drive cycle: time not strictly increasing at line " + std::to_string(line_no));
        if (v < 0.0) throw NegativeSpeed("drive cycle: negative speed at line " + std::to_string(line_no));
        t_raw.push_back(t);
        v_raw.push_back(v);
        if (has_power) p_raw.push_back(parse_number(fields[2], ctx));
    }
    if (t_raw.size() < 2) throw MalformedCsv("drive cycle: need at least 2 samples in " + path);
    if (t_raw.front() != 0.0) throw MalformedCsv("drive cycle: time must start at 0 in " + path);

    // Resample onto the 1 s grid.
    const std::size_t n = static_cast<std::size_t>(std::floor(t_raw.back())) + 1;
    DriveCycle cycle;
    cycle.t.resize(n);
    cycle.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        cycle.t[k] = static_cast<double>(k);
        cycle.v[k] = lerp_at(t_raw, v_raw, cycle.t[k]);
    }
    cycle.p_trac.resize(n);
    if (has_power) {
        for (std::size_t k = 0; k < n; ++k) cycle.p_trac[k] = lerp_at(t_raw, p_raw, cycle.t[k]);
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const double a = (k + 1 < n) ? cycle.v[k + 1] - cycle.v[k] : 0.0;
            cycle.p_trac[k] = traction_power(cycle.v[k], a, road);
        }
    }
    return cycle;
}

void save_cycle_csv(const DriveCycle& cycle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("drive cycle: cannot write " + path);
    out << "time_s,speed_mps,p_trac_w\n";
    char buf[128];
    for (std::size_t k = 0; k < cycle.samples(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.0f,%.6g,%.6g\n", cycle.t[k], cycle.v[k], cycle.p_trac[k]);
        out << buf;
    }
}

}  // namespace iptm

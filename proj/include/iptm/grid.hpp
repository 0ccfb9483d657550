#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "iptm/errors.hpp"

namespace iptm {

// Uniformly spaced grid axis: node i sits at min + i*step.
struct Axis {
    double min = 0.0;
    double step = 1.0;
    int count = 2;

    double at(int i) const noexcept { return min + step * static_cast<double>(i); }
    double max() const noexcept { return at(count - 1); }
    bool contains(double x) const noexcept { return x >= min && x <= max(); }

    int nearest(double x) const noexcept {
        const int i = static_cast<int>(std::lround((x - min) / step));
        return i < 0 ? 0 : (i >= count ? count - 1 : i);
    }

    // Lower cell index and fractional offset for interpolation; x is clamped
    // into the axis range.
    void locate(double x, int& i0, double& frac) const noexcept {
        if (count == 1) {
            i0 = 0;
            frac = 0.0;
            return;
        }
        double u = (x - min) / step;
        if (u <= 0.0) u = 0.0;
        const double umax = static_cast<double>(count - 1);
        if (u >= umax) u = umax;
        i0 = static_cast<int>(u);
        if (i0 > count - 2) i0 = count - 2;
        frac = u - static_cast<double>(i0);
        if (frac < 0.0) frac = 0.0;
        if (frac > 1.0) frac = 1.0;
        // Queries that sit on a node up to roundoff must not pick up the
        // neighboring corner (it may be infinite).
        if (frac < 1e-9) frac = 0.0;
        if (frac > 1.0 - 1e-9) frac = 1.0;
    }
};

// (min, step, max) triple as written in configuration files.
struct AxisSpec {
    double min = 0.0;
    double step = 1.0;
    double max = 1.0;

    Axis to_axis(const std::string& name, int min_count = 1) const {
        if (!(step > 0.0)) throw ConfigError(name + ": grid step must be > 0");
        if (!(max >= min)) throw ConfigError(name + ": grid max must be >= min");
        const double span = (max - min) / step;
        const int count = static_cast<int>(std::lround(span)) + 1;
        if (std::abs(min + step * static_cast<double>(count - 1) - max) > 1e-6 * step)
            throw ConfigError(name + ": grid max is not an integer number of steps above min");
        if (count < min_count)
            throw ConfigError(name + ": grid needs at least " + std::to_string(min_count) + " nodes");
        return Axis{min, step, count};
    }
};

// 1-, 2-, or 3-dimensional state grid (SOC, then coolant, then cabin).
struct StateGrid {
    int ndim = 1;
    std::array<Axis, 3> axes{};

    std::size_t nodes() const noexcept {
        std::size_t n = 1;
        for (int d = 0; d < ndim; ++d) n *= static_cast<std::size_t>(axes[d].count);
        return n;
    }

    // Row-major flattening, last dimension fastest.
    std::size_t flatten(const std::array<int, 3>& idx) const noexcept {
        std::size_t f = static_cast<std::size_t>(idx[0]);
        for (int d = 1; d < ndim; ++d)
            f = f * static_cast<std::size_t>(axes[d].count) + static_cast<std::size_t>(idx[d]);
        return f;
    }

    std::array<int, 3> unflatten(std::size_t f) const noexcept {
        std::array<int, 3> idx{0, 0, 0};
        for (int d = ndim - 1; d >= 1; --d) {
            const std::size_t n = static_cast<std::size_t>(axes[d].count);
            idx[d] = static_cast<int>(f % n);
            f /= n;
        }
        idx[0] = static_cast<int>(f);
        return idx;
    }

    bool contains(const std::array<double, 3>& x) const noexcept {
        for (int d = 0; d < ndim; ++d)
            if (!axes[d].contains(x[d])) return false;
        return true;
    }

    std::size_t nearest_node(const std::array<double, 3>& x) const noexcept {
        std::array<int, 3> idx{0, 0, 0};
        for (int d = 0; d < ndim; ++d) idx[d] = axes[d].nearest(x[d]);
        return flatten(idx);
    }

    // Snap a continuous point onto the nearest node coordinates.
    std::array<double, 3> snap(const std::array<double, 3>& x) const noexcept {
        std::array<double, 3> out = x;
        for (int d = 0; d < ndim; ++d) out[d] = axes[d].at(axes[d].nearest(x[d]));
        return out;
    }
};

// Multilinear interpolation of a value layer over the active dimensions.
// Coordinates are clamped into the grid box. A +inf corner with nonzero
// weight makes the result +inf, so infeasible regions never look attractive.
template <typename T>
double interpolate_value(const StateGrid& grid, const T* layer, const std::array<double, 3>& x) noexcept {
    int i0[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < grid.ndim; ++d) grid.axes[d].locate(x[d], i0[d], frac[d]);

    const int corners = 1 << grid.ndim;
    double acc = 0.0;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::array<int, 3> idx{i0[0], i0[1], i0[2]};
        for (int d = 0; d < grid.ndim; ++d) {
            if (c & (1 << d)) {
                w *= frac[d];
                idx[d] = (grid.axes[d].count == 1) ? i0[d] : i0[d] + 1;
            } else {
                w *= 1.0 - frac[d];
            }
        }
        if (w == 0.0) continue;
        const double v = static_cast<double>(layer[grid.flatten(idx)]);
        if (std::isinf(v)) return std::numeric_limits<double>::infinity();
        acc += w * v;
    }
    return acc;
}

template <typename T>
double interpolate_value(const StateGrid& grid, const std::vector<T>& layer, const std::array<double, 3>& x) noexcept {
    return interpolate_value(grid, layer.data(), x);
}

}  // namespace iptm

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "iptm/errors.hpp"

namespace iptm {

// 1-D lookup table with linear interpolation between breakpoints and
// clamping at both ends. Breakpoints must be strictly increasing.
class Table1d {
  public:
    Table1d() = default;

    Table1d(std::vector<double> breakpoints, std::vector<double> values, std::string name = "table")
        : x_(std::move(breakpoints)), y_(std::move(values)), name_(std::move(name)) {
        if (x_.size() < 2 || x_.size() != y_.size())
            throw ConfigError(name_ + ": needs >= 2 breakpoints and matching value count");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1]))
                throw ConfigError(name_ + ": breakpoints must be strictly increasing");
    }

    double operator()(double x) const noexcept {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin());
        const double w = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
        return y_[i - 1] + w * (y_[i] - y_[i - 1]);
    }

    bool covers(double x) const noexcept { return x >= x_.front() && x <= x_.back(); }

    double x_min() const noexcept { return x_.front(); }
    double x_max() const noexcept { return x_.back(); }
    const std::vector<double>& breakpoints() const noexcept { return x_; }
    const std::vector<double>& values() const noexcept { return y_; }
    const std::string& name() const noexcept { return name_; }

    bool strictly_increasing_values() const noexcept {
        for (std::size_t i = 1; i < y_.size(); ++i)
            if (!(y_[i] > y_[i - 1])) return false;
        return true;
    }
    bool non_increasing_values() const noexcept {
        for (std::size_t i = 1; i < y_.size(); ++i)
            if (y_[i] > y_[i - 1]) return false;
        return true;
    }
    bool non_decreasing_values() const noexcept {
        for (std::size_t i = 1; i < y_.size(); ++i)
            if (y_[i] < y_[i - 1]) return false;
        return true;
    }
    bool all_positive_values() const noexcept {
        for (double v : y_)
            if (!(v > 0.0)) return false;
        return true;
    }

  private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::string name_;
};

}  // namespace iptm

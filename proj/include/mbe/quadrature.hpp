#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "mbe/linalg.hpp"

namespace mbe {

/// Number of trapezoid panels on [0, T] such that the step does not exceed
/// (2*pi / max_frequency) / points_per_period.
inline std::size_t trapezoid_panels(double T, double max_frequency, int points_per_period = 64) {
    const double period = 2.0 * std::numbers::pi / max_frequency;
    const double h_max = period / points_per_period;
    return static_cast<std::size_t>(std::ceil(T / h_max));
}

/// (1/T) * integral_0^T f(t) dt by the composite trapezoid rule with `panels`
/// equal panels.  `Value` needs value-initialization, `+=` and scaling by double.
template <class Value, class F>
Value trapezoid_average(F&& f, double T, std::size_t panels) {
    const double h = T / static_cast<double>(panels);
    Value acc = f(0.0);
    acc *= 0.5;
    for (std::size_t i = 1; i < panels; ++i) acc += f(h * static_cast<double>(i));
    Value last = f(T);
    last *= 0.5;
    acc += last;
    acc *= 1.0 / static_cast<double>(panels);
    return acc;
}

}  // namespace mbe

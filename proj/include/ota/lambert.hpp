#pragma once

#include <cmath>

#include "ota/core.hpp"

namespace ota {

/// Principal branch of the Lambert-W function, W(x)e^{W(x)} = x for x >= -1/e.
/// Halley iteration from the initializer log1p(x); residual below 1e-14*max(1,|x|).
inline double lambert_w(double x) {
    const double branch_point = -1.0 / std::exp(1.0);
    if (x < branch_point - 1e-15) throw DomainError("lambert_w: x below -1/e");
    if (x == 0.0) return 0.0;

    double w;
    if (x > -0.25) {
        w = std::log1p(x);
        if (w > 1.0) w = std::log(x) - std::log(std::log(x));
    } else {
        // Near the branch point use the series in sqrt(2(e*x + 1)).
        double q = std::max(0.0, 2.0 * (std::exp(1.0) * x + 1.0));
        if (q == 0.0) return -1.0;
        double p = std::sqrt(q);
        w = -1.0 + p - p * p / 3.0;
    }

    for (int it = 0; it < 50; ++it) {
        double ew = std::exp(w);
        double f = w * ew - x;
        double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        double step = f / denom;
        w -= step;
        if (std::abs(f) <= 1e-14 * std::max(1.0, std::abs(x))) break;
    }
    return w;
}

/// Optimal pure-online competitive ratio of one-way trading: 1 + W((theta-1)/e).
inline double alpha_star(double theta) {
    if (theta < 1.0) throw DomainError("alpha_star: theta < 1");
    return 1.0 + lambert_w((theta - 1.0) / std::exp(1.0));
}

}  // namespace ota

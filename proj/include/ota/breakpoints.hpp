#pragma once

#include <cmath>

#include "ota/core.hpp"
#include "ota/threshold.hpp"
#include "ota/tradeoff.hpp"

namespace ota {

struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OrderingViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundaryBreakpoints {
    double M;     // price splitting the boundary/intermediate prediction regions
    double beta;  // utilization where the eta-rate piece hands over to the gamma-rate piece
};

struct IntermediateBreakpoints {
    double M1;
    double beta1;
    double beta1p;
    double beta2;
};

namespace detail {

// M implied by the first equation of the boundary system.
inline double boundary_m(double L, double eta, double beta) {
    return L + (eta - 1.0) * L * std::exp(eta * beta);
}

// Mismatch of the second boundary equation after substituting M.
inline double boundary_residual(const PriceBounds& b, double eta, double gamma, double beta) {
    double L = b.lower();
    double U = b.upper();
    return boundary_m(L, eta, beta) * gamma / eta -
           (L + (U - L) * std::exp(gamma * (beta - 1.0)));
}

}  // namespace detail

/// Solve for (M, beta): M = L + (eta-1)L e^{eta beta} and
/// M gamma/eta = L + (U-L) e^{gamma (beta-1)}.
inline BoundaryBreakpoints boundary_breakpoints(const PriceBounds& bounds, double eta,
                                                double gamma) {
    double L = bounds.lower();
    double U = bounds.upper();
    double tol = 1e-12 * U;
    if (eta <= 1.0 + 1e-12) return {L, 1.0};  // eta=1 forces M=L, then beta=1

    auto f = [&](double beta) { return detail::boundary_residual(bounds, eta, gamma, beta); };

    // When eta == gamma the two equations coincide and every beta solves the
    // system (the threshold is a single exponential); pick the midpoint.
    if (std::abs(f(0.25)) <= tol && std::abs(f(0.5)) <= tol && std::abs(f(0.75)) <= tol) {
        return {detail::boundary_m(L, eta, 0.5), 0.5};
    }

    double lo = 0.0, hi = 1.0;
    double flo = f(lo), fhi = f(hi);
    if (flo * fhi > 0.0) {
        // Scan for a sign change; the residual need not be monotone.
        const int grid = 1024;
        bool found = false;
        double prev = flo;
        for (int i = 1; i <= grid; ++i) {
            double x = static_cast<double>(i) / grid;
            double fx = f(x);
            if (prev * fx <= 0.0) {
                lo = static_cast<double>(i - 1) / grid;
                hi = x;
                found = true;
                break;
            }
            prev = fx;
        }
        if (!found) throw NoRootError("boundary_breakpoints: no bracketing interval");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(lo) * f(mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    double beta = 0.5 * (lo + hi);
    return {detail::boundary_m(L, eta, beta), beta};
}

namespace detail {

struct Cascade {
    double beta1;
    double beta1p;
    double beta2;
    double residual;  // mismatch of P = L + (M1-L) e^{eta (beta2 - beta1')}
};

inline Cascade cascade(const PriceBounds& b, double eta, double gamma, double P, double M1) {
    double L = b.lower();
    double U = b.upper();
    Cascade c;
    c.beta1 = std::log((std::max(M1 / L, gamma) - 1.0) / (gamma - 1.0)) / gamma;
    double head = L * c.beta1 + (gamma - 1.0) * L * (std::exp(gamma * c.beta1) - 1.0) / gamma;
    if (M1 - L < 1e-12 * U) {
        c.beta1p = c.beta1;
    } else {
        c.beta1p = (M1 / eta - head + c.beta1 * M1 - L) / (M1 - L);
    }
    c.beta2 = 1.0 + std::log((std::min(P * gamma / eta, U) - L) / (U - L)) / gamma;
    if (M1 - L < 1e-12 * U) {
        c.residual = P - M1;
    } else {
        c.residual = P - (L + (M1 - L) * std::exp(eta * (c.beta2 - c.beta1p)));
    }
    return c;
}

}  // namespace detail

/// Solve the four coupled equations for the intermediate-region threshold,
/// P in [M, U]. Outer bisection on M1; beta1, beta1', beta2 follow in closed form.
inline IntermediateBreakpoints intermediate_breakpoints(const PriceBounds& bounds, double eta,
                                                        double gamma, double P) {
    double L = bounds.lower();
    double U = bounds.upper();
    double tol = 1e-10 * U;

    if (gamma <= 1.0 + 1e-12) return {U, 0.0, 1.0, 1.0};  // theta = 1 degenerate

    if (P >= U - 1e-12 * U) {
        // P = U collapses the last two pieces exactly.
        double beta1 = std::log((std::max(U / L, gamma) - 1.0) / (gamma - 1.0)) / gamma;
        return {U, beta1, 1.0, 1.0};
    }

    double M = boundary_breakpoints(bounds, eta, gamma).M;
    if (P < M - 1e-9 * U) throw DomainError("intermediate_breakpoints: P below M");

    if (P <= M + 1e-9 * U) {
        // At the region boundary the flat segment vanishes: the system's
        // tangent root is M1 = L*eta and the threshold matches the low-
        // prediction design.
        detail::Cascade c = detail::cascade(bounds, eta, gamma, P, L * eta);
        double b1 = std::clamp(c.beta1, 0.0, 1.0);
        double b1p = std::clamp(c.beta1p, b1, 1.0);
        double b2 = std::clamp(c.beta2, b1p, 1.0);
        return {L * eta, b1, b1p, b2};
    }

    auto resid = [&](double m1) { return detail::cascade(bounds, eta, gamma, P, m1).residual; };

    // The residual in M1 rises to a single peak and then falls; the admissible
    // root lies on the descending branch (at P = M the peak is tangent to zero
    // at M1 = L*eta). Locate the peak, then bisect.
    double glo = L + (P - L) * 1e-7;
    const int grid = 2000;
    double peak = glo, peak_val = resid(glo);
    for (int i = 1; i <= grid; ++i) {
        double m1 = glo + (P - glo) * static_cast<double>(i) / grid;
        double r = resid(m1);
        if (r > peak_val) {
            peak_val = r;
            peak = m1;
        }
    }
    {
        double a = std::max(glo, peak - (P - glo) / grid);
        double b = std::min(P, peak + (P - glo) / grid);
        for (int it = 0; it < 200 && b - a > 1e-15 * U; ++it) {
            double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
            if (resid(m1) < resid(m2))
                a = m1;
            else
                b = m2;
        }
        peak = 0.5 * (a + b);
        peak_val = resid(peak);
    }

    double M1;
    double rhi = resid(P);
    if (std::abs(rhi) <= tol) {
        M1 = P;  // eta = 1: the prediction itself solves the system
    } else if (std::abs(peak_val) <= tol) {
        M1 = peak;  // tangent root (P = M) or degenerate eta == gamma
    } else if (peak_val < 0.0 || rhi > 0.0) {
        throw NoRootError("intermediate_breakpoints: no admissible root");
    } else {
        double lo = peak, hi = P;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (resid(mid) <= 0.0)
                hi = mid;
            else
                lo = mid;
        }
        M1 = 0.5 * (lo + hi);
    }

    detail::Cascade c = detail::cascade(bounds, eta, gamma, P, M1);
    double otol = 1e-9;
    if (c.beta1 < -otol || c.beta1 > c.beta1p + otol || c.beta1p > c.beta2 + otol ||
        c.beta2 > 1.0 + otol)
        throw OrderingViolationError("intermediate_breakpoints: non-monotone betas");
    double b1 = std::clamp(c.beta1, 0.0, 1.0);
    double b1p = std::clamp(c.beta1p, b1, 1.0);
    double b2 = std::clamp(c.beta2, b1p, 1.0);
    return {M1, b1, b1p, b2};
}

/// Build the prediction-aware one-way trading threshold for a given lambda.
inline PiecewiseThreshold build_threshold_one_way(const PriceBounds& bounds, double lambda,
                                                  double P) {
    if (!bounds.contains(P)) throw PredictionOutOfBoundsError(P);
    double L = bounds.lower();
    double U = bounds.upper();
    double theta = bounds.theta();
    if (theta <= 1.0 + 1e-12)
        return PiecewiseThreshold({ThresholdSegment::flat(0.0, 1.0, L)}, bounds);

    TradeoffParams t = tradeoff_one_way(lambda, theta);
    BoundaryBreakpoints bb = boundary_breakpoints(bounds, t.eta, t.gamma);

    if (P < bb.M) {
        return PiecewiseThreshold(
            {ThresholdSegment::exp_piece(0.0, bb.beta, (t.eta - 1.0) * L, t.eta, 0.0),
             ThresholdSegment::exp_piece(bb.beta, 1.0, U - L, t.gamma, 1.0)},
            bounds);
    }

    IntermediateBreakpoints ib = intermediate_breakpoints(bounds, t.eta, t.gamma, P);
    std::vector<ThresholdSegment> segs;
    segs.push_back(ThresholdSegment::exp_piece(0.0, ib.beta1, (t.gamma - 1.0) * L, t.gamma, 0.0));
    segs.push_back(ThresholdSegment::flat(ib.beta1, ib.beta1p, ib.M1));
    segs.push_back(ThresholdSegment::exp_piece(ib.beta1p, ib.beta2, ib.M1 - L, t.eta, ib.beta1p));
    segs.push_back(ThresholdSegment::exp_piece(ib.beta2, 1.0, U - L, t.gamma, 1.0));
    return PiecewiseThreshold(std::move(segs), bounds);
}

}  // namespace ota

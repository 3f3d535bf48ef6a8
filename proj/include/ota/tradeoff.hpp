#pragma once

#include <cmath>

#include "ota/core.hpp"
#include "ota/lambert.hpp"
#include "ota/threshold.hpp"

namespace ota {

struct PredictionOutOfBoundsError : std::runtime_error {
    explicit PredictionOutOfBoundsError(double p)
        : std::runtime_error("prediction " + std::to_string(p) + " outside [L,U]") {}
};

/// Target consistency/robustness pair (eta, gamma) tied to a robustness
/// parameter lambda for one of the two problem kinds.
struct TradeoffParams {
    double lambda;
    double eta;
    double gamma;
    ProblemKind kind;
};

/// 1-max-search trade-off: gamma the positive root of
/// lambda*g^2 + (1-lambda)*g - theta = 0, eta = theta/gamma.
inline TradeoffParams tradeoff_max_search(double lambda, double theta) {
    if (lambda < 0.0 || lambda > 1.0) throw DomainError("lambda outside [0,1]");
    if (theta < 1.0) throw DomainError("theta < 1");
    double gamma;
    if (lambda == 0.0) {
        gamma = theta;  // analytic limit; the closed form is 0/0 here
    } else {
        double d = 1.0 - lambda;
        gamma = (std::sqrt(d * d + 4.0 * lambda * theta) - d) / (2.0 * lambda);
    }
    return {lambda, theta / gamma, gamma, ProblemKind::Integral};
}

/// One-way trading consistency as a function of the robustness target.
inline double one_way_eta_of_gamma(double gamma, double theta) {
    if (theta <= 1.0) return 1.0;
    if (gamma <= 1.0) throw DomainError("one_way_eta_of_gamma: gamma <= 1");
    double bracket = theta / gamma +
                     (theta - 1.0) * (1.0 - std::log((theta - 1.0) / (gamma - 1.0)) / gamma);
    return theta / bracket;
}

/// One-way trading trade-off: gamma interpolates between alpha* and theta,
/// eta follows from the Pareto curve.
inline TradeoffParams tradeoff_one_way(double lambda, double theta) {
    if (lambda < 0.0 || lambda > 1.0) throw DomainError("lambda outside [0,1]");
    if (theta < 1.0) throw DomainError("theta < 1");
    double astar = alpha_star(theta);
    double gamma = astar + (1.0 - lambda) * (theta - astar);
    double eta = (lambda == 0.0) ? 1.0 : one_way_eta_of_gamma(gamma, theta);
    return {lambda, eta, gamma, ProblemKind::Fractional};
}

/// Optimal pure-online reservation price for 1-max-search.
inline double pure_reservation_max_search(const PriceBounds& bounds) {
    return std::sqrt(bounds.lower() * bounds.upper());
}

/// Optimal pure-online one-way threshold phi(w) = L + (alpha*-1)L exp(alpha* w).
inline PiecewiseThreshold pure_threshold_one_way(const PriceBounds& bounds) {
    double astar = alpha_star(bounds.theta());
    double L = bounds.lower();
    if (astar <= 1.0 + 1e-12) {
        return PiecewiseThreshold({ThresholdSegment::flat(0.0, 1.0, L)}, bounds);
    }
    return PiecewiseThreshold(
        {ThresholdSegment::exp_piece(0.0, 1.0, (astar - 1.0) * L, astar, 0.0)}, bounds);
}

/// Prediction-aware reservation price for 1-max-search (three branches).
inline double reservation_price(const PriceBounds& bounds, double lambda, double prediction) {
    if (!bounds.contains(prediction)) throw PredictionOutOfBoundsError(prediction);
    TradeoffParams t = tradeoff_max_search(lambda, bounds.theta());
    double L = bounds.lower();
    if (prediction < L * t.eta) return L * t.eta;
    if (prediction < L * t.gamma)
        return lambda * L * t.gamma + (1.0 - lambda) * prediction / t.eta;
    return L * t.gamma;
}

enum class NaiveMode { BlindPrediction, LinearBlend };

/// Warm-up baselines: trust the prediction outright, or blend it linearly
/// with the pure-online reservation price.
inline double naive_reservation_price(const PriceBounds& bounds, NaiveMode mode,
                                      double lambda, double prediction) {
    if (!bounds.contains(prediction)) throw PredictionOutOfBoundsError(prediction);
    if (mode == NaiveMode::BlindPrediction) return prediction;
    return lambda * pure_reservation_max_search(bounds) + (1.0 - lambda) * prediction;
}

}  // namespace ota

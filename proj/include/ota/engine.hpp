#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "ota/core.hpp"
#include "ota/threshold.hpp"

namespace ota {

/// A runnable policy: a reservation price for 1-max-search or a threshold
/// function for one-way trading.
struct Policy {
    ProblemKind kind;
    double reservation = 0.0;                    // Integral
    std::optional<PiecewiseThreshold> threshold; // Fractional

    static Policy integral(double reservation_price) {
        return {ProblemKind::Integral, reservation_price, std::nullopt};
    }
    static Policy fractional(PiecewiseThreshold phi) {
        return {ProblemKind::Fractional, 0.0, std::move(phi)};
    }
};

/// One step of the threshold rule: the allocation maximizing
/// v*x - integral of phi over [w, w+x], with maximal tie-break.
inline double ota_step(const Policy& policy, double w, double v) {
    if (w < 0.0 || w > 1.0) throw DomainError("ota_step: utilization outside [0,1]");
    if (policy.kind == ProblemKind::Integral) {
        return (w == 0.0 && v >= policy.reservation) ? 1.0 : 0.0;
    }
    double target = policy.threshold->pseudo_inverse(v);
    return std::max(0.0, target - w);
}

/// Run the policy over an instance; the remaining balance is force-converted
/// at the final price. The policy never sees the horizon.
inline ExecutionTrace run_instance(const Policy& policy, const Instance& inst) {
    if (inst.prices.empty()) throw EmptyInstanceError();
    std::size_t n = inst.prices.size();
    ExecutionTrace trace;
    trace.utilization_path.reserve(n + 1);
    trace.allocations.reserve(n);
    double w = 0.0;
    trace.utilization_path.push_back(w);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double x = ota_step(policy, w, inst.prices[i]);
        trace.allocations.push_back(x);
        w += x;
        if (w > 1.0) w = 1.0;
        trace.utilization_path.push_back(w);
        trace.profit += inst.prices[i] * x;
    }
    trace.compulsory_amount = 1.0 - w;
    trace.allocations.push_back(trace.compulsory_amount);
    trace.profit += inst.prices[n - 1] * trace.compulsory_amount;
    trace.utilization_path.push_back(1.0);
    return trace;
}

/// Grid oracle for the per-step argmax; checks every non-compulsory allocation
/// against a 1e-3 grid of feasible alternatives with the given objective slack.
inline bool replay_allocation_optimality(const Policy& policy, const Instance& inst,
                                         const ExecutionTrace& trace, double slack = 1e-9) {
    std::size_t n = inst.prices.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double w = trace.utilization_path[i];
        double v = inst.prices[i];
        double x = trace.allocations[i];
        auto objective = [&](double a) {
            if (policy.kind == ProblemKind::Integral)
                return v * a - policy.reservation * a;
            return v * a - policy.threshold->integrate(w, std::min(1.0, w + a));
        };
        double chosen = objective(x);
        if (policy.kind == ProblemKind::Integral) {
            // feasible set is {0} once converted, {0,1} otherwise
            if (chosen + slack < objective(0.0)) return false;
            if (w == 0.0 && chosen + slack < objective(1.0)) return false;
        } else {
            double room = 1.0 - w;
            const int steps = 1000;
            for (int k = 0; k <= steps; ++k) {
                double a = room * static_cast<double>(k) / steps;
                if (chosen + slack < objective(a)) return false;
            }
        }
    }
    return true;
}

/// Two extra columns beyond the raw prices: allocation and running utilization.
inline std::string trace_to_csv(const Instance& inst, const ExecutionTrace& trace) {
    std::ostringstream out;
    out.precision(17);
    out << "step,price,allocation,utilization,cumulative_profit\n";
    double cum = 0.0;
    for (std::size_t i = 0; i < inst.prices.size(); ++i) {
        cum += inst.prices[i] * trace.allocations[i];
        out << (i + 1) << ',' << inst.prices[i] << ',' << trace.allocations[i] << ','
            << trace.utilization_path[i + 1] << ',' << cum << '\n';
    }
    return out.str();
}

}  // namespace ota

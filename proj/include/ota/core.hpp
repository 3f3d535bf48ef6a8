#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ota {

// Error hierarchy shared by all modules.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfBoundsError : std::runtime_error {
    std::size_t index;
    double value;
    OutOfBoundsError(std::size_t i, double v)
        : std::runtime_error("price " + std::to_string(v) + " at index " +
                             std::to_string(i) + " outside [L,U]"),
          index(i), value(v) {}
};

struct EmptyInstanceError : std::runtime_error {
    EmptyInstanceError() : std::runtime_error("instance has no prices") {}
};

struct NonPositiveProfitError : std::runtime_error {
    NonPositiveProfitError() : std::runtime_error("algorithm profit must be positive") {}
};

/// Market price bounds [L, U] with fluctuation theta = U/L.
class PriceBounds {
public:
    PriceBounds(double lower, double upper) : lower_(lower), upper_(upper) {
        if (!(lower > 0.0) || !(lower <= upper))
            throw DomainError("require 0 < L <= U");
    }

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    double theta() const { return upper_ / lower_; }

    bool contains(double price) const { return price >= lower_ && price <= upper_; }

private:
    double lower_;
    double upper_;
};

enum class ProblemKind {
    Integral,   // 1-max-search: the whole dollar trades in one transaction
    Fractional  // one-way trading: fraction-by-fraction conversion
};

/// A price sequence v_1..v_N revealed online.
struct Instance {
    std::vector<double> prices;

    std::size_t length() const { return prices.size(); }
};

inline const Instance& validate_instance(const Instance& inst, const PriceBounds& bounds) {
    if (inst.prices.empty()) throw EmptyInstanceError();
    for (std::size_t i = 0; i < inst.prices.size(); ++i) {
        if (!bounds.contains(inst.prices[i])) throw OutOfBoundsError(i, inst.prices[i]);
    }
    return inst;
}

/// OPT of the offline conversion problem: convert everything at the peak.
inline double offline_opt(const Instance& inst) {
    if (inst.prices.empty()) throw EmptyInstanceError();
    double best = inst.prices.front();
    for (double v : inst.prices) best = std::max(best, v);
    return best;
}

inline double profit_ratio(double opt, double alg) {
    if (!(alg > 0.0)) throw NonPositiveProfitError();
    return opt / alg;
}

/// Step-by-step record of running a policy on an instance.
struct ExecutionTrace {
    std::vector<double> allocations;       // x_1..x_N, fractions of the initial dollar
    std::vector<double> utilization_path;  // w^(0)..w^(N)
    double profit = 0.0;
    double compulsory_amount = 0.0;        // fraction force-converted at step N
};

}  // namespace ota

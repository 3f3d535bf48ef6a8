#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"
#include "ota/breakpoints.hpp"
#include "ota/core.hpp"
#include "ota/engine.hpp"
#include "ota/tradeoff.hpp"

namespace ota {

struct BadRewardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exponentially weighted forecaster over a uniform lambda grid
/// (full information: every arm's reward is observed each round).
struct LearnerState {
    std::vector<double> lambda_grid;
    std::vector<double> weights;
    std::size_t round = 0;
    std::vector<std::vector<double>> reward_history;  // per round, per arm
    std::vector<std::size_t> chosen_arms;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_calls = 0;  // draws so far, for reproducible resumption

    static LearnerState make(std::size_t arms, std::uint64_t seed) {
        if (arms < 2) throw DomainError("learner needs at least 2 arms");
        LearnerState s;
        s.lambda_grid.resize(arms);
        for (std::size_t k = 0; k < arms; ++k)
            s.lambda_grid[k] = static_cast<double>(k) / static_cast<double>(arms - 1);
        s.weights.assign(arms, 1.0 / static_cast<double>(arms));
        s.rng_seed = seed;
        return s;
    }

    nlohmann::json to_json() const {
        return {{"lambda_grid", lambda_grid}, {"weights", weights},   {"round", round},
                {"seed", rng_seed},           {"rng_calls", rng_calls}};
    }

    static LearnerState from_json(const nlohmann::json& j) {
        LearnerState s;
        s.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
        s.weights = j.at("weights").get<std::vector<double>>();
        s.round = j.at("round").get<std::size_t>();
        s.rng_seed = j.at("seed").get<std::uint64_t>();
        s.rng_calls = j.at("rng_calls").get<std::uint64_t>();
        return s;
    }
};

/// Pure-online choice: full distrust of the prediction.
inline double lambda_worst_case() { return 1.0; }

/// Normalize a per-unit profit in [L,U] into [0,1].
inline double normalized_reward(double profit, const PriceBounds& bounds) {
    double r = (profit - bounds.lower()) / (bounds.upper() - bounds.lower());
    return std::clamp(r, 0.0, 1.0);
}

inline Policy policy_for_lambda(ProblemKind kind, const PriceBounds& bounds, double lambda,
                                double prediction) {
    if (kind == ProblemKind::Integral)
        return Policy::integral(reservation_price(bounds, lambda, prediction));
    return Policy::fractional(build_threshold_one_way(bounds, lambda, prediction));
}

/// Hindsight-best lambda on a revealed instance (smallest grid value on ties).
inline double lambda_offline_best(const Instance& inst, double prediction,
                                  const PriceBounds& bounds, ProblemKind kind,
                                  std::size_t grid_size) {
    if (grid_size < 2) throw DomainError("lambda_offline_best: grid_size < 2");
    double best_lambda = 0.0, best_profit = -1.0;
    for (std::size_t k = 0; k < grid_size; ++k) {
        double lambda = static_cast<double>(k) / static_cast<double>(grid_size - 1);
        Policy policy = policy_for_lambda(kind, bounds, lambda, prediction);
        double profit = run_instance(policy, inst).profit;
        if (profit > best_profit + 1e-15) {
            best_profit = profit;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

namespace detail {

// Portable uniform draw in [0,1): the raw mt19937_64 stream is specified by
// the standard, unlike the distribution adapters.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Sample an arm from the current weight distribution; selection does not
/// change the weights.
inline std::pair<double, LearnerState> alf_select(LearnerState state) {
    std::mt19937_64 rng(state.rng_seed);
    rng.discard(state.rng_calls);
    double u = detail::uniform01(rng);
    state.rng_calls += 1;
    double total = 0.0;
    for (double w : state.weights) total += w;
    double acc = 0.0;
    std::size_t chosen = state.weights.size() - 1;
    for (std::size_t k = 0; k < state.weights.size(); ++k) {
        acc += state.weights[k] / total;
        if (u < acc) {
            chosen = k;
            break;
        }
    }
    state.chosen_arms.push_back(chosen);
    return {state.lambda_grid[chosen], state};
}

/// Multiplicative update with rate sqrt(8 ln K / t); weights renormalized.
inline LearnerState alf_update(LearnerState state, const std::vector<double>& rewards) {
    if (rewards.size() != state.weights.size())
        throw BadRewardError("alf_update: reward vector size mismatch");
    for (double r : rewards)
        if (r < -1e-12 || r > 1.0 + 1e-12) throw BadRewardError("alf_update: reward outside [0,1]");
    state.round += 1;
    double k = static_cast<double>(state.weights.size());
    double rate = std::sqrt(8.0 * std::log(k) / static_cast<double>(state.round));
    double total = 0.0;
    for (std::size_t i = 0; i < state.weights.size(); ++i) {
        state.weights[i] *= std::exp(rate * rewards[i]);
        total += state.weights[i];
    }
    for (double& w : state.weights) w /= total;
    state.reward_history.push_back(rewards);
    return state;
}

struct RegretCurve {
    std::vector<double> per_round;  // cumulative regret after each round
    double cumulative = 0.0;
    double average = 0.0;  // cumulative / T
};

/// Cumulative regret against the best fixed arm in hindsight.
inline RegretCurve regret(const LearnerState& state) {
    RegretCurve out;
    std::size_t t_max = std::min(state.reward_history.size(), state.chosen_arms.size());
    if (t_max == 0) return out;
    std::size_t arms = state.weights.size();
    std::vector<double> arm_cum(arms, 0.0);
    double chosen_cum = 0.0;
    for (std::size_t t = 0; t < t_max; ++t) {
        for (std::size_t k = 0; k < arms; ++k) arm_cum[k] += state.reward_history[t][k];
        chosen_cum += state.reward_history[t][state.chosen_arms[t]];
        double best = *std::max_element(arm_cum.begin(), arm_cum.end());
        out.per_round.push_back(best - chosen_cum);
    }
    out.cumulative = out.per_round.back();
    out.average = out.cumulative / static_cast<double>(t_max);
    return out;
}

}  // namespace ota

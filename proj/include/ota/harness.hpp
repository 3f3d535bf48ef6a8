#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ota/analysis.hpp"
#include "ota/core.hpp"
#include "ota/engine.hpp"
#include "ota/learning.hpp"

namespace ota {

struct ParseError : std::runtime_error {
    std::size_t line;
    ParseError(std::size_t l, const std::string& what)
        : std::runtime_error("line " + std::to_string(l) + ": " + what), line(l) {}
};

struct UnsortedDataError : std::runtime_error {
    UnsortedDataError() : std::runtime_error("timestamps are not sorted") {}
};

struct NonPositivePriceError : std::runtime_error {
    std::size_t line;
    explicit NonPositivePriceError(std::size_t l)
        : std::runtime_error("non-positive price at line " + std::to_string(l)), line(l) {}
};

struct WindowTooLongError : std::runtime_error {
    WindowTooLongError() : std::runtime_error("window longer than the series") {}
};

struct TooFewWindowsError : std::runtime_error {
    TooFewWindowsError() : std::runtime_error("need at least 2 windows for predictions") {}
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PricePoint {
    std::int64_t timestamp;
    double price;
};

namespace detail {

// days since 1970-01-01 for a civil date (proleptic Gregorian)
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::optional<std::int64_t> parse_timestamp(const std::string& s) {
    // integer epoch seconds
    if (!s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-')) {
        bool all_digits = true;
        for (std::size_t i = (s[0] == '-' ? 1u : 0u); i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) all_digits = false;
        if (all_digits) {
            try {
                return std::stoll(s);
            } catch (...) {
                return std::nullopt;
            }
        }
    }
    // ISO-8601: YYYY-MM-DD[THH:MM:SS]
    int y, mo, d, h = 0, mi = 0, se = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &se);
    if (n != 3 && n != 6) {
        n = std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &se);
        if (n != 3 && n != 6) return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

}  // namespace detail

/// Parse a `timestamp,price` CSV; timestamps as epoch seconds or ISO-8601.
inline std::vector<PricePoint> parse_prices(std::istream& in) {
    std::vector<PricePoint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.find_first_not_of("0123456789-") == 0 &&
            !std::isdigit(static_cast<unsigned char>(line[0])))
            continue;  // header row
        auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(lineno, "expected `timestamp,price`");
        auto ts = detail::parse_timestamp(line.substr(0, comma));
        if (!ts) throw ParseError(lineno, "unparseable timestamp");
        double price;
        try {
            price = std::stod(line.substr(comma + 1));
        } catch (...) {
            throw ParseError(lineno, "unparseable price");
        }
        if (!(price > 0.0)) throw NonPositivePriceError(lineno);
        if (!out.empty() && *ts < out.back().timestamp) throw UnsortedDataError();
        out.push_back({*ts, price});
    }
    return out;
}

inline std::vector<PricePoint> load_prices(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return parse_prices(in);
}

/// Sliding windows at offsets 0, stride, 2*stride, ...; partial tail dropped.
inline std::vector<Instance> make_windows(const std::vector<PricePoint>& series,
                                          std::size_t window_len, std::size_t stride) {
    if (window_len < 2 || stride < 1) throw ConfigError("window_len >= 2 and stride >= 1");
    if (window_len > series.size()) throw WindowTooLongError();
    std::vector<Instance> windows;
    for (std::size_t start = 0; start + window_len <= series.size(); start += stride) {
        Instance inst;
        inst.prices.reserve(window_len);
        for (std::size_t i = 0; i < window_len; ++i)
            inst.prices.push_back(series[start + i].price);
        windows.push_back(std::move(inst));
    }
    return windows;
}

/// P for window i is the max price of window i-1, clamped into [L,U].
/// Entry j corresponds to window j+1; window 0 is not evaluated.
inline std::vector<double> predict_prev_max(const std::vector<Instance>& windows,
                                            const PriceBounds& bounds) {
    if (windows.size() < 2) throw TooFewWindowsError();
    std::vector<double> preds;
    preds.reserve(windows.size() - 1);
    for (std::size_t i = 1; i < windows.size(); ++i) {
        double m = offline_opt(windows[i - 1]);
        preds.push_back(std::clamp(m, bounds.lower(), bounds.upper()));
    }
    return preds;
}

/// Multiplicative error adjustment: level 0 snaps the prediction to the true
/// peak, level 1 leaves it untouched (before the clamp).
inline double adjust_error(double prediction, double true_peak, double level,
                           const PriceBounds& bounds) {
    double p = true_peak + (prediction - true_peak) * level;
    return std::clamp(p, bounds.lower(), bounds.upper());
}

/// With seeded probability q, replace the last price by L.
inline Instance inject_crash(Instance inst, double q, std::uint64_t seed,
                             const PriceBounds& bounds) {
    if (inst.prices.empty()) return inst;
    std::mt19937_64 rng(seed);
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < q) inst.prices.back() = bounds.lower();
    return inst;
}

/// Seeded geometric random walk, optionally clipped into bounds.
inline std::vector<PricePoint> synth_prices(double start, double drift, double vol,
                                            std::size_t ticks, std::uint64_t seed,
                                            std::optional<PriceBounds> clip = std::nullopt) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<PricePoint> out;
    out.reserve(ticks);
    double s = start;
    for (std::size_t t = 0; t < ticks; ++t) {
        if (t > 0) s *= std::exp(drift - 0.5 * vol * vol + vol * gauss(rng));
        if (clip) s = std::clamp(s, clip->lower(), clip->upper());
        out.push_back({static_cast<std::int64_t>(t), s});
    }
    return out;
}

struct BacktestConfig {
    std::string data_path;
    std::size_t window_len = 2016;
    std::size_t stride = 1152;  // 4 days of 5-minute ticks -> 3-day overlap
    std::optional<PriceBounds> bounds;  // derived from data when absent
    double error_level = 1.0;
    double crash_prob = 0.0;
    std::uint64_t seed = 0;
    ProblemKind kind = ProblemKind::Fractional;
    std::set<std::string> algorithms = {"worst_case", "offline_best", "alf", "best_static"};
    std::size_t lambda_grid_size = 33;
};

struct AlgorithmSummary {
    std::vector<double> ratios;  // per evaluated window
    std::vector<double> avg_cumulative_profit;  // running mean of normalized profit
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double whisker_low = 0, whisker_high = 0;
};

struct BacktestReport {
    std::map<std::string, AlgorithmSummary> algorithms;
    std::vector<double> regret_curve;  // cumulative regret of alf per round
    double theta_effective = 1.0;
    nlohmann::ordered_json config_echo;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["config"] = config_echo;
        j["theta_effective"] = theta_effective;
        for (const auto& [name, s] : algorithms) {
            nlohmann::ordered_json a;
            a["summary"] = {{"min", s.min},
                            {"whisker_low", s.whisker_low},
                            {"q1", s.q1},
                            {"median", s.median},
                            {"q3", s.q3},
                            {"whisker_high", s.whisker_high},
                            {"max", s.max}};
            a["ratios"] = s.ratios;
            a["avg_cumulative_profit"] = s.avg_cumulative_profit;
            j["algorithms"][name] = a;
        }
        j["regret_curve"] = regret_curve;
        return j;
    }

    std::string boxplot_csv() const {
        std::ostringstream out;
        out.precision(17);
        out << "algorithm,min,whisker_low,q1,median,q3,whisker_high,max\n";
        for (const auto& [name, s] : algorithms) {
            out << name << ',' << s.min << ',' << s.whisker_low << ',' << s.q1 << ','
                << s.median << ',' << s.q3 << ',' << s.whisker_high << ',' << s.max << '\n';
        }
        return out.str();
    }
};

namespace detail {

inline double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline void summarize(AlgorithmSummary& s, const PriceBounds& bounds) {
    std::vector<double> sorted = s.ratios;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = quantile(sorted, 0.25);
    s.median = quantile(sorted, 0.5);
    s.q3 = quantile(sorted, 0.75);
    double iqr = s.q3 - s.q1;
    s.whisker_low = s.min;
    s.whisker_high = s.max;
    for (double r : sorted) {
        if (r >= s.q1 - 1.5 * iqr) {
            s.whisker_low = r;
            break;
        }
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        if (*it <= s.q3 + 1.5 * iqr) {
            s.whisker_high = *it;
            break;
        }
    }
    (void)bounds;
}

}  // namespace detail

inline BacktestReport run_backtest(const BacktestConfig& config,
                                   const std::vector<PricePoint>& series) {
    if (config.error_level < 0.0 || config.error_level > 1.0 || config.crash_prob < 0.0 ||
        config.crash_prob > 1.0)
        throw ConfigError("error_level and crash_prob must lie in [0,1]");
    if (config.lambda_grid_size < 2) throw ConfigError("lambda_grid_size >= 2");

    PriceBounds bounds = [&] {
        if (config.bounds) return *config.bounds;
        double lo = series.front().price, hi = series.front().price;
        for (const PricePoint& p : series) {
            lo = std::min(lo, p.price);
            hi = std::max(hi, p.price);
        }
        return PriceBounds(0.95 * lo, 1.05 * hi);
    }();

    std::vector<Instance> windows = make_windows(series, config.window_len, config.stride);
    if (windows.size() < 2) throw TooFewWindowsError();
    for (Instance& w : windows)
        for (double& v : w.prices) v = std::clamp(v, bounds.lower(), bounds.upper());
    std::vector<double> predictions = predict_prev_max(windows, bounds);

    std::size_t rounds = predictions.size();
    std::size_t arms = config.lambda_grid_size;
    std::vector<double> lambda_grid(arms);
    for (std::size_t k = 0; k < arms; ++k)
        lambda_grid[k] = static_cast<double>(k) / static_cast<double>(arms - 1);

    // Per-round instances, predictions, and per-arm profits (full information).
    std::vector<Instance> rounds_inst;
    std::vector<double> rounds_opt(rounds), rounds_pred(rounds);
    std::vector<std::vector<double>> profits(rounds, std::vector<double>(arms));
    rounds_inst.reserve(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
        Instance inst = inject_crash(windows[t + 1], config.crash_prob,
                                     config.seed + 1000003ULL * (t + 1), bounds);
        double true_peak = offline_opt(inst);
        double p = adjust_error(predictions[t], true_peak, config.error_level, bounds);
        rounds_pred[t] = p;
        rounds_opt[t] = true_peak;
        for (std::size_t k = 0; k < arms; ++k) {
            Policy policy = policy_for_lambda(config.kind, bounds, lambda_grid[k], p);
            profits[t][k] = run_instance(policy, inst).profit;
        }
        rounds_inst.push_back(std::move(inst));
    }

    BacktestReport report;
    report.theta_effective = bounds.theta();
    report.config_echo = {{"data_path", config.data_path},
                          {"window_len", config.window_len},
                          {"stride", config.stride},
                          {"bounds", {{"lower", bounds.lower()}, {"upper", bounds.upper()}}},
                          {"error_level", config.error_level},
                          {"crash_prob", config.crash_prob},
                          {"seed", config.seed},
                          {"kind", config.kind == ProblemKind::Integral ? "1-max-search"
                                                                        : "one-way-trading"},
                          {"lambda_grid_size", config.lambda_grid_size},
                          {"rounds", rounds}};

    auto add_algorithm = [&](const std::string& name, const std::vector<std::size_t>& arm_seq) {
        AlgorithmSummary s;
        double cum = 0.0;
        for (std::size_t t = 0; t < rounds; ++t) {
            double profit = profits[t][arm_seq[t]];
            s.ratios.push_back(profit_ratio(rounds_opt[t], profit));
            cum += normalized_reward(profit, bounds);
            s.avg_cumulative_profit.push_back(cum / static_cast<double>(t + 1));
        }
        detail::summarize(s, bounds);
        report.algorithms[name] = std::move(s);
    };

    if (config.algorithms.count("worst_case"))
        add_algorithm("worst_case", std::vector<std::size_t>(rounds, arms - 1));

    if (config.algorithms.count("offline_best")) {
        std::vector<std::size_t> seq(rounds);
        for (std::size_t t = 0; t < rounds; ++t) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < arms; ++k)
                if (profits[t][k] > profits[t][best] + 1e-15) best = k;
            seq[t] = best;
        }
        add_algorithm("offline_best", seq);
    }

    if (config.algorithms.count("best_static")) {
        std::size_t best = 0;
        double best_total = -1.0;
        for (std::size_t k = 0; k < arms; ++k) {
            double total = 0.0;
            for (std::size_t t = 0; t < rounds; ++t) total += profits[t][k];
            if (total > best_total + 1e-15) {
                best_total = total;
                best = k;
            }
        }
        add_algorithm("best_static", std::vector<std::size_t>(rounds, best));
    }

    if (config.algorithms.count("alf")) {
        LearnerState learner = LearnerState::make(arms, config.seed);
        for (std::size_t t = 0; t < rounds; ++t) {
            auto [lambda, next] = alf_select(std::move(learner));
            learner = std::move(next);
            (void)lambda;
            std::vector<double> rewards(arms);
            for (std::size_t k = 0; k < arms; ++k)
                rewards[k] = normalized_reward(profits[t][k], bounds);
            learner = alf_update(std::move(learner), rewards);
        }
        add_algorithm("alf", learner.chosen_arms);
        report.regret_curve = regret(learner).per_round;
    }

    return report;
}

inline BacktestReport run_backtest(const BacktestConfig& config) {
    return run_backtest(config, load_prices(config.data_path));
}

}  // namespace ota

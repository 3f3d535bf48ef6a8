// End-to-end acceptance gate: one pass/fail line per criterion, pinned
// tolerances, nonzero exit on any failure.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "ota/analysis.hpp"
#include "ota/breakpoints.hpp"
#include "ota/engine.hpp"
#include "ota/harness.hpp"
#include "ota/lambert.hpp"
#include "ota/learning.hpp"
#include "ota/threshold.hpp"
#include "ota/tradeoff.hpp"

using namespace ota;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail = "") {
    std::printf("criterion %d (%s): %s%s%s\n", id, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " ", detail.c_str());
    if (!pass) ++failures;
}

bool criterion1() {
    for (double theta : {1.5, 2.0, 5.0, 20.0}) {
        double astar = alpha_star(theta);
        for (int i = 0; i <= 200; ++i) {
            double lambda = static_cast<double>(i) / 200.0;
            auto tm = tradeoff_max_search(lambda, theta);
            if (std::abs(tm.eta * tm.gamma - theta) > 1e-10) return false;
            auto tw = tradeoff_one_way(lambda, theta);
            double bracket = theta / tw.gamma +
                             (theta - 1.0) *
                                 (1.0 - std::log((theta - 1.0) / (tw.gamma - 1.0)) / tw.gamma);
            if (std::abs(tw.eta * bracket - theta) > 1e-10 * theta) return false;
        }
        if (std::abs(tradeoff_one_way(1.0, theta).gamma - astar) > 1e-9) return false;
        if (std::abs(tradeoff_one_way(0.0, theta).gamma - theta) > 1e-9) return false;
        if (std::abs(tradeoff_one_way(0.0, theta).eta - 1.0) > 1e-9) return false;
    }
    double lo = -1.0 / std::exp(1.0);
    for (int i = 0; i <= 10000; ++i) {
        double x = lo + (1000.0 - lo) * static_cast<double>(i) / 10000.0;
        double w = lambert_w(x);
        if (std::abs(w * std::exp(w) - x) > 1e-12 * std::max(1.0, x)) return false;
    }
    return std::abs(alpha_star(5.0) - 1.71786) <= 1e-4;
}

bool criterion2() {
    PriceBounds b(2.0, 10.0);
    double L = b.lower(), U = b.upper();
    for (double lambda : {0.25, 0.5, 0.75, 1.0}) {
        auto t = tradeoff_one_way(lambda, b.theta());
        auto bb = boundary_breakpoints(b, t.eta, t.gamma);
        double r1 = bb.M - (L + (t.eta - 1.0) * L * std::exp(t.eta * bb.beta));
        double r2 = bb.M * t.gamma / t.eta - (L + (U - L) * std::exp(t.gamma * (bb.beta - 1.0)));
        if (std::abs(r1) > 1e-9 * U || std::abs(r2) > 1e-9 * U) return false;
        for (int i = 0; i <= 10; ++i) {
            double P = bb.M + (U - bb.M) * static_cast<double>(i) / 10.0;
            auto ib = intermediate_breakpoints(b, t.eta, t.gamma, P);
            if (!(ib.beta1 >= -1e-12 && ib.beta1 <= ib.beta1p + 1e-12 &&
                  ib.beta1p <= ib.beta2 + 1e-12 && ib.beta2 <= 1.0 + 1e-12))
                return false;
            double e1 =
                ib.beta1 -
                std::log((std::max(ib.M1 / L, t.gamma) - 1.0) / (t.gamma - 1.0)) / t.gamma;
            if (std::abs(e1) > 1e-8) return false;
            if (i == 10) {
                if (ib.M1 != U || ib.beta1p != 1.0 || ib.beta2 != 1.0) return false;
                continue;
            }
            double head =
                L * ib.beta1 + (std::max(ib.M1, t.gamma * L) - t.gamma * L) / t.gamma;
            double e2 =
                ib.M1 / t.eta - (head + (ib.beta1p - ib.beta1) * ib.M1 + (1.0 - ib.beta1p) * L);
            double e3 = P - (L + (ib.M1 - L) * std::exp(t.eta * (ib.beta2 - ib.beta1p)));
            double e4 = ib.beta2 -
                        (1.0 + std::log((std::min(P * t.gamma / t.eta, U) - L) / (U - L)) /
                                   t.gamma);
            if (std::abs(e2) > 1e-8 * U || std::abs(e3) > 1e-8 * U || std::abs(e4) > 1e-8)
                return false;
        }
    }
    return true;
}

bool criterion3(std::string& detail) {
    PriceBounds b(2.0, 10.0);
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto tm = tradeoff_max_search(lambda, b.theta());
        PolicyFactory rf = [&, lambda](double P) {
            return Policy::integral(reservation_price(b, lambda, P));
        };
        auto rep = certify(rf, b, tm, 11, 2000);
        if (rep.measured_consistency > tm.eta * 1.001 ||
            rep.measured_robustness > tm.gamma * 1.001 ||
            rep.measured_robustness < tm.gamma * 0.99) {
            detail = "single-transaction certificate out of range at lambda=" +
                     std::to_string(lambda);
            return false;
        }
        auto tw = tradeoff_one_way(lambda, b.theta());
        PolicyFactory tf = [&, lambda](double P) {
            return Policy::fractional(build_threshold_one_way(b, lambda, P));
        };
        auto wrep = certify(tf, b, tw, 11, 2000);
        if (wrep.measured_consistency > tw.eta * 1.001 ||
            wrep.measured_robustness > tw.gamma * 1.001) {
            detail = "fractional certificate out of range at lambda=" + std::to_string(lambda);
            return false;
        }
    }
    // pure-online designs
    double worst = 1.0;
    Policy pure_r = Policy::integral(pure_reservation_max_search(b));
    Policy pure_t = Policy::fractional(pure_threshold_one_way(b));
    double worst_t = 1.0;
    for (int i = 0; i <= 200; ++i) {
        double p = b.lower() + (b.upper() - b.lower()) * static_cast<double>(i) / 200.0;
        Instance inst = p_instance(b, p, 2000);
        worst = std::max(worst, profit_ratio(offline_opt(inst), run_instance(pure_r, inst).profit));
        worst_t =
            std::max(worst_t, profit_ratio(offline_opt(inst), run_instance(pure_t, inst).profit));
    }
    if (worst > std::sqrt(b.theta()) * 1.001) {
        detail = "pure single-transaction design exceeds its guarantee";
        return false;
    }
    if (worst_t > alpha_star(b.theta()) * 1.001) {
        detail = "pure fractional design exceeds its guarantee";
        return false;
    }
    return true;
}

bool criterion4() {
    PriceBounds b(2.0, 10.0);
    double theta = b.theta();
    double lambda = 0.5;
    PolicyFactory blend = [&](double P) {
        return Policy::integral(naive_reservation_price(b, NaiveMode::LinearBlend, lambda, P));
    };
    auto targets = tradeoff_max_search(lambda, theta);
    auto rep = certify(blend, b, targets, 30, 400);
    double expect = lambda * std::sqrt(theta) + (1.0 - lambda) * theta;
    if (rep.measured_robustness < expect - 0.02 || rep.measured_robustness > expect + 1e-9)
        return false;
    if (rep.measured_consistency < std::sqrt(theta) - 0.01) return false;

    Policy blind =
        Policy::integral(naive_reservation_price(b, NaiveMode::BlindPrediction, 0.0, b.upper()));
    Instance inst = p_instance(b, b.upper() - 0.01, 2000);
    double ratio = profit_ratio(offline_opt(inst), run_instance(blind, inst).profit);
    return ratio >= theta - 0.01;
}

bool criterion5() {
    double theta = 5.0;
    for (int i = 0; i <= 200; ++i) {
        double lambda = static_cast<double>(i) / 200.0;
        auto tm = tradeoff_max_search(lambda, theta);
        if (std::abs(tm.eta - lb_consistency_max_search(tm.gamma, theta)) > 1e-9) return false;
        auto tw = tradeoff_one_way(lambda, theta);
        if (std::abs(tw.eta - lb_consistency_one_way(tw.gamma, theta)) > 1e-9) return false;
    }
    // fractional frontier dominates the single-transaction frontier at matched
    // robustness
    double gmin = std::sqrt(theta);
    for (int i = 0; i <= 99; ++i) {
        double gamma = gmin + (theta - gmin) * static_cast<double>(i) / 99.0;
        if (lb_consistency_one_way(gamma, theta) >
            lb_consistency_max_search(gamma, theta) + 1e-9)
            return false;
    }
    return true;
}

bool criterion6() {
    PriceBounds b(2.0, 10.0);
    double lambda = 0.5;
    auto t = tradeoff_one_way(lambda, b.theta());
    Policy policy = Policy::fractional(build_threshold_one_way(b, lambda, b.upper()));
    std::vector<double> grid;
    for (int i = 0; i <= 160; ++i)
        grid.push_back(b.lower() + (b.upper() - b.lower()) * static_cast<double>(i) / 160.0);
    // keep the trapezoid rule off g's jump at U
    grid.push_back(b.upper() - 1e-6);
    auto g = conversion_function(policy, b, grid, 2000);
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i].second < g[i - 1].second - 1e-9) return false;
    if (std::abs(g.back().second - 1.0) > 1e-9) return false;
    for (auto& [p, gp] : g) {
        if (p < t.gamma * b.lower() + 1e-12) continue;
        double need =
            std::log((p - b.lower()) / (t.gamma * b.lower() - b.lower())) / t.gamma;
        if (gp < need - 0.01) return false;
    }
    return check_consistency_integral_constraint(g, t.gamma, t.eta, b);
}

bool criterion7(std::string& detail) {
    PriceBounds b(2.0, 10.0);
    double L = b.lower(), U = b.upper(), theta = b.theta();

    // pure single-transaction design
    {
        double r = pure_reservation_max_search(b);
        PiecewiseThreshold phi({ThresholdSegment::flat(0.0, 1.0, r)}, b);
        double s = std::sqrt(theta);
        auto rep = check_sufficient_condition(phi, {L, r, U}, {0.0, 0.0, 1.0}, {s, s}, b);
        if (!rep.all_pass()) {
            detail = "pure single-transaction partition rejected";
            return false;
        }
    }

    // prediction-aware reservation design (all three branches)
    {
        double lambda = 0.5;
        auto t = tradeoff_max_search(lambda, theta);
        for (double P : {3.0, 4.0, 8.0}) {
            double r = reservation_price(b, lambda, P);
            PiecewiseThreshold phi({ThresholdSegment::flat(0.0, 1.0, r)}, b);
            auto rep = check_sufficient_condition(phi, {L, r, U}, {0.0, 0.0, 1.0},
                                                  {t.gamma, t.gamma}, b);
            if (!rep.all_pass()) {
                detail = "prediction-aware reservation partition rejected";
                return false;
            }
        }
    }

    double lambda = 0.5;
    auto t = tradeoff_one_way(lambda, theta);
    auto bb = boundary_breakpoints(b, t.eta, t.gamma);

    // two-piece fractional design (low prediction)
    PiecewiseThreshold low(
        {ThresholdSegment::exp_piece(0.0, bb.beta, (t.eta - 1.0) * L, t.eta, 0.0),
         ThresholdSegment::exp_piece(bb.beta, 1.0, U - L, t.gamma, 1.0)},
        b);
    auto rep_low = check_sufficient_condition(low, {L, bb.M, U}, {0.0, bb.beta, 1.0},
                                              {t.eta, t.gamma}, b);
    if (!rep_low.all_pass()) {
        detail = "two-piece fractional partition rejected";
        return false;
    }

    // four-piece fractional design (intermediate prediction)
    double P = 7.0;
    auto ib = intermediate_breakpoints(b, t.eta, t.gamma, P);
    auto mid = build_threshold_one_way(b, lambda, P);
    auto rep_mid = check_sufficient_condition(mid, {L, ib.M1, P, U},
                                              {0.0, ib.beta1, ib.beta2, 1.0},
                                              {t.gamma, t.eta, t.gamma}, b);
    if (!rep_mid.all_pass()) {
        detail = "four-piece fractional partition rejected";
        return false;
    }

    // deliberately weakened factor must fail with a localized verdict
    auto bad = check_sufficient_condition(low, {L, bb.M, U}, {0.0, bb.beta, 1.0},
                                          {0.9 * t.eta, t.gamma}, b);
    if (bad.all_pass()) {
        detail = "weakened factor vector was not rejected";
        return false;
    }
    bool localized = false;
    for (const auto& v : bad.pieces)
        if (!v.pass && !v.detail.empty()) localized = true;
    if (!localized) detail = "rejection carried no location";
    return localized;
}

bool criterion8() {
    PriceBounds b(2.0, 10.0);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> price(b.lower(), b.upper());
    Policy integral = Policy::integral(pure_reservation_max_search(b));
    Policy fractional = Policy::fractional(build_threshold_one_way(b, 0.5, 6.0));
    for (int rep = 0; rep < 100; ++rep) {
        Instance inst;
        int n = 5 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) inst.prices.push_back(price(rng));
        for (const Policy& p : {integral, fractional}) {
            auto trace = run_instance(p, inst);
            if (!replay_allocation_optimality(p, inst, trace, 1e-9)) return false;
        }
    }
    return true;
}

bool criterion9(std::string& detail) {
    // Rising walk that saturates at the ceiling: the arms disagree while the
    // price climbs, then tie once every window tops out, so the running
    // average regret settles instead of jittering with the sampled arm.
    auto series = synth_prices(2.0, 0.004, 0.001, 50 + 500 * 20, 4, PriceBounds(2.0, 10.0));
    BacktestConfig cfg;
    cfg.window_len = 50;
    cfg.stride = 20;
    cfg.bounds = PriceBounds(2.0, 10.0);
    cfg.seed = 4;
    auto rep = run_backtest(cfg, series);
    auto rep2 = run_backtest(cfg, series);
    if (rep.to_json().dump() != rep2.to_json().dump()) {
        detail = "report not byte-deterministic";
        return false;
    }
    const auto& alf = rep.algorithms.at("alf");
    const auto& stat = rep.algorithms.at("best_static");
    std::size_t T = alf.avg_cumulative_profit.size();
    if (T != 500) {
        detail = "expected 500 rounds, got " + std::to_string(T);
        return false;
    }
    double a = alf.avg_cumulative_profit.back();
    double s = stat.avg_cumulative_profit.back();
    if (std::abs(a - s) > 0.05 * s) {
        detail = "learner profit not within 5% of the best static choice";
        return false;
    }
    for (std::size_t t = T - 100; t + 1 < T; ++t) {
        double avg_t = rep.regret_curve[t] / static_cast<double>(t + 1);
        double avg_next = rep.regret_curve[t + 1] / static_cast<double>(t + 2);
        if (avg_next > avg_t + 1e-12) {
            detail = "average regret increased at round " + std::to_string(t + 2);
            return false;
        }
    }
    if (rep.regret_curve.back() / static_cast<double>(T) > 0.1) {
        detail = "average regret above 0.1 at the final round";
        return false;
    }

    BacktestConfig crash = cfg;
    crash.crash_prob = 0.45;
    crash.error_level = 1.0;
    auto crep = run_backtest(crash, series);
    if (crep.algorithms.at("offline_best").median >
        crep.algorithms.at("worst_case").median + 1e-12) {
        detail = "hindsight-best median worse than the worst-case policy under crashes";
        return false;
    }
    return true;
}

}  // namespace

int main() {
    std::string d;
    report(1, "closed-form trade-off and Lambert W identities", criterion1());
    report(2, "breakpoint solver residuals and ordering", criterion2());
    d.clear();
    {
        bool ok = criterion3(d);
        report(3, "empirical consistency/robustness certification", ok, d);
    }
    report(4, "naive baseline behavior", criterion4());
    report(5, "lower-bound tightness and frontier dominance", criterion5());
    report(6, "conversion-function necessary conditions", criterion6());
    d.clear();
    {
        bool ok = criterion7(d);
        report(7, "sufficient-condition checker on shipped designs", ok, d);
    }
    report(8, "engine allocations match the grid oracle", criterion8());
    d.clear();
    {
        bool ok = criterion9(d);
        report(9, "backtest learning and crash-stability properties", ok, d);
    }
    return failures == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ota/breakpoints.hpp"
#include "ota/core.hpp"
#include "ota/engine.hpp"
#include "ota/lambert.hpp"
#include "ota/threshold.hpp"
#include "ota/tradeoff.hpp"

namespace ota {

struct BadPartitionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adversarial family: prices rise linearly from L to p, then crash to L.
inline Instance p_instance(const PriceBounds& bounds, double p, std::size_t n) {
    if (!bounds.contains(p)) throw DomainError("p_instance: peak outside [L,U]");
    if (n < 3) throw DomainError("p_instance: need N >= 3");
    double L = bounds.lower();
    double delta = (p - L) / static_cast<double>(n - 2);
    Instance inst;
    inst.prices.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        inst.prices[i] = L + static_cast<double>(i) * delta;
    inst.prices[n - 2] = p;  // land on the peak exactly
    inst.prices[n - 1] = L;
    return inst;
}

inline Instance constant_instance(double p, std::size_t n = 10) {
    Instance inst;
    inst.prices.assign(n, p);
    return inst;
}

inline Instance spike_instance(const PriceBounds& bounds, double p) {
    double L = bounds.lower();
    Instance inst;
    inst.prices = {L, L, p, L, L};
    return inst;
}

using PolicyFactory = std::function<Policy(double prediction)>;

/// Empirical consistency/robustness certificate with the attaining instances.
struct CertificateReport {
    double measured_consistency = 1.0;
    double measured_robustness = 1.0;
    std::vector<std::pair<double, double>> kappa_curve;  // (xi, kappa(xi))
    std::map<std::string, std::pair<double, double>> worst_instances;  // metric -> (p, P)
    TradeoffParams targets{};

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["measured_consistency"] = measured_consistency;
        j["measured_robustness"] = measured_robustness;
        nlohmann::json curve = nlohmann::json::array();
        for (auto& [xi, k] : kappa_curve) curve.push_back({{"xi", xi}, {"kappa", k}});
        j["kappa_curve"] = curve;
        nlohmann::json worst;
        for (auto& [name, pp] : worst_instances)
            worst[name] = {{"p", pp.first}, {"P", pp.second}};
        j["worst_instances"] = worst;
        j["targets"] = {{"lambda", targets.lambda},
                        {"eta", targets.eta},
                        {"gamma", targets.gamma},
                        {"kind", targets.kind == ProblemKind::Integral ? "1-max-search"
                                                                       : "one-way-trading"}};
        return j;
    }
};

namespace detail {

inline double worst_ratio_at(const Policy& policy, const PriceBounds& bounds, double p,
                             std::size_t n) {
    double worst = 1.0;
    const Instance variants[3] = {p_instance(bounds, p, n), constant_instance(p),
                                  spike_instance(bounds, p)};
    for (const Instance& inst : variants) {
        ExecutionTrace trace = run_instance(policy, inst);
        worst = std::max(worst, profit_ratio(offline_opt(inst), trace.profit));
    }
    return worst;
}

inline std::vector<double> price_grid(const PriceBounds& bounds, std::size_t grid_size,
                                      const std::vector<double>& extras) {
    std::set<double> pts;
    double L = bounds.lower(), U = bounds.upper();
    for (std::size_t i = 0; i < grid_size; ++i)
        pts.insert(L + (U - L) * static_cast<double>(i) / static_cast<double>(grid_size - 1));
    for (double e : extras)
        if (e >= L && e <= U) pts.insert(e);
    return {pts.begin(), pts.end()};
}

}  // namespace detail

/// Grid adversary over predictions and true peaks; measures consistency
/// (ratio at p = P), robustness (ratio over all p), and the kappa curve.
inline CertificateReport certify(const PolicyFactory& factory, const PriceBounds& bounds,
                                 const TradeoffParams& targets, std::size_t p_grid_size,
                                 std::size_t n) {
    if (p_grid_size < 10) throw DomainError("certify: p_grid_size < 10");
    if (n < 100) throw DomainError("certify: N < 100");
    double L = bounds.lower(), U = bounds.upper();
    double delta = 1e-3 * (U - L);

    std::vector<double> common = {L,
                                  U,
                                  L * targets.eta,
                                  L * targets.gamma,
                                  std::sqrt(L * U) - delta,
                                  std::sqrt(L * U) + delta};
    double boundary_m = L;
    if (targets.kind == ProblemKind::Fractional) {
        boundary_m = boundary_breakpoints(bounds, targets.eta, targets.gamma).M;
        common.push_back(boundary_m);
    }
    std::vector<double> prediction_grid = detail::price_grid(bounds, p_grid_size, common);

    CertificateReport report;
    report.targets = targets;

    // (p, P, ratio) samples from the p-instance family only, for the kappa curve
    std::vector<std::tuple<double, double, double>> samples;

    for (double P : prediction_grid) {
        Policy policy = factory(P);
        std::vector<double> extras = common;
        extras.push_back(P);
        extras.push_back(P - delta);
        extras.push_back(P + delta);
        if (policy.kind == ProblemKind::Integral) {
            extras.push_back(policy.reservation - delta);
            extras.push_back(policy.reservation + delta);
        } else if (P >= boundary_m) {
            double m1 = intermediate_breakpoints(bounds, targets.eta, targets.gamma, P).M1;
            extras.push_back(m1);
            extras.push_back(m1 - delta);
            extras.push_back(m1 + delta);
        }
        std::vector<double> peaks = detail::price_grid(bounds, p_grid_size, extras);

        double consistency = detail::worst_ratio_at(policy, bounds, P, n);
        if (consistency > report.measured_consistency) {
            report.measured_consistency = consistency;
            report.worst_instances["consistency"] = {P, P};
        }
        samples.emplace_back(P, P, consistency);
        for (double p : peaks) {
            double r = detail::worst_ratio_at(policy, bounds, p, n);
            samples.emplace_back(p, P, r);
            if (r > report.measured_robustness) {
                report.measured_robustness = r;
                report.worst_instances["robustness"] = {p, P};
            }
        }
    }
    report.measured_consistency = std::max(report.measured_consistency, 1.0);
    report.measured_robustness =
        std::max(report.measured_robustness, report.measured_consistency);

    const int kappa_points = 9;
    for (int i = 0; i <= kappa_points; ++i) {
        double xi = (U - L) * static_cast<double>(i) / kappa_points;
        double k = report.measured_consistency;
        for (auto& [p, P, r] : samples)
            if (std::abs(p - P) <= xi + 1e-12) k = std::max(k, r);
        report.kappa_curve.emplace_back(xi, k);
    }
    return report;
}

/// g(p): total fraction converted on the p-instance before the compulsory step.
inline std::vector<std::pair<double, double>> conversion_function(
    const Policy& policy, const PriceBounds& bounds, const std::vector<double>& p_grid,
    std::size_t n = 2000) {
    if (policy.kind != ProblemKind::Fractional)
        throw DomainError("conversion_function: fractional policies only");
    std::vector<std::pair<double, double>> out;
    out.reserve(p_grid.size());
    for (double p : p_grid) {
        Instance inst = p_instance(bounds, p, n);
        ExecutionTrace trace = run_instance(policy, inst);
        out.emplace_back(p, trace.utilization_path[n - 1]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Trapezoid check of the consistency constraint: integral of g over
/// [gamma L, U] must not exceed (eta - 1) U / eta (1% relative slack).
inline bool check_consistency_integral_constraint(
    const std::vector<std::pair<double, double>>& g_samples, double gamma, double eta,
    const PriceBounds& bounds) {
    double lo = gamma * bounds.lower();
    double hi = bounds.upper();
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < g_samples.size(); ++i) {
        double a = std::max(g_samples[i].first, lo);
        double b = std::min(g_samples[i + 1].first, hi);
        if (b <= a) continue;
        double x0 = g_samples[i].first, x1 = g_samples[i + 1].first;
        auto interp = [&](double x) {
            if (x1 == x0) return g_samples[i].second;
            double t = (x - x0) / (x1 - x0);
            return g_samples[i].second + t * (g_samples[i + 1].second - g_samples[i].second);
        };
        integral += 0.5 * (interp(a) + interp(b)) * (b - a);
    }
    double rhs = (eta - 1.0) * bounds.upper() / eta;
    return integral <= rhs * 1.01 + 1e-12;
}

struct PieceVerdict {
    std::size_t index;     // 1-based piece number
    int case_id;           // 1, 2 or 3
    bool pass;
    std::string detail;
};

struct SufficientConditionReport {
    std::vector<PieceVerdict> pieces;
    bool boundary_value_ok = true;  // phi(1) is one of the partition boundaries
    bool all_pass() const {
        if (!boundary_value_ok) return false;
        for (const auto& p : pieces)
            if (!p.pass) return false;
        return true;
    }
};

/// Numerical checker for the piecewise sufficient condition: classifies each
/// piece by comparing M_i against phi(0) and phi(1), then verifies the case's
/// inequality (grid-checked for increasing pieces).
inline SufficientConditionReport check_sufficient_condition(
    const PiecewiseThreshold& phi, const std::vector<double>& prices,
    const std::vector<double>& utils, const std::vector<double>& alphas,
    const PriceBounds& bounds) {
    std::size_t pieces = alphas.size();
    if (prices.size() != pieces + 1 || utils.size() != pieces + 1 || pieces == 0)
        throw BadPartitionError("check_sufficient_condition: partition sizes disagree");
    double L = bounds.lower(), U = bounds.upper();
    double ptol = 1e-6 * U;
    if (std::abs(prices.front() - L) > ptol || std::abs(prices.back() - U) > ptol)
        throw BadPartitionError("price partition must span [L,U]");
    for (std::size_t i = 0; i + 1 < prices.size(); ++i)
        if (prices[i] > prices[i + 1] + ptol)
            throw BadPartitionError("price partition must be non-decreasing");
    if (std::abs(utils.front()) > 1e-9 || std::abs(utils.back() - 1.0) > 1e-9)
        throw BadPartitionError("utilization partition must span [0,1]");
    for (std::size_t i = 0; i + 1 < utils.size(); ++i)
        if (utils[i] > utils[i + 1] + 1e-9)
            throw BadPartitionError("utilization partition must be non-decreasing");

    double phi0 = phi.eval(0.0);
    double phi1 = phi.eval(1.0);

    SufficientConditionReport report;
    report.boundary_value_ok = false;
    for (double m : prices)
        if (std::abs(phi1 - m) <= ptol) report.boundary_value_ok = true;

    auto bound_at = [&](double w, double alpha) {
        return alpha * (phi.integrate(0.0, w) + (1.0 - w) * L);
    };
    const double rtol = 1e-7;

    for (std::size_t i = 1; i <= pieces; ++i) {
        double mi = prices[i];
        double alpha = alphas[i - 1];
        double b_prev = utils[i - 1], b_cur = utils[i];
        PieceVerdict v{i, 0, true, ""};

        if (mi <= phi0 + ptol) {
            v.case_id = 1;
            if (mi > alpha * L * (1.0 + rtol)) {
                v.pass = false;
                v.detail = "case I: M_i exceeds alpha_i * L";
            } else if (b_cur - b_prev > 1e-9) {
                v.pass = false;
                v.detail = "case I: piece not absorbed";
            }
        } else if (mi > phi1 + ptol) {
            v.case_id = 3;
            double total = phi.integrate(0.0, 1.0);
            if (mi > alpha * total * (1.0 + rtol)) {
                v.pass = false;
                v.detail = "case III: M_i exceeds alpha_i * integral of phi";
            } else if (std::abs(b_cur - 1.0) > 1e-9) {
                v.pass = false;
                v.detail = "case III: beta_i != 1";
            }
        } else {
            v.case_id = 2;
            // boundary condition: the piece's left limit at beta_i reaches M_i
            double left = phi.eval(std::max(b_prev, b_cur - 1e-10));
            if (std::abs(left - mi) > ptol && b_cur - b_prev > 1e-9) {
                v.pass = false;
                std::ostringstream os;
                os << "case II: phi(beta_i-) = " << left << " != M_i = " << mi;
                v.detail = os.str();
            }
            // grid-check the integral inequality; flat stretches only bind at
            // their right endpoint
            for (const ThresholdSegment& s : phi.segments()) {
                if (!v.pass) break;
                double lo = std::max(b_prev, s.w_start);
                double hi = std::min(b_cur, s.w_end);
                if (hi <= lo + 1e-12) continue;
                std::vector<double> ws;
                if (s.is_constant()) {
                    ws.push_back(hi);
                } else {
                    const int grid = 1000;
                    for (int k = 0; k <= grid; ++k)
                        ws.push_back(lo + (hi - lo) * static_cast<double>(k) / grid);
                }
                for (double w : ws) {
                    double val = s.value_at(w, L);
                    if (val > bound_at(w, alpha) * (1.0 + rtol) + 1e-9) {
                        v.pass = false;
                        std::ostringstream os;
                        os << "case II inequality violated at w = " << w;
                        v.detail = os.str();
                        break;
                    }
                }
            }
        }
        report.pieces.push_back(v);
    }
    return report;
}

/// Minimal consistency of any gamma-robust 1-max-search algorithm.
inline double lb_consistency_max_search(double gamma, double theta) {
    if (theta < 1.0) throw DomainError("theta < 1");
    if (gamma < std::sqrt(theta) - 1e-9 || gamma > theta + 1e-9)
        throw DomainError("gamma outside [sqrt(theta), theta]");
    return theta / gamma;
}

/// Minimal consistency of any gamma-robust one-way trading algorithm.
inline double lb_consistency_one_way(double gamma, double theta) {
    if (theta <= 1.0) throw DomainError("theta <= 1");
    if (gamma < alpha_star(theta) - 1e-9 || gamma > theta + 1e-9)
        throw DomainError("gamma outside [alpha*, theta]");
    return one_way_eta_of_gamma(gamma, theta);
}

/// Sample the (gamma(lambda), eta(lambda)) trade-off curve.
inline std::vector<std::pair<double, double>> pareto_frontier(double theta, ProblemKind kind,
                                                              std::size_t grid_size) {
    if (grid_size < 2) throw DomainError("pareto_frontier: grid_size < 2");
    std::vector<std::pair<double, double>> out;
    out.reserve(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        double lambda = static_cast<double>(i) / static_cast<double>(grid_size - 1);
        TradeoffParams t = (kind == ProblemKind::Integral) ? tradeoff_max_search(lambda, theta)
                                                           : tradeoff_one_way(lambda, theta);
        out.emplace_back(t.gamma, t.eta);
    }
    return out;
}

/// kappa(xi): worst ratio over p-instances whose peak is within xi of the
/// prediction. Non-decreasing in xi by construction.
inline std::vector<std::pair<double, double>> empirical_kappa(
    const PolicyFactory& factory, const PriceBounds& bounds, double prediction,
    const std::vector<double>& xi_grid, std::size_t n) {
    double L = bounds.lower(), U = bounds.upper();
    Policy policy = factory(prediction);
    std::vector<double> extras = {prediction};
    for (double xi : xi_grid) {
        extras.push_back(prediction - xi);
        extras.push_back(prediction + xi);
    }
    std::vector<double> peaks = detail::price_grid(bounds, 201, extras);
    std::vector<double> ratios(peaks.size());
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        Instance inst = p_instance(bounds, peaks[i], n);
        ratios[i] = profit_ratio(offline_opt(inst), run_instance(policy, inst).profit);
    }
    std::vector<std::pair<double, double>> curve;
    for (double xi : xi_grid) {
        double k = 1.0;
        for (std::size_t i = 0; i < peaks.size(); ++i)
            if (std::abs(peaks[i] - prediction) <= xi + 1e-12) k = std::max(k, ratios[i]);
        curve.emplace_back(xi, k);
    }
    for (std::size_t i = 1; i < curve.size(); ++i)
        curve[i].second = std::max(curve[i].second, curve[i - 1].second);
    return curve;
}

}  // namespace ota

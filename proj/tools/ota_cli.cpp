#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
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

struct BoundsOpts {
    double theta = 0.0;
    std::vector<double> lu;

    PriceBounds resolve() const {
        if (!lu.empty()) {
            if (lu.size() != 2) throw CLI::ValidationError("--bounds", "expects L U");
            return PriceBounds(lu[0], lu[1]);
        }
        if (theta > 0.0) return PriceBounds(1.0, theta);
        throw CLI::ValidationError("bounds", "provide --theta or --bounds L U");
    }
};

void add_bounds_flags(CLI::App* cmd, BoundsOpts& opts) {
    cmd->add_option("--theta", opts.theta, "price fluctuation U/L (implies L=1)");
    cmd->add_option("--bounds", opts.lu, "price bounds: L U")->expected(2);
}

ProblemKind parse_kind(const std::string& s) {
    if (s == "1-max" || s == "1-max-search" || s == "integral") return ProblemKind::Integral;
    if (s == "one-way" || s == "one-way-trading" || s == "fractional")
        return ProblemKind::Fractional;
    throw CLI::ValidationError("--kind", "expected 1-max or one-way");
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("OTA_DEFAULT_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw CLI::ValidationError("OTA_DEFAULT_SEED", "not an unsigned integer");
        }
    }
    return 0;
}

void write_or_print(const std::string& out, const std::string& payload) {
    if (out.empty() || out == "-") {
        std::cout << payload;
        return;
    }
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot open " + out + " for writing");
    f << payload;
}

int run_certify(ProblemKind kind, const PriceBounds& bounds, double lambda,
                std::size_t prediction_grid, std::size_t n, const std::string& out) {
    TradeoffParams targets = (kind == ProblemKind::Integral)
                                 ? tradeoff_max_search(lambda, bounds.theta())
                                 : tradeoff_one_way(lambda, bounds.theta());
    PolicyFactory factory = [&](double P) {
        if (kind == ProblemKind::Integral)
            return Policy::integral(reservation_price(bounds, lambda, P));
        return Policy::fractional(build_threshold_one_way(bounds, lambda, P));
    };
    auto report = certify(factory, bounds, targets, prediction_grid, n);
    nlohmann::ordered_json j;
    j["targets"] = report.to_json()["targets"];
    j["measured_consistency"] = report.measured_consistency;
    j["measured_robustness"] = report.measured_robustness;
    j["kappa_curve"] = report.to_json()["kappa_curve"];
    j["worst_instances"] = report.to_json()["worst_instances"];
    bool ok = report.measured_consistency <= targets.eta * 1.001 &&
              report.measured_robustness <= targets.gamma * 1.001;
    j["within_targets"] = ok;
    write_or_print(out, j.dump(2) + "\n");
    return ok ? 0 : 1;
}

int run_pareto(ProblemKind kind, double theta, std::size_t grid, const std::string& out) {
    auto frontier = pareto_frontier(theta, kind, grid);
    std::ostringstream csv;
    csv.precision(17);
    csv << "gamma,eta,eta_lower_bound\n";
    for (auto& [gamma, eta] : frontier) {
        double lb = (kind == ProblemKind::Integral) ? lb_consistency_max_search(gamma, theta)
                                                    : lb_consistency_one_way(gamma, theta);
        csv << gamma << ',' << eta << ',' << lb << '\n';
    }
    write_or_print(out, csv.str());
    return 0;
}

int run_threshold(ProblemKind kind, const PriceBounds& bounds, double lambda, double prediction,
                  const std::string& format, const std::string& out) {
    if (kind == ProblemKind::Integral) {
        double r = reservation_price(bounds, lambda, prediction);
        PiecewiseThreshold phi({ThresholdSegment::flat(0.0, 1.0, r)}, bounds);
        if (format == "json") {
            write_or_print(out, phi.to_json().dump(2) + "\n");
        } else {
            std::ostringstream csv;
            csv.precision(17);
            csv << "w,phi\n0," << r << "\n1," << r << "\n";
            write_or_print(out, csv.str());
        }
        return 0;
    }
    auto phi = build_threshold_one_way(bounds, lambda, prediction);
    if (format == "json") {
        write_or_print(out, phi.to_json().dump(2) + "\n");
        return 0;
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "w,phi\n";
    const int grid = 400;
    for (int i = 0; i <= grid; ++i) {
        double w = static_cast<double>(i) / grid;
        csv << w << ',' << phi.eval(w) << '\n';
    }
    write_or_print(out, csv.str());
    return 0;
}

int run_verify(const PriceBounds& bounds) {
    double theta = bounds.theta();
    double L = bounds.lower(), U = bounds.upper();
    int violations = 0;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) {
            ++violations;
            std::cerr << "violation: " << what << '\n';
        }
    };

    for (int i = 0; i <= 100; ++i) {
        double lambda = static_cast<double>(i) / 100.0;
        auto tm = tradeoff_max_search(lambda, theta);
        check(std::abs(tm.eta * tm.gamma - theta) <= 1e-9 * theta,
              "eta*gamma != theta at lambda=" + std::to_string(lambda));
        auto tw = tradeoff_one_way(lambda, theta);
        check(std::abs(tw.eta - lb_consistency_one_way(tw.gamma, theta)) <= 1e-8,
              "fractional trade-off off its lower bound at lambda=" + std::to_string(lambda));
    }

    if (theta > 1.0 + 1e-9) {
        for (double lambda : {0.25, 0.5, 0.75, 1.0}) {
            auto t = tradeoff_one_way(lambda, theta);
            auto bb = boundary_breakpoints(bounds, t.eta, t.gamma);
            double r1 = bb.M - (L + (t.eta - 1.0) * L * std::exp(t.eta * bb.beta));
            check(std::abs(r1) <= 1e-8 * U,
                  "boundary system residual at lambda=" + std::to_string(lambda));
            for (int i = 0; i <= 10; ++i) {
                double P = bb.M + (U - bb.M) * static_cast<double>(i) / 10.0;
                auto ib = intermediate_breakpoints(bounds, t.eta, t.gamma, P);
                check(ib.beta1 >= -1e-9 && ib.beta1 <= ib.beta1p + 1e-9 &&
                          ib.beta1p <= ib.beta2 + 1e-9 && ib.beta2 <= 1.0 + 1e-9,
                      "breakpoint ordering at lambda=" + std::to_string(lambda));
            }
        }

        auto t = tradeoff_one_way(0.5, theta);
        auto bb = boundary_breakpoints(bounds, t.eta, t.gamma);
        PiecewiseThreshold low(
            {ThresholdSegment::exp_piece(0.0, bb.beta, (t.eta - 1.0) * L, t.eta, 0.0),
             ThresholdSegment::exp_piece(bb.beta, 1.0, U - L, t.gamma, 1.0)},
            bounds);
        check(check_sufficient_condition(low, {L, bb.M, U}, {0.0, bb.beta, 1.0},
                                         {t.eta, t.gamma}, bounds)
                  .all_pass(),
              "two-piece fractional design fails its sufficient condition");
        double P = L + 0.75 * (U - L);
        if (P >= bb.M) {
            auto ib = intermediate_breakpoints(bounds, t.eta, t.gamma, P);
            auto mid = build_threshold_one_way(bounds, 0.5, P);
            check(check_sufficient_condition(mid, {L, ib.M1, P, U},
                                             {0.0, ib.beta1, ib.beta2, 1.0},
                                             {t.gamma, t.eta, t.gamma}, bounds)
                      .all_pass(),
                  "four-piece fractional design fails its sufficient condition");
        }
    }

    for (double lambda : {0.0, 0.5, 1.0}) {
        auto tm = tradeoff_max_search(lambda, theta);
        PolicyFactory rf = [&](double P) {
            return Policy::integral(reservation_price(bounds, lambda, P));
        };
        auto rep = certify(rf, bounds, tm, 10, 400);
        check(rep.measured_consistency <= tm.eta * 1.001 &&
                  rep.measured_robustness <= tm.gamma * 1.001,
              "single-transaction certificate exceeds targets at lambda=" +
                  std::to_string(lambda));
        if (theta > 1.0 + 1e-9) {
            auto tw = tradeoff_one_way(lambda, theta);
            PolicyFactory tf = [&](double P) {
                return Policy::fractional(build_threshold_one_way(bounds, lambda, P));
            };
            auto wrep = certify(tf, bounds, tw, 10, 400);
            check(wrep.measured_consistency <= tw.eta * 1.001 &&
                      wrep.measured_robustness <= tw.gamma * 1.001,
                  "fractional certificate exceeds targets at lambda=" + std::to_string(lambda));
        }
    }

    if (violations == 0) {
        std::cout << "all invariants hold\n";
        return 0;
    }
    std::cerr << violations << " violation(s)\n";
    return 1;
}

int run_backtest_cmd(const BacktestConfig& cfg, const std::string& out,
                     const std::string& boxplot_out) {
    auto report = run_backtest(cfg);
    write_or_print(out, report.to_json().dump(2) + "\n");
    if (!boxplot_out.empty()) write_or_print(boxplot_out, report.boxplot_csv());
    return 0;
}

int run_synth(double start, double drift, double vol, std::size_t ticks, std::uint64_t seed,
              const std::vector<double>& clip, const std::string& out) {
    std::optional<PriceBounds> bounds;
    if (!clip.empty()) {
        if (clip.size() != 2) throw CLI::ValidationError("--clip", "expects L U");
        bounds = PriceBounds(clip[0], clip[1]);
    }
    auto series = synth_prices(start, drift, vol, ticks, seed, bounds);
    std::ostringstream csv;
    csv.precision(17);
    csv << "timestamp,price\n";
    for (auto& p : series) csv << p.timestamp << ',' << p.price << '\n';
    write_or_print(out, csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online conversion with maximum-price predictions"};
    app.require_subcommand(1);

    std::string kind_str = "one-way";
    BoundsOpts bounds_opts;
    double lambda = 1.0;
    double prediction = 0.0;
    std::string out, format = "json", boxplot_out;
    std::size_t grid = 100, prediction_grid = 20, instance_len = 1000;

    auto* c_certify = app.add_subcommand("certify", "grid-adversary certificate for a design");
    c_certify->add_option("--kind", kind_str, "1-max or one-way");
    add_bounds_flags(c_certify, bounds_opts);
    c_certify->add_option("--lambda", lambda, "distrust in the prediction, in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    c_certify->add_option("--prediction-grid", prediction_grid, "prediction grid size (>= 10)");
    c_certify->add_option("--instance-len", instance_len, "adversarial instance length (>= 100)");
    c_certify->add_option("--out", out, "output path (default stdout)");

    auto* c_pareto = app.add_subcommand("pareto", "robustness-consistency frontier CSV");
    c_pareto->add_option("--kind", kind_str, "1-max or one-way");
    add_bounds_flags(c_pareto, bounds_opts);
    c_pareto->add_option("--grid", grid, "number of frontier samples");
    c_pareto->add_option("--out", out, "output path (default stdout)");

    auto* c_threshold = app.add_subcommand("threshold", "emit a built threshold function");
    c_threshold->add_option("--kind", kind_str, "1-max or one-way");
    add_bounds_flags(c_threshold, bounds_opts);
    c_threshold->add_option("--lambda", lambda, "distrust in the prediction, in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    c_threshold->add_option("--prediction", prediction, "predicted maximum price")->required();
    c_threshold->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    c_threshold->add_option("--out", out, "output path (default stdout)");

    BacktestConfig cfg;
    cfg.seed = default_seed();
    std::string bt_kind = "one-way";
    std::vector<double> bt_bounds;
    std::vector<std::string> bt_algos;
    auto* c_backtest = app.add_subcommand("backtest", "sliding-window backtest over a price CSV");
    c_backtest->add_option("--data", cfg.data_path, "input CSV: timestamp,price")->required();
    c_backtest->add_option("--window-len", cfg.window_len, "ticks per window");
    c_backtest->add_option("--stride", cfg.stride, "offset between windows");
    c_backtest->add_option("--bounds", bt_bounds, "price bounds: L U (default: from data)")
        ->expected(2);
    c_backtest->add_option("--error-level", cfg.error_level, "prediction error scale in [0,1]");
    c_backtest->add_option("--crash-prob", cfg.crash_prob, "probability of a final-price crash");
    c_backtest->add_option("--seed", cfg.seed, "RNG seed");
    c_backtest->add_option("--kind", bt_kind, "1-max or one-way");
    c_backtest->add_option("--lambda-grid-size", cfg.lambda_grid_size, "learner arm count");
    c_backtest->add_option("--algorithms", bt_algos,
                           "subset of worst_case, offline_best, alf, best_static");
    c_backtest->add_option("--out", out, "report JSON path (default stdout)");
    c_backtest->add_option("--boxplot-out", boxplot_out, "boxplot CSV path");

    auto* c_verify = app.add_subcommand("verify", "run the invariant suite");
    add_bounds_flags(c_verify, bounds_opts);

    double start = 5.0, drift = 0.0, vol = 0.02;
    std::size_t ticks = 1000;
    std::uint64_t seed = default_seed();
    std::vector<double> clip;
    auto* c_synth = app.add_subcommand("synth", "seeded geometric-random-walk price CSV");
    c_synth->add_option("--start", start, "initial price");
    c_synth->add_option("--drift", drift, "per-tick log drift");
    c_synth->add_option("--vol", vol, "per-tick log volatility");
    c_synth->add_option("--ticks", ticks, "series length");
    c_synth->add_option("--seed", seed, "RNG seed");
    c_synth->add_option("--clip", clip, "clip prices into bounds: L U")->expected(2);
    c_synth->add_option("--out", out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_certify->parsed())
            return run_certify(parse_kind(kind_str), bounds_opts.resolve(), lambda,
                               prediction_grid, instance_len, out);
        if (c_pareto->parsed())
            return run_pareto(parse_kind(kind_str), bounds_opts.resolve().theta(), grid, out);
        if (c_threshold->parsed())
            return run_threshold(parse_kind(kind_str), bounds_opts.resolve(), lambda, prediction,
                                 format, out);
        if (c_backtest->parsed()) {
            cfg.kind = parse_kind(bt_kind);
            if (!bt_bounds.empty()) cfg.bounds = PriceBounds(bt_bounds[0], bt_bounds[1]);
            if (!bt_algos.empty()) cfg.algorithms = {bt_algos.begin(), bt_algos.end()};
            return run_backtest_cmd(cfg, out, boxplot_out);
        }
        if (c_verify->parsed()) return run_verify(bounds_opts.resolve());
        if (c_synth->parsed()) return run_synth(start, drift, vol, ticks, seed, clip, out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

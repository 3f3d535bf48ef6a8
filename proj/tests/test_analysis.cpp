#include "catch_amalgamated.hpp"
#include "ota/analysis.hpp"

#include <cmath>

using namespace ota;

TEST_CASE("adversarial instance families") {
    PriceBounds b(2.0, 10.0);
    auto inst = p_instance(b, 8.0, 6);
    CHECK(inst.prices == std::vector<double>{2.0, 3.5, 5.0, 6.5, 8.0, 2.0});
    CHECK(offline_opt(inst) == 8.0);
    CHECK_THROWS_AS(p_instance(b, 11.0, 6), DomainError);
    CHECK_THROWS_AS(p_instance(b, 8.0, 2), DomainError);

    CHECK(constant_instance(4.0, 3).prices == std::vector<double>{4.0, 4.0, 4.0});
    CHECK(spike_instance(b, 9.0).prices == std::vector<double>{2.0, 2.0, 9.0, 2.0, 2.0});
}

TEST_CASE("certificate for the prediction-aware reservation rule") {
    PriceBounds b(2.0, 10.0);
    double lambda = 0.5;
    auto targets = tradeoff_max_search(lambda, b.theta());
    PolicyFactory factory = [&](double P) {
        return Policy::integral(reservation_price(b, lambda, P));
    };
    auto rep = certify(factory, b, targets, 30, 400);
    CHECK(rep.measured_consistency <= targets.eta * 1.001);
    CHECK(rep.measured_robustness <= targets.gamma * 1.001);
    CHECK(rep.measured_robustness >= targets.gamma * 0.98);  // grid finds a near-witness
    REQUIRE(rep.kappa_curve.size() == 10);
    CHECK(rep.kappa_curve.front().second <= targets.eta * 1.001);
    CHECK(rep.kappa_curve.back().second == Catch::Approx(rep.measured_robustness));
    for (std::size_t i = 1; i < rep.kappa_curve.size(); ++i)
        CHECK(rep.kappa_curve[i].second >= rep.kappa_curve[i - 1].second - 1e-12);
    auto j = rep.to_json();
    CHECK(j["targets"]["lambda"] == 0.5);
    CHECK(j.contains("worst_instances"));
}

TEST_CASE("certificate for the one-way threshold rule") {
    PriceBounds b(2.0, 10.0);
    double lambda = 0.5;
    auto targets = tradeoff_one_way(lambda, b.theta());
    PolicyFactory factory = [&](double P) {
        return Policy::fractional(build_threshold_one_way(b, lambda, P));
    };
    auto rep = certify(factory, b, targets, 15, 400);
    CHECK(rep.measured_consistency <= targets.eta * 1.001);
    CHECK(rep.measured_robustness <= targets.gamma * 1.001);
}

TEST_CASE("blind trust in the prediction has no robustness") {
    PriceBounds b(2.0, 10.0);
    PolicyFactory factory = [&](double P) {
        return Policy::integral(naive_reservation_price(b, NaiveMode::BlindPrediction, 0.0, P));
    };
    // reservation at U, peak just below: the dollar rides down to L
    Policy policy = factory(b.upper());
    auto inst = p_instance(b, b.upper() - 0.01, 400);
    double ratio = profit_ratio(offline_opt(inst), run_instance(policy, inst).profit);
    CHECK(ratio == Catch::Approx((b.upper() - 0.01) / b.lower()).epsilon(1e-9));
}

TEST_CASE("linear blend keeps worst-case consistency above sqrt(theta)") {
    PriceBounds b(2.0, 10.0);
    PolicyFactory factory = [&](double P) {
        return Policy::integral(naive_reservation_price(b, NaiveMode::LinearBlend, 0.5, P));
    };
    auto targets = tradeoff_max_search(0.5, b.theta());
    auto rep = certify(factory, b, targets, 30, 400);
    // an accurate prediction cannot push the blend below sqrt(LU), so even
    // correct forecasts pay nearly the pure worst-case price
    CHECK(rep.measured_consistency >= std::sqrt(b.theta()) - 0.01);
}

TEST_CASE("conversion function of the one-way policy") {
    PriceBounds b(2.0, 10.0);
    auto t = tradeoff_one_way(0.4, b.theta());
    auto policy = Policy::fractional(build_threshold_one_way(b, 0.4, 6.0));
    std::vector<double> grid;
    for (int i = 0; i <= 60; ++i) grid.push_back(2.0 + 8.0 * i / 60.0);
    auto g = conversion_function(policy, b, grid, 1500);
    REQUIRE(g.size() == grid.size());
    for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i].second >= g[i - 1].second - 1e-9);
    CHECK(g.back().second == Catch::Approx(1.0).margin(1e-9));
    // robustness curve: g(p) >= the amount needed to stay gamma-competitive
    for (auto& [p, gp] : g) {
        if (p < b.lower() * t.gamma) continue;
        double need = policy.threshold->pseudo_inverse(std::min(p, b.upper()));
        CHECK(gp >= need - 0.01);
    }
    // the conversion budget above gamma*L only binds for the ceiling prediction;
    // a sample just below U keeps the trapezoid rule off g's jump at U
    auto top = Policy::fractional(build_threshold_one_way(b, 0.4, b.upper()));
    grid.push_back(b.upper() - 1e-6);
    auto g_top = conversion_function(top, b, grid, 1500);
    CHECK(check_consistency_integral_constraint(g_top, t.gamma, t.eta, b));
}

TEST_CASE("consistency integral constraint rejects over-conversion") {
    PriceBounds b(2.0, 10.0);
    auto t = tradeoff_one_way(0.4, b.theta());
    // g == 1 everywhere converts far too much mass above gamma L
    std::vector<std::pair<double, double>> g;
    for (int i = 0; i <= 60; ++i) g.emplace_back(2.0 + 8.0 * i / 60.0, 1.0);
    CHECK_FALSE(check_consistency_integral_constraint(g, t.gamma, t.eta, b));
    // near-equality: constant g exactly at the budget over [gamma L, U]
    double budget = (t.eta - 1.0) * b.upper() / t.eta;
    double width = b.upper() - t.gamma * b.lower();
    std::vector<std::pair<double, double>> tight;
    for (int i = 0; i <= 60; ++i) tight.emplace_back(2.0 + 8.0 * i / 60.0, budget / width);
    CHECK(check_consistency_integral_constraint(tight, t.gamma, t.eta, b));
}

TEST_CASE("sufficient condition passes for the pure reservation partition") {
    PriceBounds b(2.0, 10.0);
    double r = pure_reservation_max_search(b);
    PiecewiseThreshold phi({ThresholdSegment::flat(0.0, 1.0, r)}, b);
    double s = std::sqrt(b.theta());
    auto rep = check_sufficient_condition(phi, {b.lower(), r, b.upper()}, {0.0, 0.0, 1.0},
                                          {s, s}, b);
    CHECK(rep.all_pass());
    REQUIRE(rep.pieces.size() == 2);
    CHECK(rep.pieces[0].case_id == 1);
    CHECK(rep.pieces[1].case_id == 3);
}

TEST_CASE("sufficient condition passes for the two-piece one-way threshold") {
    PriceBounds b(2.0, 10.0);
    auto t = tradeoff_one_way(0.5, b.theta());
    auto bb = boundary_breakpoints(b, t.eta, t.gamma);
    auto phi = PiecewiseThreshold(
        {ThresholdSegment::exp_piece(0.0, bb.beta, (t.eta - 1.0) * b.lower(), t.eta, 0.0),
         ThresholdSegment::exp_piece(bb.beta, 1.0, b.upper() - b.lower(), t.gamma, 1.0)},
        b);
    auto rep = check_sufficient_condition(phi, {b.lower(), bb.M, b.upper()},
                                          {0.0, bb.beta, 1.0}, {t.eta, t.gamma}, b);
    CHECK(rep.all_pass());

    // tightening alpha below the true factor must fail
    auto bad = check_sufficient_condition(phi, {b.lower(), bb.M, b.upper()},
                                          {0.0, bb.beta, 1.0}, {0.9 * t.eta, t.gamma}, b);
    CHECK_FALSE(bad.all_pass());
}

TEST_CASE("sufficient condition validates partitions") {
    PriceBounds b(2.0, 10.0);
    PiecewiseThreshold phi({ThresholdSegment::flat(0.0, 1.0, 5.0)}, b);
    CHECK_THROWS_AS(
        check_sufficient_condition(phi, {b.lower(), b.upper()}, {0.0, 1.0}, {2.0, 2.0}, b),
        BadPartitionError);
    CHECK_THROWS_AS(
        check_sufficient_condition(phi, {3.0, 5.0, b.upper()}, {0.0, 0.0, 1.0}, {2.0, 2.0}, b),
        BadPartitionError);
    CHECK_THROWS_AS(
        check_sufficient_condition(phi, {b.lower(), 5.0, b.upper()}, {0.0, 0.5, 0.4}, {2.0, 2.0},
                                   b),
        BadPartitionError);
}

TEST_CASE("consistency lower bound curves") {
    CHECK(lb_consistency_max_search(std::sqrt(5.0), 5.0) == Catch::Approx(std::sqrt(5.0)));
    CHECK(lb_consistency_max_search(5.0, 5.0) == Catch::Approx(1.0));
    CHECK_THROWS_AS(lb_consistency_max_search(1.0, 5.0), DomainError);

    double astar = alpha_star(5.0);
    CHECK(lb_consistency_one_way(astar, 5.0) == Catch::Approx(astar).margin(1e-6));
    CHECK(lb_consistency_one_way(5.0, 5.0) == Catch::Approx(1.0).margin(1e-9));
    CHECK_THROWS_AS(lb_consistency_one_way(1.2, 5.0), DomainError);
}

TEST_CASE("trade-off curve attains the lower bound") {
    double theta = 5.0;
    for (auto kind : {ProblemKind::Integral, ProblemKind::Fractional}) {
        auto frontier = pareto_frontier(theta, kind, 100);
        REQUIRE(frontier.size() == 100);
        double gmin = (kind == ProblemKind::Integral) ? std::sqrt(theta) : alpha_star(theta);
        // endpoints
        CHECK(frontier.front().first == Catch::Approx(theta));
        CHECK(frontier.front().second == Catch::Approx(1.0).margin(1e-9));
        CHECK(frontier.back().first == Catch::Approx(gmin).margin(1e-9));
        for (std::size_t i = 1; i < frontier.size(); ++i) {
            REQUIRE(frontier[i].first <= frontier[i - 1].first + 1e-12);
            REQUIRE(frontier[i].second >= frontier[i - 1].second - 1e-12);
        }
        for (auto& [gamma, eta] : frontier) {
            double lb = (kind == ProblemKind::Integral) ? lb_consistency_max_search(gamma, theta)
                                                        : lb_consistency_one_way(gamma, theta);
            REQUIRE(eta <= lb * (1.0 + 1e-9));
            REQUIRE(eta >= lb * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("empirical kappa curve") {
    PriceBounds b(2.0, 10.0);
    double lambda = 0.5;
    auto targets = tradeoff_max_search(lambda, b.theta());
    PolicyFactory factory = [&](double P) {
        return Policy::integral(reservation_price(b, lambda, P));
    };
    std::vector<double> xi{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    auto curve = empirical_kappa(factory, b, 6.0, xi, 400);
    REQUIRE(curve.size() == xi.size());
    CHECK(curve.front().second <= targets.eta * 1.001);
    for (std::size_t i = 1; i < curve.size(); ++i)
        REQUIRE(curve[i].second >= curve[i - 1].second - 1e-12);
    CHECK(curve.back().second <= targets.gamma * 1.001);
}

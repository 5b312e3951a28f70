// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dbpension/analytics.hpp"
#include "dbpension/policy.hpp"
#include "dbpension/scenario.hpp"
#include "oracle.hpp"

namespace dbpension {
namespace {

DualSolution solve_with(double alpha, double gamma, double bound, double x0) {
    auto s = benchmark();
    s.prefs = {alpha, gamma, bound};
    s.plan.x0 = x0;
    return s.solve();
}

// E[h(rho(T))] by quadrature over the standard normal driving ln rho(T).
template <class F>
double normal_expectation(const DualSolution& sol, F&& h) {
    const double M = sol.moments.m_total, V = sol.moments.v_total;
    std::vector<double> br = {-12.0, 12.0};
    for (const auto& p : sol.pieces())
        if (std::isfinite(p.hi)) br.push_back((std::log(p.hi / sol.beta_star) - M) / V);
    std::sort(br.begin(), br.end());
    return integrate_piecewise<1>(
               [&](double z) -> Vec<1> { return {h(std::exp(M + V * z)) * normal_pdf(z)}; }, br,
               {64, 8192, 1e-13})[0];
}

TEST(RiskUtility, ClosedFormsMatchQuadrature) {
    for (auto [a, x0] : {std::pair{0.1, 0.0}, std::pair{0.05, 0.0}, std::pair{0.3, -2.0}, std::pair{0.1, 3.0}}) {
        const auto sol = solve_with(a, 0.4, 5.0, x0);
        const auto ru = risk_and_utility(sol);
        const double risk = normal_expectation(sol, [&](double rho) {
            const double x = optimal_terminal_wealth(sol, rho);
            return x < 0 ? x * x : 0.0;
        });
        const double util = normal_expectation(sol, [&](double rho) {
            const double x = optimal_terminal_wealth(sol, rho);
            return x > 0 ? std::pow(x, 0.6) / 0.6 : 0.0;
        });
        EXPECT_NEAR(ru.risk, risk, 1e-8 * std::max(1.0, risk)) << a;
        EXPECT_NEAR(ru.utility, util, 1e-8 * std::max(1.0, util)) << a;
    }
}

TEST(RiskUtility, LowToleranceExplicitPhiForm) {
    // risk = beta^2/(4 alpha^2) e^{2M+2V^2}[Phi(U(2aB) - 2V) - Phi(U(k1) - 2V)] + B^2 [1 - Phi(U(2aB))],
    // utility = beta^{(g-1)/g}/(1-g) e^{qM + q^2 V^2/2} Phi(U(k1) - qV), q = (g-1)/g.
    const auto sol = solve_with(0.1, 0.4, 5.0, 0.0);
    ASSERT_EQ(sol.kind, Case::LowTolerance);
    const double M = sol.moments.m_total, V = sol.moments.v_total, b = sol.beta_star;
    const double g = 0.4, a = 0.1, B = 5.0, q = (g - 1) / g;
    auto U = [&](double x) { return (std::log(x) - std::log(b) - M) / V; };
    const double risk = b * b / (4 * a * a) * std::exp(2 * M + 2 * V * V) *
                            (normal_cdf(U(2 * a * B) - 2 * V) - normal_cdf(U(sol.envelope.k1) - 2 * V)) +
                        B * B * (1 - normal_cdf(U(2 * a * B)));
    const double util =
        std::pow(b, q) / (1 - g) * std::exp(q * M + 0.5 * q * q * V * V) * normal_cdf(U(sol.envelope.k1) - q * V);
    const auto ru = risk_and_utility(sol);
    EXPECT_NEAR(ru.risk, risk, 1e-12 * risk);
    EXPECT_NEAR(ru.utility, util, 1e-12 * util);
    EXPECT_NEAR(ru.risk, 9.10834, 1e-4);
    EXPECT_NEAR(ru.utility, 5.59991, 1e-4);
    const auto pr = region_probabilities(sol);
    EXPECT_NEAR(pr.p_over, normal_cdf(U(sol.envelope.k1)), 1e-15);
    EXPECT_NEAR(pr.p_over, 0.576628, 1e-5);
}

TEST(RiskUtility, SpecificLowerBound) {
    const auto s = benchmark();
    const auto km = kernel_moments(s.market, s.plan.k, 0.0, s.market.r0);
    const auto sol = solve_multiplier(s.prefs, s.market, s.plan.k, feasibility_threshold(s.prefs, km));
    const auto ru = risk_and_utility(sol);
    EXPECT_EQ(ru.risk, 25.0);
    EXPECT_EQ(ru.utility, 0.0);
    const auto pr = region_probabilities(sol);
    EXPECT_EQ(pr.p_over, 0.0);
    EXPECT_EQ(pr.p_under, 1.0);
}

TEST(Probabilities, BranchDecompositionSumsToOne) {
    for (double a : {0.05, 0.1, 1.0}) {
        const auto sol = solve_with(a, 0.4, 5.0, 0.0);
        const auto br = branch_probabilities(sol);
        double s = 0.0;
        for (double v : br) {
            EXPECT_GE(v, 0.0);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-15);
        const auto pr = region_probabilities(sol);
        EXPECT_NEAR(pr.p_over, br.front(), 1e-15);
        EXPECT_NEAR(pr.p_over + pr.p_under, 1.0, 1e-15);
    }
}

TEST(Probabilities, MatchMonteCarlo) {
    const auto sol = solve_with(0.1, 0.4, 5.0, 0.0);
    const std::size_t n = 200000;
    std::mt19937_64 gen(4);
    std::normal_distribution<double> z;
    std::vector<double> over(n), risk(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = optimal_terminal_wealth(sol, std::exp(sol.moments.m_total + sol.moments.v_total * z(gen)));
        over[i] = x > 0;
        risk[i] = x < 0 ? x * x : 0.0;
    }
    const auto po = testing::sample_mean(n, [&](std::size_t i) { return over[i]; });
    const auto rk = testing::sample_mean(n, [&](std::size_t i) { return risk[i]; });
    EXPECT_NEAR(region_probabilities(sol).p_over, po.mean, 3 * po.se);
    EXPECT_NEAR(risk_and_utility(sol).risk, rk.mean, 3 * rk.se);
}

TEST(Frontier, MonotoneInAlpha) {
    const auto s = benchmark();
    const auto pts = efficient_frontier(s.prefs, s.market, s.plan.k, s.y0(), log_grid(1e-3, 1e2, 30));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ASSERT_TRUE(pts[i].error.empty()) << pts[i].error;
        EXPECT_LE(pts[i].risk, 25.0);
        if (i == 0) continue;
        EXPECT_LE(pts[i].risk, pts[i - 1].risk + 1e-12);
        EXPECT_LE(pts[i].utility, pts[i - 1].utility + 1e-12);
        EXPECT_GE(pts[i].p_over, pts[i - 1].p_over - 1e-12);
    }
    EXPECT_TRUE(std::isfinite(pts.back().risk));
}

TEST(Frontier, NegativeBudgetKeepsRiskAwayFromZero) {
    // For Y0 < 0, |Y0| <= E[rho |X| 1{X<0}] <= sqrt(E[rho^2] risk).
    auto s = benchmark();
    s.plan.x0 = -2.0;
    const double y0 = s.y0();
    ASSERT_LT(y0, 0.0);
    const auto km = kernel_moments(s.market, s.plan.k, 0.0, s.market.r0);
    const double bound = y0 * y0 / std::exp(2 * km.m_total + 2 * km.v_total * km.v_total);
    const auto pts = efficient_frontier(s.prefs, s.market, s.plan.k, y0, log_grid(1e-3, 1e2, 30));
    for (const auto& p : pts) {
        ASSERT_TRUE(p.error.empty());
        EXPECT_GE(p.risk, bound);
    }
    EXPECT_GT(bound, 0.1);
}

TEST(Frontier, ErrorsAreCarriedPerPoint) {
    const auto s = benchmark();
    const auto pts = efficient_frontier(s.prefs, s.market, s.plan.k, -100.0, {0.1, 1.0});
    for (const auto& p : pts) {
        EXPECT_EQ(p.kind, Case::Infeasible);
        EXPECT_FALSE(p.error.empty());
    }
}

TEST(Probabilities, IncreaseWithWealthAndBound) {
    double prev = 0.0;
    for (double x0 : {-2.0, -1.0, 0.0, 1.0, 3.0}) {
        const double p = region_probabilities(solve_with(0.1, 0.4, 5.0, x0)).p_over;
        EXPECT_GT(p, prev);
        prev = p;
    }
    prev = 0.0;
    for (double B : {3.0, 4.0, 5.0, 7.5, 10.0}) {
        const double p = region_probabilities(solve_with(0.1, 0.4, B, 0.0)).p_over;
        EXPECT_GT(p, prev);
        prev = p;
    }
}

TEST(LogGrid, Endpoints) {
    const auto g = log_grid(1e-3, 1e2, 6);
    EXPECT_DOUBLE_EQ(g.front(), 1e-3);
    EXPECT_NEAR(g.back(), 1e2, 1e-12);
    EXPECT_NEAR(g[1], 1e-2, 1e-15);
    EXPECT_THROW(log_grid(0.0, 1.0, 3), DomainError);
}

}  // namespace
}  // namespace dbpension

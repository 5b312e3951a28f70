// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Invariants checked over randomly drawn feasible scenarios.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dbpension/dbpension.hpp"

namespace dbpension {
namespace {

Scenario draw(int index) {
    std::mt19937_64 gen(0x5eed0000u + index);
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
    for (;;) {
        Scenario s = benchmark();
        auto& mk = s.market;
        mk.a = u(0.05, 0.5);
        mk.b = u(0.0, 0.05);
        mk.sigma_r = u(0.005, 0.04);
        mk.r0 = u(-0.01, 0.08);
        mk.lambda_r = u(0.0, 0.3);
        mk.lambda_s = u(0.05, 0.4);
        mk.sigma_1 = u(0.1, 0.3);
        mk.sigma_2 = u(0.2, 0.5);
        mk.K = u(2.0, 15.0);
        mk.T = u(3.0, 15.0);
        auto& pl = s.plan;
        pl.mu = u(0.01, 0.06);
        pl.sigma_p1 = u(0.0, 0.15);
        pl.sigma_p2 = u(0.0, 0.15);
        pl.p0 = u(0.05, 0.3);
        pl.delta = u(0.0, 0.02);
        pl.k = u(0.02, 0.1);
        pl.x0 = u(-1.0, 3.0);
        s.prefs = {std::exp(u(std::log(0.01), std::log(10.0))), u(0.2, 0.8), u(1.0, 10.0)};
        const auto km = kernel_moments(mk, pl.k, 0.0, mk.r0);
        if (s.y0() > feasibility_threshold(s.prefs, km) + 0.1) return s;
    }
}

class RandomScenario : public ::testing::TestWithParam<int> {
protected:
    void SetUp() override {
        s = draw(GetParam());
        sol = s.solve();
        ASSERT_TRUE(sol.feasible());
    }
    Scenario s;
    DualSolution sol;
};

TEST_P(RandomScenario, BudgetIsMetAndPriced) {
    EXPECT_LE(std::abs(sol.residual), 1e-10 * std::max(1.0, std::abs(sol.y0)));
    EXPECT_NEAR(optimal_auxiliary_wealth(sol, 0.0, 1.0, s.market.r0), sol.y0, 1e-9 * std::max(1.0, std::abs(sol.y0)));
    // Closed-form price against quadrature over the terminal kernel.
    const double M = sol.moments.m_total, V = sol.moments.v_total;
    std::vector<double> br = {-12.0, 12.0};
    for (const auto& p : sol.pieces())
        if (std::isfinite(p.hi)) br.push_back(std::clamp((std::log(p.hi / sol.beta_star) - M) / V, -12.0, 12.0));
    std::sort(br.begin(), br.end());
    const double q = integrate_piecewise<1>(
        [&](double z) -> Vec<1> {
            const double rho = std::exp(M + V * z);
            return {rho * optimal_terminal_wealth(sol, rho) * normal_pdf(z)};
        },
        br, {64, 8192, 1e-13})[0];
    EXPECT_NEAR(q, sol.y0, 1e-7 * std::max(1.0, std::abs(sol.y0)));
}

TEST_P(RandomScenario, TerminalWealthMonotoneAndFloored) {
    double prev = kInf;
    for (double y = 1e-3; y < 1e3; y *= 1.01) {
        const double x = optimal_terminal_wealth(sol, y);
        EXPECT_LE(x, prev);
        EXPECT_GE(x, -s.prefs.bound);
        prev = x;
    }
}

TEST_P(RandomScenario, RiskUtilityProbabilityRanges) {
    const auto ru = risk_and_utility(sol);
    const auto pr = region_probabilities(sol);
    EXPECT_GE(ru.risk, 0.0);
    EXPECT_LE(ru.risk, s.prefs.bound * s.prefs.bound);
    EXPECT_GE(ru.utility, 0.0);
    EXPECT_GE(pr.p_over, 0.0);
    EXPECT_LE(pr.p_over, 1.0);
    double total = 0.0;
    for (double v : branch_probabilities(sol)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST_P(RandomScenario, ExposuresAreDeltaHedges) {
    const auto& mk = s.market;
    const double t = 0.4 * mk.T, rho = 0.9, r = mk.b;
    const double h = 1e-5;
    const double yr = (optimal_auxiliary_wealth(sol, t, rho, r + h) - optimal_auxiliary_wealth(sol, t, rho, r - h)) /
                      (2 * h);
    const double yl = (optimal_auxiliary_wealth(sol, t, rho * std::exp(h), r) -
                       optimal_auxiliary_wealth(sol, t, rho * std::exp(-h), r)) /
                      (2 * h);
    const auto pi = optimal_pi(sol, t, rho, r);
    const double scale = std::max(1.0, std::abs(optimal_auxiliary_wealth(sol, t, rho, r)));
    EXPECT_NEAR(pi.pi1, -mk.sigma_r * yr - mk.lambda_r * yl, 1e-5 * scale);
    EXPECT_NEAR(pi.pi2, -mk.lambda_s * yl, 1e-5 * scale);
}

TEST_P(RandomScenario, OuChapmanKolmogorovMeans) {
    const auto& mk = s.market;
    const double t1 = 0.1 * mk.T, t2 = 0.55 * mk.T, t3 = mk.T;
    const auto a = ou_transition(mk, t1, t2, mk.r0);
    const auto direct = ou_transition(mk, t1, t3, mk.r0);
    const auto b = ou_step(mk, t3 - t2, a.mean[0]);
    EXPECT_NEAR(b.mean[0], direct.mean[0], 1e-14);
    EXPECT_NEAR(a.mean[1] + b.mean[1], direct.mean[1], 1e-13);
    const double e = std::exp(-mk.a * (t3 - t2));
    EXPECT_NEAR(e * e * a.cov[0][0] + b.cov[0][0], direct.cov[0][0], 1e-15);
}

TEST_P(RandomScenario, BondGenerator) {
    const auto& mk = s.market;
    const double t = 0.3 * mk.T, M = mk.T + 2.0, r = mk.r0;
    const double ht = 1e-4, hr = 1e-4;
    const double B = bond_price(mk, t, M, r);
    const double Bt = (bond_price(mk, t + ht, M, r) - bond_price(mk, t - ht, M, r)) / (2 * ht);
    const double Br = (bond_price(mk, t, M, r + hr) - bond_price(mk, t, M, r - hr)) / (2 * hr);
    const double Brr = (bond_price(mk, t, M, r + hr) - 2 * B + bond_price(mk, t, M, r - hr)) / (hr * hr);
    const double gen = Bt + mk.a * (mk.b - r) * Br + 0.5 * mk.sigma_r * mk.sigma_r * Brr;
    EXPECT_NEAR(gen / B, r + bond_volatility(mk, M - t) * mk.lambda_r, 1e-6);
}

TEST_P(RandomScenario, LiabilityPositiveAndHomogeneous) {
    for (double r = -0.5; r <= 0.5; r += 0.1) {
        const auto f = f_values(s.plan, s.market, r);
        EXPECT_GT(f.f0, 0.0);
        EXPECT_GT(f.f2, 0.0);
    }
    const auto a = liability_state(s.plan, s.market, s.market.r0, 1.0);
    const auto b = liability_state(s.plan, s.market, s.market.r0, 2.5);
    EXPECT_NEAR(b.al, 2.5 * a.al, 1e-14 * b.al);
}

TEST_P(RandomScenario, TildeExponentsSolveRiccati) {
    const auto& mk = s.market;
    const auto& pl = s.plan;
    const double c0 = mk.lambda_r * pl.sigma_p1 + mk.lambda_s * pl.sigma_p2 - pl.k - pl.mu;
    const double c1 = mk.lambda_r * mk.sigma_r + mk.a * mk.b - mk.sigma_r * pl.sigma_p1;
    const double t = 0.2 * mk.T, sT = 0.9 * mk.T, x = 37.0, h = 1e-5;
    const auto m = tilde_exponents(pl, mk, t, sT, x);
    const auto up = tilde_exponents(pl, mk, t + h, sT, x);
    const auto dn = tilde_exponents(pl, mk, t - h, sT, x);
    EXPECT_NEAR((up.A - dn.A) / (2 * h), mk.a * m.A - 1.0, 1e-8);
    EXPECT_NEAR((up.D - dn.D) / (2 * h), c0 + c1 * m.A - 0.5 * mk.sigma_r * mk.sigma_r * m.A * m.A, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Draws, RandomScenario, ::testing::Range(0, 12));

}  // namespace
}  // namespace dbpension

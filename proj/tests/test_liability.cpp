// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dbpension/liability.hpp"
#include "dbpension/scenario.hpp"
#include "dbpension/simulation.hpp"
#include "oracle.hpp"

namespace dbpension {
namespace {

using testing::sample_mean;

// D(u) written from the expanded exponentials rather than the OU integrals.
double expanded_d(const PlanParams& pl, const MarketParams& mk, double u) {
    const double a = mk.a;
    const double A = (1.0 - std::exp(-a * u)) / a;
    const double A2 = (1.0 - std::exp(-2.0 * a * u)) / (2.0 * a);
    return (pl.mu - pl.delta) * u - (mk.b - mk.sigma_r * pl.sigma_p1 / a) * (u - A) +
           mk.sigma_r * mk.sigma_r / (2.0 * a * a) * (u - 2.0 * A + A2);
}

TEST(Membership, LinearAndRetirement) {
    const auto lin = Membership::linear(25, 55);
    EXPECT_DOUBLE_EQ(lin.value(40), 0.5);
    EXPECT_DOUBLE_EQ(lin.density(30), 1.0 / 30.0);
    EXPECT_TRUE(lin.atoms().empty());
    EXPECT_THROW(lin.value(56), DomainError);
    const auto ret = Membership::retirement_mass(25, 55);
    EXPECT_EQ(ret.value(54.9), 0.0);
    EXPECT_EQ(ret.value(55), 1.0);
    ASSERT_EQ(ret.atoms().size(), 1u);
    EXPECT_EQ(ret.atoms()[0].first, 55.0);
    EXPECT_THROW(Membership::linear(55, 25), DomainError);
}

TEST(Membership, TableParsingAndValidation) {
    std::istringstream csv("age,M\n25,0\n35,0.2\n45,0.55\n55,1\n");
    const auto t = Membership::from_csv(csv);
    EXPECT_DOUBLE_EQ(t.value(35), 0.2);
    EXPECT_DOUBLE_EQ(t.value(55), 1.0);
    for (double x = 25; x < 55; x += 0.25) EXPECT_LE(t.value(x), t.value(x + 0.25) + 1e-15);
    EXPECT_THROW(Membership::table({25, 40, 55}, {0, 0.7, 0.6}), ConfigError);
    EXPECT_THROW(Membership::table({25, 25, 55}, {0, 0.5, 1}), ConfigError);
    EXPECT_THROW(Membership::table({25, 55}, {0.1, 1}), ConfigError);
    std::istringstream bad("25,0\n40;0.5\n55,1\n");
    EXPECT_THROW(Membership::from_csv(bad), ConfigError);
}

TEST(Membership, LinearTableReproducesLinear) {
    std::vector<double> ages, vals;
    for (int i = 0; i <= 6; ++i) {
        ages.push_back(25 + 5 * i);
        vals.push_back(i / 6.0);
    }
    const auto tab = Membership::table(ages, vals);
    auto plan = benchmark().plan;
    const auto mk = benchmark().market;
    const double lin = f_values(plan, mk, 0.04).f0;
    plan.membership = tab;
    EXPECT_NEAR(f_values(plan, mk, 0.04).f0, lin, 1e-10 * lin);
}

TEST(DiscountExponents, BoundaryAndEquivalentForms) {
    const auto s = benchmark();
    const auto e = discount_exponents(s.plan, s.market, s.plan.d);
    EXPECT_EQ(e.A, 0.0);
    EXPECT_EQ(e.D, 0.0);
    const auto m = discount_exponents(s.plan, s.market, s.plan.m);
    EXPECT_NEAR(m.A, (1.0 - std::exp(-6.0)) / 0.2, 1e-14);
    for (double x = 25.0; x <= 55.0; x += 1.5) {
        const auto v = discount_exponents(s.plan, s.market, x);
        EXPECT_NEAR(v.D, expanded_d(s.plan, s.market, s.plan.d - x), 1e-12);
    }
    EXPECT_THROW(discount_exponents(s.plan, s.market, 24.0), DomainError);
}

TEST(DiscountExponents, DerivativeMatchesFiniteDifference) {
    const auto s = benchmark();
    for (double x = 26.0; x < 55.0; x += 3.7) {
        const double h = 1e-5;
        const double fd = (discount_exponents(s.plan, s.market, x + h).D -
                           discount_exponents(s.plan, s.market, x - h).D) /
                          (2.0 * h);
        EXPECT_NEAR(discount_exponent_derivative(s.plan, s.market, x), fd, 1e-8);
    }
}

TEST(FValues, BenchmarkAndRefinement) {
    const auto s = benchmark();
    const auto f = f_values(s.plan, s.market, s.market.r0);
    // Fixed 640-point rule as a refinement oracle.
    const auto ref = apply_rule<3>(
        [&](double x) -> Vec<3> {
            const auto [A, D] = discount_exponents(s.plan, s.market, x);
            const double w = std::exp(-s.market.r0 * A + D) * s.plan.membership.value(x);
            return {w, w * A * (0.5 * 4e-4 * A - 0.2 * (0.02 - 0.04)), 0.02 * w * A};
        },
        {25.0, 55.0}, 640).first;
    EXPECT_NEAR(f.f0, ref[0], 1e-10 * ref[0]);
    EXPECT_NEAR(f.f1, ref[1], 1e-10 * std::abs(ref[1]));
    EXPECT_NEAR(f.f2, ref[2], 1e-10 * ref[2]);
    // Frozen from the refinement oracle above.
    EXPECT_NEAR(f.f0, 17.9813315, 1e-6);
    EXPECT_NEAR(f.f2, 1.3638328, 1e-6);
}

TEST(FValues, PositiveOverRateRange) {
    const auto s = benchmark();
    for (double r = -0.5; r <= 0.5; r += 0.05) {
        const auto f = f_values(s.plan, s.market, r);
        EXPECT_GT(f.f0, 0.0);
        EXPECT_GT(f.f2, 0.0);
    }
}

TEST(FValues, RateDerivativesAreF2) {
    // f2 = -sigma_r d f0 / dr.
    const auto s = benchmark();
    const double h = 1e-5;
    for (double r : {-0.05, 0.04, 0.2}) {
        const double d = (f_values(s.plan, s.market, r + h).f0 - f_values(s.plan, s.market, r - h).f0) / (2 * h);
        EXPECT_NEAR(f_values(s.plan, s.market, r).f2, -s.market.sigma_r * d, 1e-7);
    }
}

TEST(NormalCost, IntegrationByPartsIdentity) {
    // int e M' = 1 - int e M (-r A' + D') with A' = aA - 1.
    const auto s = benchmark();
    const auto& mk = s.market;
    for (double r : {-0.02, 0.04, 0.12}) {
        const double nc = normal_cost_factor(s.plan, mk, r);
        const auto rhs = integrate<1>(
            [&](double x) -> Vec<1> {
                const auto [A, D] = discount_exponents(s.plan, mk, x);
                const double dA = mk.a * A - 1.0;
                const double dD = discount_exponent_derivative(s.plan, mk, x);
                return {std::exp(-r * A + D) * s.plan.membership.value(x) * (-r * dA + dD)};
            },
            s.plan.m, s.plan.d);
        EXPECT_NEAR(nc, 1.0 - rhs[0], 1e-8);
    }
}

TEST(LiabilityState, RetirementMassHasNoAccrual) {
    auto s = benchmark();
    s.plan.membership = Membership::retirement_mass(s.plan.m, s.plan.d);
    const auto st = liability_state(s.plan, s.market, 0.04, 0.15);
    EXPECT_EQ(st.f0, 0.0);
    EXPECT_EQ(st.f2, 0.0);
    EXPECT_EQ(st.al, 0.0);
    EXPECT_DOUBLE_EQ(st.nc, 0.15);
}

TEST(LiabilityState, HomogeneousInBenefit) {
    const auto s = benchmark();
    const auto a = liability_state(s.plan, s.market, 0.03, 0.15);
    const auto b = liability_state(s.plan, s.market, 0.03, 0.30);
    EXPECT_DOUBLE_EQ(b.al, 2.0 * a.al);
    EXPECT_DOUBLE_EQ(b.nc, 2.0 * a.nc);
    EXPECT_EQ(liability_state(s.plan, s.market, 0.03, 0.0).al, 0.0);
    EXPECT_THROW(liability_state(s.plan, s.market, 0.03, -1.0), DomainError);
}

TEST(LiabilityState, ContributionRate) {
    const auto s = benchmark();
    EXPECT_DOUBLE_EQ(contribution_rate(s.plan, 3.0, 0.2, 3.0), 0.2);
    EXPECT_DOUBLE_EQ(contribution_rate(s.plan, 3.0, 0.2, 2.0), 0.2 + 0.06);
}

TEST(LiabilityState, MatchesEulerMonteCarloOfDefinition) {
    // AL/P = int_0^{d-m} E[e^{-int (r+delta)} P(u)/P(0)] M(d-u) du on a fine Euler grid.
    const auto s = benchmark();
    const auto& mk = s.market;
    const auto& pl = s.plan;
    const double H = pl.d - pl.m;
    const int steps = 3000;
    const double dt = H / steps;
    const std::size_t n = 20000;
    std::mt19937_64 gen(77);
    std::normal_distribution<double> z;
    std::vector<double> al(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = mk.r0, I = 0.0, lp = 0.0;
        double acc = 0.5 * pl.membership.value(pl.d) * 1.0;
        for (int k = 1; k <= steps; ++k) {
            const double dw = std::sqrt(dt) * z(gen);
            const double dws = std::sqrt(dt) * z(gen);
            const double rn = r + mk.a * (mk.b - r) * dt - mk.sigma_r * dw;
            I += 0.5 * (r + rn) * dt;
            r = rn;
            lp += (pl.mu - 0.5 * (pl.sigma_p1 * pl.sigma_p1 + pl.sigma_p2 * pl.sigma_p2)) * dt +
                  pl.sigma_p1 * dw + pl.sigma_p2 * dws;
            const double u = k * dt;
            const double w = (k == steps ? 0.5 : 1.0) * pl.membership.value(pl.d - u);
            acc += w * std::exp(-I - pl.delta * u + lp);
        }
        al[i] = acc * dt;
    }
    const auto m = sample_mean(n, [&](std::size_t i) { return al[i]; });
    const double f0 = f_values(pl, mk, mk.r0).f0;
    EXPECT_NEAR(f0, m.mean, 3.0 * m.se + 2e-3 * f0);
}

TEST(LiabilityState, LibraryMonteCarloCheck) {
    const auto s = benchmark();
    const auto st = liability_state(s.plan, s.market, 0.04, 1.0);
    const auto mc = mc_liability_check(s.market, s.plan, 0.04, 100000, 3);
    EXPECT_NEAR(mc.f0, st.f0, 3.0 * mc.f0_se);
    EXPECT_NEAR(mc.nc, st.nc, 3.0 * mc.nc_se);
}

TEST(LiabilityState, DeterministicLimit) {
    auto s = benchmark();
    s.market.sigma_r = 1e-9;
    s.plan.sigma_p1 = 0.0;
    s.plan.sigma_p2 = 0.0;
    const auto st = liability_state(s.plan, s.market, 0.04, 1.0);
    const auto mc = mc_liability_check(s.market, s.plan, 0.04, 64, 3);
    EXPECT_NEAR(mc.f0, st.f0, 1e-6 * st.f0);
    EXPECT_NEAR(mc.nc, st.nc, 1e-6 * st.nc);
}

TEST(AlSde, EulerConvergesToClosedForm) {
    // Euler for AL driven by exact (r, P) paths must converge to P f0(r) strongly.
    const auto s = benchmark();
    const auto& mk = s.market;
    const auto& pl = s.plan;
    const double T = 5.0;
    const int fine = 400;
    const std::size_t n = 200;
    std::mt19937_64 gen(9);
    std::normal_distribution<double> z;
    std::vector<double> rmse(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r(fine + 1), p(fine + 1), w(fine + 1), ws(fine + 1);
        r[0] = mk.r0;
        p[0] = pl.p0;
        const double dt = T / fine;
        for (int k = 0; k < fine; ++k) {
            // Tiny steps of the exact OU map are accurate enough here.
            const double dw = std::sqrt(dt) * z(gen), dws = std::sqrt(dt) * z(gen);
            r[k + 1] = mk.b + (r[k] - mk.b) * std::exp(-mk.a * dt) - mk.sigma_r * dw;
            p[k + 1] = p[k] * std::exp((pl.mu - 0.5 * (0.01 + 0.01)) * dt + pl.sigma_p1 * dw + pl.sigma_p2 * dws);
            w[k + 1] = w[k] + dw;
            ws[k + 1] = ws[k] + dws;
        }
        const double target = p[fine] * f_values(pl, mk, r[fine]).f0;
        for (int l = 0; l < 3; ++l) {
            const int stride = 4 >> l;
            double al = p[0] * f_values(pl, mk, r[0]).f0;
            for (int k = 0; k < fine; k += stride) {
                const auto c = al_sde_coefficients(pl, mk, r[k], p[k]);
                al += c.drift * dt * stride + c.vol_r * (w[k + stride] - w[k]) + c.vol_s * (ws[k + stride] - ws[k]);
            }
            rmse[l] += (al - target) * (al - target);
        }
    }
    for (double& v : rmse) v = std::sqrt(v / n);
    EXPECT_LT(rmse[1], rmse[0]);
    EXPECT_LT(rmse[2], rmse[1]);
    EXPECT_LT(rmse[2] / rmse[0], 0.8);
}

}  // namespace
}  // namespace dbpension

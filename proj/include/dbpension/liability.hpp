// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Actuarial liability and normal cost of the aggregated plan. Benefits follow
// dP/P = mu dt + sigma_p1 dW_r + sigma_p2 dW_s and are discounted at r + delta.

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "membership.hpp"
#include "numerics.hpp"
#include "quadrature.hpp"

namespace dbpension {

struct PlanParams {
    double mu = 0.0;
    double sigma_p1 = 0.0;
    double sigma_p2 = 0.0;
    double p0 = 0.0;
    double delta = 0.0;
    double k = 0.0;
    double m = 0.0;
    double d = 0.0;
    Membership membership;
    double x0 = 0.0;

    void validate() const {
        auto bad = [](const char* what) { throw DomainError(std::string("plan: ") + what); };
        if (!(d > m)) bad("retirement age d must exceed entry age m");
        if (!(p0 > 0.0)) bad("p0 must be > 0");
        if (!(delta >= 0.0)) bad("delta must be >= 0");
        if (!(sigma_p1 >= 0.0) || !(sigma_p2 >= 0.0)) bad("benefit volatilities must be >= 0");
        if (std::abs(membership.entry_age() - m) > 1e-9 || std::abs(membership.retirement_age() - d) > 1e-9)
            bad("membership support must be [m, d]");
        for (double v : {mu, k, x0})
            if (!std::isfinite(v)) bad("non-finite parameter");
    }
};

struct DiscountExponents {
    double A = 0.0;
    double D = 0.0;
};

struct FValues {
    double f0 = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
};

struct LiabilityState {
    double al = 0.0;
    double nc = 0.0;
    double f0 = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
};

struct AlSdeCoefficients {
    double drift = 0.0;
    double vol_r = 0.0;
    double vol_s = 0.0;
};

namespace detail {

inline void check_age(const PlanParams& plan, double x) {
    if (!(x >= plan.m && x <= plan.d)) throw DomainError("age outside [m, d]");
}

// D as a function of the remaining time to retirement u = d - x.
inline double discount_d(const PlanParams& plan, const MarketParams& mk, double u) {
    return (plan.mu - plan.delta) * u -
           (mk.a * mk.b - mk.sigma_r * plan.sigma_p1) * integrated_decay(mk.a, u) +
           0.5 * mk.sigma_r * mk.sigma_r * squared_decay_integral(mk.a, u);
}

}  // namespace detail

/// (A(x,d), D(x,d)) such that E[e^{-int (r + delta)} P(t+d-x) | r(t) = r] = P(t) e^{-r A + D}.
inline DiscountExponents discount_exponents(const PlanParams& plan, const MarketParams& mk, double x) {
    detail::check_age(plan, x);
    const double u = plan.d - x;
    return {decay_integral(mk.a, u), detail::discount_d(plan, mk, u)};
}

/// dD/dx.
inline double discount_exponent_derivative(const PlanParams& plan, const MarketParams& mk, double x) {
    detail::check_age(plan, x);
    const double A = decay_integral(mk.a, plan.d - x);
    return -0.5 * mk.sigma_r * mk.sigma_r * A * A + (mk.a * mk.b - plan.sigma_p1 * mk.sigma_r) * A +
           plan.delta - plan.mu;
}

inline FValues f_values(const PlanParams& plan, const MarketParams& mk, double r,
                        const QuadratureConfig& quad = {}) {
    const double sr = mk.sigma_r;
    const double drift = mk.a * (mk.b - r);
    auto integrand = [&](double x) -> Vec<3> {
        const auto [A, D] = discount_exponents(plan, mk, x);
        const double w = std::exp(-r * A + D) * plan.membership.value(x);
        return {w, w * A * (0.5 * sr * sr * A - drift), sr * w * A};
    };
    const Vec<3> v = integrate_piecewise<3>(integrand, plan.membership.breakpoints(), quad);
    return {v[0], v[1], v[2]};
}

/// Normal cost per unit benefit: integral of e^{-rA+D} dM(x), atoms included.
inline double normal_cost_factor(const PlanParams& plan, const MarketParams& mk, double r,
                                 const QuadratureConfig& quad = {}) {
    auto integrand = [&](double x) -> Vec<1> {
        const auto [A, D] = discount_exponents(plan, mk, x);
        return {std::exp(-r * A + D) * plan.membership.density(x)};
    };
    double nc = integrate_piecewise<1>(integrand, plan.membership.breakpoints(), quad)[0];
    for (const auto& [x, w] : plan.membership.atoms()) {
        const auto [A, D] = discount_exponents(plan, mk, x);
        nc += w * std::exp(-r * A + D);
    }
    return nc;
}

inline LiabilityState liability_state(const PlanParams& plan, const MarketParams& mk, double r, double p,
                                      const QuadratureConfig& quad = {}) {
    if (p < 0.0) throw DomainError("liability_state: negative benefit level");
    const FValues f = f_values(plan, mk, r, quad);
    LiabilityState s;
    s.f0 = f.f0;
    s.f1 = f.f1;
    s.f2 = f.f2;
    s.al = p * f.f0;
    s.nc = p * normal_cost_factor(plan, mk, r, quad);
    return s;
}

/// Spread-method contribution C = NC + k (AL - F).
inline double contribution_rate(const PlanParams& plan, double al, double nc, double f) {
    return nc + plan.k * (al - f);
}

inline AlSdeCoefficients al_sde_coefficients(const PlanParams& plan, const MarketParams& mk, double r, double p,
                                             const QuadratureConfig& quad = {}) {
    const FValues f = f_values(plan, mk, r, quad);
    const double al = p * f.f0;
    return {p * (f.f1 + plan.sigma_p1 * f.f2) + plan.mu * al, p * f.f2 + plan.sigma_p1 * al,
            plan.sigma_p2 * al};
}

}  // namespace dbpension

// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Closed-form solvency risk E[X*(T)^2 1{X*<0}], overfunded utility
// E[U(X*(T)) 1{X*>0}], region probabilities, and the alpha-swept frontier.
// X*(T) = x*(beta* rho(T)) with ln rho(T) ~ N(M, V^2) under the physical measure.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dual.hpp"
#include "errors.hpp"
#include "market.hpp"
#include "numerics.hpp"

namespace dbpension {

struct RiskUtility {
    double risk = 0.0;
    double utility = 0.0;
};

struct RegionProbabilities {
    double p_over = 0.0;
    double p_under = 0.0;
};

namespace detail {

struct LogInterval {
    double l;
    double h;
};

inline LogInterval log_interval(const PayoffPiece& p, double beta) {
    const double lb = std::log(beta);
    return {p.lo > 0.0 ? std::log(p.lo) - lb : -kInf, std::isinf(p.hi) ? kInf : std::log(p.hi) - lb};
}

}  // namespace detail

inline RiskUtility risk_and_utility(const DualSolution& sol) {
    sol.require_feasible();
    if (sol.kind == Case::SpecificLowerBound) return {sol.prefs.bound * sol.prefs.bound, 0.0};
    const double beta = sol.beta_star;
    const double M = sol.moments.m_total;
    const double V = sol.moments.v_total;
    const double g = sol.prefs.gamma;
    RiskUtility out;
    for (const auto& p : sol.pieces()) {
        const auto iv = detail::log_interval(p, beta);
        if (p.coef < 0.0) {
            // (coef (beta e^L)^p)^2
            out.risk += p.coef * p.coef * std::pow(beta, 2.0 * p.power) *
                        lognormal_partial_moment(2.0 * p.power, M, V, iv.l, iv.h);
        } else {
            const double e = p.power * (1.0 - g);
            out.utility += std::pow(p.coef, 1.0 - g) / (1.0 - g) * std::pow(beta, e) *
                           lognormal_partial_moment(e, M, V, iv.l, iv.h);
        }
    }
    return out;
}

inline RegionProbabilities region_probabilities(const DualSolution& sol) {
    sol.require_feasible();
    if (sol.kind == Case::SpecificLowerBound) return {0.0, 1.0};
    const double beta = sol.beta_star;
    const double M = sol.moments.m_total;
    const double V = sol.moments.v_total;
    // Positive branch occupies y = beta rho <= knot.
    const double knot = sol.kind == Case::LowTolerance ? sol.envelope.k1 : sol.envelope.k2;
    const double z = (std::log(knot) - std::log(beta) - M) / V;
    return {normal_cdf(z), normal_cdf(-z)};
}

/// Probability mass of each payoff branch; sums to one.
inline std::vector<double> branch_probabilities(const DualSolution& sol) {
    sol.require_feasible();
    std::vector<double> out;
    const double beta = sol.effective_beta();
    for (const auto& p : sol.pieces()) {
        const auto iv = detail::log_interval(p, beta);
        out.push_back(lognormal_partial_moment(0.0, sol.moments.m_total, sol.moments.v_total, iv.l, iv.h));
    }
    return out;
}

struct FrontierPoint {
    double alpha = 0.0;
    double beta_star = 0.0;
    Case kind = Case::Infeasible;
    double risk = 0.0;
    double utility = 0.0;
    double p_over = 0.0;
    std::string error;  // empty on success
};

/// One point per alpha with the other preferences and Y0 held fixed. Failing
/// points carry their error message; the sweep continues.
inline std::vector<FrontierPoint> efficient_frontier(const Preferences& base, const MarketParams& mk, double plan_k,
                                                     double y0, const std::vector<double>& alphas) {
    std::vector<FrontierPoint> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        FrontierPoint pt;
        pt.alpha = a;
        try {
            Preferences pr = base;
            pr.alpha = a;
            const DualSolution sol = solve_multiplier(pr, mk, plan_k, y0);
            pt.kind = sol.kind;
            pt.beta_star = sol.beta_star;
            if (!sol.feasible()) {
                pt.error = "infeasible";
            } else {
                const auto ru = risk_and_utility(sol);
                pt.risk = ru.risk;
                pt.utility = ru.utility;
                pt.p_over = region_probabilities(sol).p_over;
            }
        } catch (const std::exception& e) {
            pt.error = e.what();
        }
        out.push_back(pt);
    }
    return out;
}

/// n log-spaced points in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0 && hi >= lo && n >= 1)) throw DomainError("log_grid: need 0 < lo <= hi and n >= 1");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return g;
}

}  // namespace dbpension

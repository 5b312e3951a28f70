// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Optimal auxiliary wealth, exposures and asset allocation at a state
// (t, rho(t), r(t), P(t)). With ln rho(T) | F_t ~ N(mu_t, s_t^2),
// mu_t = ln rho + ln kappa(t) + M~(t), s_t = V~(t), we have
// rho(t) Y*(t) = G(mu_t) where G prices x*(beta* rho(T)).

#pragma once

#include <cmath>

#include "dual.hpp"
#include "errors.hpp"
#include "liability.hpp"
#include "market.hpp"
#include "replication.hpp"

namespace dbpension {

struct PolicyState {
    double t = 0.0;
    double rho = 1.0;
    double r = 0.0;
    double p = 0.0;
    double y_star = 0.0;
    double x_star = 0.0;
    double pi1 = 0.0;
    double pi2 = 0.0;
    double u0 = 0.0;
    double u_b = 0.0;
    double u_s = 0.0;
    double al = 0.0;
    double fund = 0.0;
};

struct GammaUpsilon {
    double gamma = 0.0;
    double upsilon = 0.0;
};

/// Gamma(x, beta, t) = (ln x - ln(beta rho kappa) - M~) / V~ and
/// Upsilon(x, beta) = (ln x - ln beta - M) / V.
inline GammaUpsilon gamma_upsilon(const KernelMoments& km, double x, double beta, double t, double T, double rho) {
    if (!(x > 0.0 && beta > 0.0 && rho > 0.0)) throw DomainError("gamma_upsilon: need x, beta, rho > 0");
    if (!(t < T) || !(km.v_tilde > 0.0)) throw DomainError("gamma_upsilon: Gamma undefined at the horizon");
    GammaUpsilon out;
    out.gamma = (std::log(x) - std::log(beta * rho * km.kappa) - km.m_tilde) / km.v_tilde;
    out.upsilon = (std::log(x) - std::log(beta) - km.m_total) / km.v_total;
    return out;
}

inline double upsilon(const KernelMoments& km, double x, double beta) {
    return (std::log(x) - std::log(beta) - km.m_total) / km.v_total;
}

namespace detail {

struct ConditionalLaw {
    KernelMoments km;
    double mu;
    double s;
};

inline ConditionalLaw conditional_law(const DualSolution& sol, double t, double rho, double r) {
    if (!(rho > 0.0)) throw DomainError("policy: rho must be > 0");
    const KernelMoments km = kernel_moments(sol.market, sol.plan_k, t, r);
    return {km, std::log(rho) + km.log_kappa() + km.m_tilde, km.v_tilde};
}

}  // namespace detail

inline double optimal_auxiliary_wealth(const DualSolution& sol, double t, double rho, double r) {
    sol.require_feasible();
    const auto law = detail::conditional_law(sol, t, rho, r);
    return priced_payoff(sol.pieces(), sol.effective_beta(), law.mu, law.s) / rho;
}

struct Exposures {
    double pi1 = 0.0;
    double pi2 = 0.0;
};

/// Diffusion coefficients of Y* on (W_r, W_s).
inline Exposures optimal_pi(const DualSolution& sol, double t, double rho, double r) {
    sol.require_feasible();
    if (!(t < sol.market.T)) throw DomainError("optimal_pi: strategies undefined at the horizon");
    const auto law = detail::conditional_law(sol, t, rho, r);
    const auto pieces = sol.pieces();
    const double beta = sol.effective_beta();
    const double y = priced_payoff(pieces, beta, law.mu, law.s) / rho;
    const double dy = priced_payoff_dmu(pieces, beta, law.mu, law.s) / rho;
    const auto& mk = sol.market;
    const double A = decay_integral(mk.a, mk.T - t);
    if (sol.kind == Case::SpecificLowerBound) return {y * mk.sigma_r * A, 0.0};
    return {dy * (mk.sigma_r * A - mk.lambda_r) + mk.lambda_r * y, -dy * mk.lambda_s + mk.lambda_s * y};
}

struct Allocation {
    double u0 = 0.0;
    double u_b = 0.0;
    double u_s = 0.0;
};

/// Invert the exposure map for (u_B, u_S); q holds the replication integrals at (t, r).
inline Allocation allocation_from_exposures(const PlanParams& plan, const MarketParams& mk, const Exposures& pi,
                                            const ReplicationQuantities& q, double p, double fund) {
    const double c = flow_weight(plan, mk);
    const double stock_flow = mk.lambda_r * q.ig + c * q.igt;
    const double rate_flow =
        mk.lambda_r * (plan.sigma_p1 * q.ig - mk.sigma_r * q.ig_r) + c * (plan.sigma_p1 * q.igt - mk.sigma_r * q.igt_r);
    Allocation u;
    u.u_s = (pi.pi2 + plan.sigma_p2 * p * q.f0 - plan.sigma_p2 * p * stock_flow) / mk.sigma_2;
    u.u_b = (pi.pi1 - u.u_s * mk.sigma_1 + p * q.f2 + plan.sigma_p1 * p * q.f0 - p * rate_flow) /
            bond_volatility(mk, mk.K);
    u.u0 = fund - u.u_b - u.u_s;
    return u;
}

/// Full policy state from precomputed replication quantities.
inline PolicyState evaluate_policy(const DualSolution& sol, const PlanParams& plan, const ReplicationQuantities& q,
                                   double t, double rho, double r, double p, bool with_strategy = true) {
    const auto& mk = sol.market;
    PolicyState s;
    s.t = t;
    s.rho = rho;
    s.r = r;
    s.p = p;
    s.y_star = optimal_auxiliary_wealth(sol, t, rho, r);
    s.x_star = s.y_star - p * (mk.lambda_r * q.ig + flow_weight(plan, mk) * q.igt);
    s.al = p * q.f0;
    s.fund = s.x_star + s.al;
    if (with_strategy && t < mk.T) {
        const Exposures pi = optimal_pi(sol, t, rho, r);
        s.pi1 = pi.pi1;
        s.pi2 = pi.pi2;
        const Allocation u = allocation_from_exposures(plan, mk, pi, q, p, s.fund);
        s.u0 = u.u0;
        s.u_b = u.u_b;
        s.u_s = u.u_s;
    }
    return s;
}

inline Allocation optimal_allocation(const DualSolution& sol, const PlanParams& plan, double t, double rho, double r,
                                     double p, const QuadratureConfig& inner = {},
                                     const QuadratureConfig& outer = default_outer_quadrature()) {
    if (!(t < sol.market.T)) throw DomainError("optimal_allocation: strategies undefined at the horizon");
    const auto q = replication_quantities(plan, sol.market, t, r, inner, outer);
    const PolicyState s = evaluate_policy(sol, plan, q, t, rho, r, p);
    return {s.u0, s.u_b, s.u_s};
}

inline double optimal_terminal_wealth(const DualSolution& sol, double rho_T) {
    sol.require_feasible();
    if (!(rho_T > 0.0)) throw DomainError("optimal_terminal_wealth: rho(T) must be > 0");
    return evaluate_pieces(sol.pieces(), sol.effective_beta() * rho_T);
}

}  // namespace dbpension

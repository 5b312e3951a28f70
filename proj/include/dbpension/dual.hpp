// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// The non-concave terminal objective f(x) = -alpha x^2 1{x<0} + x^{1-gamma}/(1-gamma) 1{x>0}
// on x >= -B, its concave envelope, the pointwise dual maximizer x*(y), and the
// budget multiplier beta* solving E[rho(T) x*(beta rho(T))] = Y0.

#pragma once

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "numerics.hpp"

namespace dbpension {

struct Preferences {
    double alpha = 0.0;
    double gamma = 0.0;
    double bound = 0.0;  // B

    void validate() const {
        if (!(alpha > 0.0)) throw DomainError("preferences: alpha must be > 0");
        if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("preferences: gamma must lie in (0, 1)");
        if (!(bound > 0.0)) throw DomainError("preferences: B must be > 0");
    }
};

enum class Case { LowTolerance, HighTolerance, SpecificLowerBound, Infeasible };

inline const char* to_string(Case c) {
    switch (c) {
        case Case::LowTolerance: return "LowTolerance";
        case Case::HighTolerance: return "HighTolerance";
        case Case::SpecificLowerBound: return "SpecificLowerBound";
        case Case::Infeasible: return "Infeasible";
    }
    return "?";
}

inline Case case_from_string(const std::string& s) {
    for (Case c : {Case::LowTolerance, Case::HighTolerance, Case::SpecificLowerBound, Case::Infeasible})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown case tag: " + s);
}

/// Tangency constants of the concave envelope. regime is LowTolerance
/// (tangent touching both branches at z2 < 0 < z1) or HighTolerance (tangent
/// from the corner (-B, f(-B)) to the power branch at z0).
struct EnvelopeConstants {
    Case regime = Case::LowTolerance;
    double k1 = 0.0;
    double z1 = 0.0;
    double z2 = 0.0;
    double k2 = std::numeric_limits<double>::quiet_NaN();
    double z0 = std::numeric_limits<double>::quiet_NaN();
    int z0_iterations = 0;
};

/// One branch of x*(y): x = coef * y^power for y in (lo, hi].
struct PayoffPiece {
    double coef;
    double power;
    double lo;
    double hi;
};

inline double objective(const Preferences& pr, double x) {
    if (x < -pr.bound) throw DomainError("objective: x below -B");
    if (x < 0.0) return -pr.alpha * x * x;
    if (x > 0.0) return std::pow(x, 1.0 - pr.gamma) / (1.0 - pr.gamma);
    return 0.0;
}

/// Smallest concave majorant of the objective on [-B, inf).
inline double concave_envelope(const Preferences& pr, const EnvelopeConstants& env, double x) {
    if (x < -pr.bound) throw DomainError("concave_envelope: x below -B");
    if (env.regime == Case::LowTolerance) {
        if (x < env.z2) return objective(pr, x);
        if (x < env.z1) return objective(pr, env.z2) + env.k1 * (x - env.z2);
        return objective(pr, x);
    }
    if (x < env.z0) return objective(pr, -pr.bound) + env.k2 * (x + pr.bound);
    return objective(pr, x);
}

namespace detail {

// z^{1-g}/(1-g) + alpha B^2 - z^{-g}(z + B), increasing in z.
inline double z0_equation(const Preferences& pr, double z) {
    const double g = pr.gamma;
    return std::pow(z, 1.0 - g) / (1.0 - g) + pr.alpha * pr.bound * pr.bound - std::pow(z, -g) * (z + pr.bound);
}

}  // namespace detail

inline EnvelopeConstants envelope_constants(const Preferences& pr) {
    pr.validate();
    const double a = pr.alpha;
    const double g = pr.gamma;
    EnvelopeConstants env;
    env.k1 = std::pow(4.0 * a * g / (1.0 - g), g / (1.0 + g));
    env.z1 = std::pow((1.0 - g) / (4.0 * a * g), 1.0 / (1.0 + g));
    env.z2 = -env.k1 / (2.0 * a);
    if (env.k1 < 2.0 * a * pr.bound) {
        env.regime = Case::LowTolerance;
        return env;
    }
    env.regime = Case::HighTolerance;
    auto h = [&](double z) { return detail::z0_equation(pr, z); };
    const double hi = env.z1;
    const double h_hi = h(hi);
    if (h_hi == 0.0) {
        env.z0 = hi;
    } else {
        double lo = hi;
        int expand = 0;
        while (h(lo) >= 0.0) {
            lo *= 0.5;
            if (++expand > 2000 || lo == 0.0) {
                std::ostringstream msg;
                msg << "envelope: no sign change for the z0 equation on (" << lo << ", " << hi << "]";
                throw NumericalError(msg.str());
            }
        }
        if (h_hi < 0.0) {
            std::ostringstream msg;
            msg << "envelope: z0 equation negative at z1 = " << hi << " (value " << h_hi << ")";
            throw NumericalError(msg.str());
        }
        // Uniqueness on the bracket: count sign changes on a log grid.
        int changes = 0;
        double prev = h(lo);
        for (int i = 1; i <= 400; ++i) {
            const double z = lo * std::pow(hi / lo, i / 400.0);
            const double v = h(z);
            if ((v > 0.0) != (prev > 0.0)) ++changes;
            prev = v;
        }
        if (changes != 1) {
            std::ostringstream msg;
            msg << "envelope: z0 equation has " << changes << " sign changes on (" << lo << ", " << hi << "]";
            throw NumericalError(msg.str());
        }
        std::uintmax_t iters = 200;
        auto tol = boost::math::tools::eps_tolerance<double>(45);
        auto [a0, b0] = boost::math::tools::toms748_solve(h, lo, hi, tol, iters);
        if (iters >= 200) throw NumericalError("envelope: z0 root did not converge in 200 iterations");
        env.z0 = 0.5 * (a0 + b0);
        env.z0_iterations = static_cast<int>(iters);
    }
    env.k2 = std::pow(env.z0, -g);
    return env;
}

/// Branches of x*(y) for the given regime; the positive branch owns its knot.
inline std::vector<PayoffPiece> payoff_pieces(const Preferences& pr, const EnvelopeConstants& env) {
    const double inv = -1.0 / pr.gamma;
    if (env.regime == Case::LowTolerance) {
        const double knee = 2.0 * pr.alpha * pr.bound;
        return {{1.0, inv, 0.0, env.k1}, {-1.0 / (2.0 * pr.alpha), 1.0, env.k1, knee}, {-pr.bound, 0.0, knee, kInf}};
    }
    return {{1.0, inv, 0.0, env.k2}, {-pr.bound, 0.0, env.k2, kInf}};
}

inline double evaluate_pieces(const std::vector<PayoffPiece>& pieces, double y) {
    for (const auto& p : pieces)
        if (y > p.lo && y <= p.hi) return p.coef * (p.power == 0.0 ? 1.0 : std::pow(y, p.power));
    return 0.0;
}

inline double pointwise_maximizer(const Preferences& pr, const EnvelopeConstants& env, double y) {
    if (!(y > 0.0)) throw DomainError("pointwise_maximizer: y must be > 0");
    return evaluate_pieces(payoff_pieces(pr, env), y);
}

/// E[e^{qL} 1{l < L <= h}] for L ~ N(mu, s^2); s = 0 reduces to an indicator.
inline double lognormal_partial_moment(double q, double mu, double s, double l, double h) {
    if (!(h > l)) return 0.0;
    if (s <= 0.0) return (mu > l && mu <= h) ? std::exp(q * mu) : 0.0;
    const double lo = (l - mu) / s - q * s;
    const double hi = (h - mu) / s - q * s;
    const double p = normal_interval(lo, hi);
    if (p == 0.0) return 0.0;
    return std::exp(q * mu + 0.5 * q * q * s * s) * p;
}

/// d/dmu of lognormal_partial_moment (s > 0).
inline double lognormal_partial_moment_dmu(double q, double mu, double s, double l, double h) {
    if (!(h > l) || s <= 0.0) return 0.0;
    const double lo = (l - mu) / s - q * s;
    const double hi = (h - mu) / s - q * s;
    const double e = std::exp(q * mu + 0.5 * q * q * s * s);
    const double dens = (std::isfinite(hi) ? normal_pdf(hi) : 0.0) - (std::isfinite(lo) ? normal_pdf(lo) : 0.0);
    return q * e * normal_interval(lo, hi) - e * dens / s;
}

/// Sum over pieces of E[e^L coef (beta e^L)^p 1{beta e^L in (lo, hi]}], L ~ N(mu, s^2):
/// the price of x*(beta rho(T)) when ln rho(T) ~ N(mu, s^2).
inline double priced_payoff(const std::vector<PayoffPiece>& pieces, double beta, double mu, double s) {
    double total = 0.0;
    const double lb = std::log(beta);
    for (const auto& p : pieces) {
        const double l = p.lo > 0.0 ? std::log(p.lo) - lb : -kInf;
        const double h = std::isinf(p.hi) ? kInf : std::log(p.hi) - lb;
        total += p.coef * std::exp(p.power * lb) * lognormal_partial_moment(1.0 + p.power, mu, s, l, h);
    }
    return total;
}

inline double priced_payoff_dmu(const std::vector<PayoffPiece>& pieces, double beta, double mu, double s) {
    double total = 0.0;
    const double lb = std::log(beta);
    for (const auto& p : pieces) {
        const double l = p.lo > 0.0 ? std::log(p.lo) - lb : -kInf;
        const double h = std::isinf(p.hi) ? kInf : std::log(p.hi) - lb;
        total += p.coef * std::exp(p.power * lb) * lognormal_partial_moment_dmu(1.0 + p.power, mu, s, l, h);
    }
    return total;
}

/// E[rho(T) x*(beta rho(T))] with ln rho(T) ~ N(M, V^2).
inline double budget_value(const Preferences& pr, const EnvelopeConstants& env, const KernelMoments& km,
                           double beta) {
    if (!(beta > 0.0)) throw DomainError("budget_value: beta must be > 0");
    return priced_payoff(payoff_pieces(pr, env), beta, km.m_total, km.v_total);
}

/// Infimum of the budget over beta: -B E[rho(T)].
inline double feasibility_threshold(const Preferences& pr, const KernelMoments& km) {
    return -pr.bound * std::exp(km.m_total + 0.5 * km.v_total * km.v_total);
}

struct DualSolution {
    Case kind = Case::Infeasible;
    double beta_star = 0.0;  // +inf for SpecificLowerBound
    EnvelopeConstants envelope;
    double y0 = 0.0;
    KernelMoments moments;
    double threshold = 0.0;
    int iterations = 0;
    double residual = 0.0;
    Preferences prefs;
    MarketParams market;
    double plan_k = 0.0;

    bool feasible() const { return kind != Case::Infeasible; }

    /// Branches of X*(T) as a function of y = beta* rho(T); for the lower-bound
    /// case a single constant branch with beta treated as 1.
    std::vector<PayoffPiece> pieces() const {
        if (kind == Case::SpecificLowerBound) return {{-prefs.bound, 0.0, 0.0, kInf}};
        return payoff_pieces(prefs, envelope);
    }

    double effective_beta() const { return kind == Case::SpecificLowerBound ? 1.0 : beta_star; }

    void require_feasible() const {
        if (kind == Case::Infeasible) {
            std::ostringstream msg;
            msg << "infeasible scenario: Y0 = " << y0 << " below the floor " << threshold;
            throw InfeasibleError(msg.str(), threshold, y0);
        }
    }
};

/// Tolerance for classifying y0 as sitting exactly on the floor.
inline double feasibility_tolerance(double threshold) { return 1e-9 * std::max(1.0, std::abs(threshold)); }

inline DualSolution solve_multiplier(const Preferences& pr, const MarketParams& mk, double plan_k, double y0) {
    pr.validate();
    if (!std::isfinite(y0)) throw DomainError("solve_multiplier: y0 must be finite");
    DualSolution sol;
    sol.prefs = pr;
    sol.market = mk;
    sol.plan_k = plan_k;
    sol.y0 = y0;
    sol.moments = kernel_moments(mk, plan_k, 0.0, mk.r0);
    sol.envelope = envelope_constants(pr);
    sol.threshold = feasibility_threshold(pr, sol.moments);
    const double gap = y0 - sol.threshold;
    if (std::abs(gap) <= feasibility_tolerance(sol.threshold)) {
        sol.kind = Case::SpecificLowerBound;
        sol.beta_star = kInf;
        return sol;
    }
    if (gap < 0.0) {
        sol.kind = Case::Infeasible;
        sol.beta_star = std::numeric_limits<double>::quiet_NaN();
        return sol;
    }
    sol.kind = sol.envelope.regime;
    const auto pieces = payoff_pieces(pr, sol.envelope);
    auto f = [&](double lb) {
        return priced_payoff(pieces, std::exp(lb), sol.moments.m_total, sol.moments.v_total) - y0;
    };
    double lo = std::log(1e-8);
    double hi = std::log(1e8);
    double flo = f(lo);
    double fhi = f(hi);
    const double width = hi - lo;
    for (int i = 0; flo < 0.0; ++i) {
        if (i > 60 || lo < -700.0) throw NumericalError("solve_multiplier: cannot bracket beta from below");
        hi = lo;
        fhi = flo;
        lo -= width * std::ldexp(1.0, i);
        flo = f(lo);
    }
    for (int i = 0; fhi > 0.0; ++i) {
        if (i > 60 || hi > 700.0) {
            std::ostringstream msg;
            msg << "solve_multiplier: cannot bracket beta from above (y0 - floor = " << gap << ")";
            throw NumericalError(msg.str());
        }
        lo = hi;
        flo = fhi;
        hi += width * std::ldexp(1.0, i);
        fhi = f(hi);
    }
    std::uintmax_t iters = 300;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(a)); };
    double lb = lo;
    if (flo == 0.0) {
        lb = lo;
    } else if (fhi == 0.0) {
        lb = hi;
    } else {
        auto [a0, b0] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
        if (iters >= 300) throw NumericalError("solve_multiplier: beta root did not converge");
        // Keep the endpoint with the smaller residual.
        lb = std::abs(f(a0)) <= std::abs(f(b0)) ? a0 : b0;
    }
    sol.beta_star = std::exp(lb);
    sol.iterations = static_cast<int>(iters);
    sol.residual = f(lb);
    if (std::abs(sol.residual) > 1e-10 * std::max(1.0, std::abs(y0))) {
        std::ostringstream msg;
        msg << "solve_multiplier: budget residual " << sol.residual << " after " << iters << " iterations";
        throw NumericalError(msg.str());
    }
    return sol;
}

}  // namespace dbpension

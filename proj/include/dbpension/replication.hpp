// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Replication of the two benefit-driven drift flows P f2(r) and P f0(r) in the
// surplus dynamics. G(t,r,P,s) = P g(t,r,s) prices a payment P(s) f2(r(s)) at s
// (g~ likewise for f0); H, H~ integrate those prices over s in [t, T].

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "chebyshev.hpp"
#include "errors.hpp"
#include "liability.hpp"
#include "market.hpp"
#include "numerics.hpp"
#include "quadrature.hpp"

namespace dbpension {

struct TildeExponents {
    double A = 0.0;
    double D = 0.0;
};

struct GValues {
    double g = 0.0;
    double g_r = 0.0;
    double g_tilde = 0.0;
    double g_tilde_r = 0.0;
};

struct HValues {
    double h = 0.0;
    double h_tilde = 0.0;
};

/// Per unit of P(t): f0, f2 at r, and the s-integrals over [t, T] of g, g_r, g~, g~_r.
struct ReplicationQuantities {
    double f0 = 0.0;
    double f2 = 0.0;
    double ig = 0.0;
    double ig_r = 0.0;
    double igt = 0.0;
    double igt_r = 0.0;
};

/// Default outer (maturity) quadrature.
inline QuadratureConfig default_outer_quadrature() { return {32, 2048, 1e-9}; }

/// lambda_r sigma_p1 + lambda_s sigma_p2 - delta, the weight of the f0 flow.
inline double flow_weight(const PlanParams& plan, const MarketParams& mk) {
    return mk.lambda_r * plan.sigma_p1 + mk.lambda_s * plan.sigma_p2 - plan.delta;
}

namespace detail {

// Pieces of the tilde exponents that depend only on tau = s - t.
struct TauTerms {
    double tau, A, e, IA, IAA, A2;
};

inline TauTerms tau_terms(const MarketParams& mk, double tau) {
    return {tau,
            decay_integral(mk.a, tau),
            std::exp(-mk.a * tau),
            integrated_decay(mk.a, tau),
            squared_decay_integral(mk.a, tau),
            decay_integral(2.0 * mk.a, tau)};
}

struct TildeCoefficients {
    double c0, c1, half_s2;
};

inline TildeCoefficients tilde_coefficients(const PlanParams& plan, const MarketParams& mk) {
    return {mk.lambda_r * plan.sigma_p1 + mk.lambda_s * plan.sigma_p2 - plan.k - plan.mu,
            mk.lambda_r * mk.sigma_r + mk.a * mk.b - mk.sigma_r * plan.sigma_p1,
            0.5 * mk.sigma_r * mk.sigma_r};
}

inline TildeExponents tilde_from_terms(const TildeCoefficients& c, const TauTerms& q, double A0, double D0) {
    const double A = q.A + A0 * q.e;
    const double shift = c.c0 * q.tau + c.c1 * (q.IA + A0 * q.A) -
                         c.half_s2 * (q.IAA + A0 * q.A * q.A + A0 * A0 * q.A2);
    return {A, D0 - shift};
}

}  // namespace detail

/// (A~, D~) with e^{-r A~ + D~} the time-t price, per unit P(t), of the payoff
/// P(s) e^{-r(s) A(x,d) + D(x,d)} at s.
inline TildeExponents tilde_exponents(const PlanParams& plan, const MarketParams& mk, double t, double s, double x) {
    if (t > s) throw DomainError("tilde_exponents: t after s");
    const auto [A0, D0] = discount_exponents(plan, mk, x);
    return detail::tilde_from_terms(detail::tilde_coefficients(plan, mk), detail::tau_terms(mk, s - t), A0, D0);
}

inline GValues g_values(const PlanParams& plan, const MarketParams& mk, double t, double r, double s,
                        const QuadratureConfig& quad = {}) {
    if (t > s) throw DomainError("g_values: t after s");
    const auto coef = detail::tilde_coefficients(plan, mk);
    const auto q = detail::tau_terms(mk, s - t);
    const double sr = mk.sigma_r;
    auto integrand = [&](double x) -> Vec<4> {
        const auto [A0, D0] = discount_exponents(plan, mk, x);
        const auto [At, Dt] = detail::tilde_from_terms(coef, q, A0, D0);
        const double w = std::exp(-r * At + Dt) * plan.membership.value(x);
        return {sr * w * A0, -sr * w * A0 * At, w, -w * At};
    };
    const Vec<4> v = integrate_piecewise<4>(integrand, plan.membership.breakpoints(), quad);
    return {v[0], v[1], v[2], v[3]};
}

/// Nested adaptive evaluation of the replication integrals at (t, r).
inline ReplicationQuantities replication_quantities(const PlanParams& plan, const MarketParams& mk, double t,
                                                    double r, const QuadratureConfig& inner = {},
                                                    const QuadratureConfig& outer = default_outer_quadrature()) {
    if (!(t >= 0.0 && t <= mk.T)) throw DomainError("replication: t outside [0, T]");
    ReplicationQuantities out;
    const FValues f = f_values(plan, mk, r, inner);
    out.f0 = f.f0;
    out.f2 = f.f2;
    if (t < mk.T) {
        auto integrand = [&](double s) -> Vec<4> {
            const GValues g = g_values(plan, mk, t, r, s, inner);
            return {g.g, g.g_r, g.g_tilde, g.g_tilde_r};
        };
        const Vec<4> v = integrate<4>(integrand, t, mk.T, outer);
        out.ig = v[0];
        out.ig_r = v[1];
        out.igt = v[2];
        out.igt_r = v[3];
    }
    return out;
}

inline HValues h_values(const PlanParams& plan, const MarketParams& mk, double t, double r, double p,
                        const QuadratureConfig& inner = {},
                        const QuadratureConfig& outer = default_outer_quadrature()) {
    if (!(t >= 0.0 && t <= mk.T)) throw DomainError("h_values: t outside [0, T]");
    if (t == mk.T || p == 0.0) return {0.0, 0.0};
    const auto q = replication_quantities(plan, mk, t, r, inner, outer);
    return {p * q.ig, p * q.igt};
}

/// Y = X + lambda_r H + (lambda_r sigma_p1 + lambda_s sigma_p2 - delta) H~.
inline double y_from_x(const PlanParams& plan, const MarketParams& mk, const HValues& h, double x) {
    return x + mk.lambda_r * h.h + flow_weight(plan, mk) * h.h_tilde;
}

inline double x_from_y(const PlanParams& plan, const MarketParams& mk, const HValues& h, double y) {
    return y - (mk.lambda_r * h.h + flow_weight(plan, mk) * h.h_tilde);
}

inline double y_from_x(const PlanParams& plan, const MarketParams& mk, double t, double r, double p, double x) {
    return y_from_x(plan, mk, h_values(plan, mk, t, r, p), x);
}

inline double x_from_y(const PlanParams& plan, const MarketParams& mk, double t, double r, double p, double y) {
    return x_from_y(plan, mk, h_values(plan, mk, t, r, p), y);
}

struct ProfileConfig {
    int x_nodes = 64;           // per membership panel
    int s_nodes = 32;
    int degree = 24;            // Chebyshev degree in r
    double width_sd = 9.0;      // half-width of the r range in OU standard deviations
    double min_half_width = 0.02;
};

/// Replication quantities tabulated on a time grid as Chebyshev interpolants
/// in r, for fast pathwise policy evaluation. Ranges follow the OU law of r(t)
/// started at r0; queries outside a range fall back to direct evaluation with
/// the same fixed rules.
class ReplicationProfile {
public:
    ReplicationProfile(const PlanParams& plan, const MarketParams& mk, std::vector<double> times,
                       ProfileConfig cfg = {})
        : plan_(plan), mk_(mk), times_(std::move(times)), cfg_(cfg), coef_(detail::tilde_coefficients(plan, mk)) {
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!(times_[i] >= 0.0 && times_[i] <= mk.T)) throw DomainError("profile: time outside [0, T]");
            if (i > 0 && !(times_[i] > times_[i - 1])) throw DomainError("profile: times must increase");
        }
        build_age_nodes();
        double lo_all = mk.r0;
        double hi_all = mk.r0;
        ranges_.reserve(times_.size());
        for (double t : times_) {
            const auto [lo, hi] = r_range(t);
            ranges_.push_back({lo, hi});
            lo_all = std::min(lo_all, lo);
            hi_all = std::max(hi_all, hi);
        }
        f_cheb_ = ChebyshevInterpolant<2>([&](double r) { return f_fixed(r); }, lo_all, hi_all, cfg_.degree);
        tables_.resize(times_.size());
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (times_[i] >= mk.T) continue;
            const auto snodes = s_nodes(times_[i]);
            tables_[i] = ChebyshevInterpolant<4>([&](double r) { return s_integrals(snodes, r); },
                                                 ranges_[i].first, ranges_[i].second, cfg_.degree);
        }
    }

    const std::vector<double>& times() const { return times_; }
    std::size_t size() const { return times_.size(); }

    ReplicationQuantities operator()(std::size_t i, double r) const {
        ReplicationQuantities q;
        const auto f = f_cheb_.contains(r) ? f_cheb_(r) : f_fixed(r);
        q.f0 = f[0];
        q.f2 = f[1];
        if (times_[i] < mk_.T) {
            const auto& tab = tables_[i];
            const auto v = tab.contains(r) ? tab(r) : s_integrals(s_nodes(times_[i]), r);
            q.ig = v[0];
            q.ig_r = v[1];
            q.igt = v[2];
            q.igt_r = v[3];
        }
        return q;
    }

    /// Same fixed rules without interpolation; used to validate the tables.
    ReplicationQuantities direct(double t, double r) const {
        ReplicationQuantities q;
        const auto f = f_fixed(r);
        q.f0 = f[0];
        q.f2 = f[1];
        if (t < mk_.T) {
            const auto v = s_integrals(s_nodes(t), r);
            q.ig = v[0];
            q.ig_r = v[1];
            q.igt = v[2];
            q.igt_r = v[3];
        }
        return q;
    }

    std::pair<double, double> range(std::size_t i) const { return ranges_[i]; }

private:
    struct AgeNode {
        double w;   // quadrature weight times M(x)
        double A0;
        double D0;
    };
    struct SNode {
        double w;
        detail::TauTerms q;
    };

    void build_age_nodes() {
        const auto breaks = plan_.membership.breakpoints();
        const auto& rule = gauss_legendre(cfg_.x_nodes);
        for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
            const double half = 0.5 * (breaks[p + 1] - breaks[p]);
            const double mid = 0.5 * (breaks[p + 1] + breaks[p]);
            for (int j = 0; j < cfg_.x_nodes; ++j) {
                const double x = mid + half * rule.nodes[j];
                const auto [A0, D0] = discount_exponents(plan_, mk_, x);
                const double w = half * rule.weights[j] * plan_.membership.value(x);
                if (w != 0.0) ages_.push_back({w, A0, D0});
            }
        }
    }

    std::pair<double, double> r_range(double t) const {
        const double e = std::exp(-mk_.a * t);
        const double mean = mk_.b + (mk_.r0 - mk_.b) * e;
        const double sd = mk_.sigma_r * std::sqrt(decay_integral(2.0 * mk_.a, t));
        const double half = std::max(cfg_.width_sd * sd, cfg_.min_half_width);
        return {mean - half, mean + half};
    }

    std::vector<SNode> s_nodes(double t) const {
        std::vector<SNode> out;
        const auto& rule = gauss_legendre(cfg_.s_nodes);
        const double half = 0.5 * (mk_.T - t);
        const double mid = 0.5 * (mk_.T + t);
        out.reserve(cfg_.s_nodes);
        for (int j = 0; j < cfg_.s_nodes; ++j) {
            const double s = mid + half * rule.nodes[j];
            out.push_back({half * rule.weights[j], detail::tau_terms(mk_, s - t)});
        }
        return out;
    }

    std::array<double, 2> f_fixed(double r) const {
        std::array<double, 2> v{};
        for (const auto& n : ages_) {
            const double w = n.w * std::exp(-r * n.A0 + n.D0);
            v[0] += w;
            v[1] += mk_.sigma_r * w * n.A0;
        }
        return v;
    }

    std::array<double, 4> s_integrals(const std::vector<SNode>& snodes, double r) const {
        std::array<double, 4> v{};
        const double sr = mk_.sigma_r;
        for (const auto& s : snodes) {
            for (const auto& n : ages_) {
                const auto [At, Dt] = detail::tilde_from_terms(coef_, s.q, n.A0, n.D0);
                const double w = s.w * n.w * std::exp(-r * At + Dt);
                v[0] += sr * w * n.A0;
                v[1] -= sr * w * n.A0 * At;
                v[2] += w;
                v[3] -= w * At;
            }
        }
        return v;
    }

    PlanParams plan_;
    MarketParams mk_;
    std::vector<double> times_;
    ProfileConfig cfg_;
    detail::TildeCoefficients coef_;
    std::vector<AgeNode> ages_;
    std::vector<std::pair<double, double>> ranges_;
    ChebyshevInterpolant<2> f_cheb_;
    std::vector<ChebyshevInterpolant<4>> tables_;
};

}  // namespace dbpension

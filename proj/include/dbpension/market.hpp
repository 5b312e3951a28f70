// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Interest-rate world: OU short rate dr = a(b - r)dt - sigma_r dW_r, bonds,
// the rolling bond, and the lognormal law of the k-shifted pricing kernel
// d rho / rho = -(r - k)dt - lambda_r dW_r - lambda_s dW_s.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace dbpension {

struct MarketParams {
    double a = 0.0;
    double b = 0.0;
    double sigma_r = 0.0;
    double r0 = 0.0;
    double lambda_r = 0.0;
    double lambda_s = 0.0;
    double sigma_1 = 0.0;
    double sigma_2 = 0.0;
    double K = 0.0;
    double T = 0.0;

    void validate() const {
        auto bad = [](const char* what) { throw DomainError(std::string("market: ") + what); };
        if (!(a > 0.0)) bad("a must be > 0");
        if (!(sigma_r > 0.0)) bad("sigma_r must be > 0");
        if (!(sigma_2 > 0.0)) bad("sigma_2 must be > 0");
        if (!(T > 0.0)) bad("T must be > 0");
        if (!(K > 0.0)) bad("K must be > 0");
        for (double v : {b, r0, lambda_r, lambda_s, sigma_1})
            if (!std::isfinite(v)) bad("non-finite parameter");
    }

    /// Non-fatal remarks about unusual but admissible values.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (lambda_r <= 0.0) w.emplace_back("lambda_r <= 0: rate risk carries no positive premium");
        return w;
    }

    double lambda_sq() const { return lambda_r * lambda_r + lambda_s * lambda_s; }
};

/// Conditional law of ln rho(T) seen from (t, r): ln rho(T) - ln rho(t) ~
/// N(ln kappa + m_tilde, v_tilde^2). m_total, v_total are the time-0 values at r0.
struct KernelMoments {
    double m_tilde = 0.0;
    double v_tilde = 0.0;
    double kappa = 1.0;
    double m_total = 0.0;
    double v_total = 0.0;

    double log_kappa() const { return std::log(kappa); }
};

/// Jointly Gaussian vector with mean and covariance.
template <std::size_t N>
struct GaussianLaw {
    std::array<double, N> mean{};
    std::array<std::array<double, N>, N> cov{};

    /// Lower Cholesky factor; pivots that round to small negatives are clamped
    /// to zero so degenerate (zero-length) transitions are allowed.
    std::array<std::array<double, N>, N> cholesky() const {
        std::array<std::array<double, N>, N> L{};
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = cov[i][j];
                for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
                if (i == j) {
                    const double tol = 1e-13 * std::max(1.0, std::abs(cov[i][i]));
                    if (s < -tol) throw NumericalError("cholesky: covariance not positive semidefinite");
                    L[i][i] = s > 0.0 ? std::sqrt(s) : 0.0;
                } else {
                    L[i][j] = L[j][j] > 0.0 ? s / L[j][j] : 0.0;
                }
            }
        }
        return L;
    }
};

using GaussianLaw3 = GaussianLaw<3>;

/// Law of (r(t+tau), int_t^{t+tau} r ds, W_r(t+tau) - W_r(t)) given r(t) = r1.
/// Unlike ou_transition, tau may exceed the planning horizon.
inline GaussianLaw3 ou_step(const MarketParams& mk, double tau, double r1) {
    detail::require(tau >= 0.0, "ou_step: negative time step");
    const double a = mk.a;
    const double s2 = mk.sigma_r * mk.sigma_r;
    const double A = decay_integral(a, tau);
    const double e = std::exp(-a * tau);
    GaussianLaw3 g;
    g.mean = {mk.b + (r1 - mk.b) * e, mk.b * tau + (r1 - mk.b) * A, 0.0};
    const double vr = s2 * decay_integral(2.0 * a, tau);
    const double vi = s2 * squared_decay_integral(a, tau);
    const double cri = 0.5 * s2 * A * A;
    const double crw = -mk.sigma_r * A;
    const double ciw = -mk.sigma_r * integrated_decay(a, tau);
    g.cov = {{{vr, cri, crw}, {cri, vi, ciw}, {crw, ciw, tau}}};
    return g;
}

inline GaussianLaw3 ou_transition(const MarketParams& mk, double t1, double t2, double r1) {
    if (!(t1 >= 0.0 && t1 <= t2 && t2 <= mk.T))
        throw DomainError("ou_transition: need 0 <= t1 <= t2 <= T");
    return ou_step(mk, t2 - t1, r1);
}

/// Zero-coupon bond exp(C - A r) under the market price of rate risk lambda_r.
inline double bond_price(const MarketParams& mk, double t, double maturity, double r) {
    if (t > maturity) throw DomainError("bond_price: t after maturity");
    const double tau = maturity - t;
    const double lnB = -(mk.a * mk.b + mk.sigma_r * mk.lambda_r) * integrated_decay(mk.a, tau) +
                       0.5 * mk.sigma_r * mk.sigma_r * squared_decay_integral(mk.a, tau) -
                       decay_integral(mk.a, tau) * r;
    return std::exp(lnB);
}

/// h(tau) = sigma_r (1 - e^{-a tau}) / a.
inline double bond_volatility(const MarketParams& mk, double tau) {
    if (tau < 0.0) throw DomainError("bond_volatility: negative time to maturity");
    if (std::isinf(tau)) return mk.sigma_r / mk.a;
    return mk.sigma_r * decay_integral(mk.a, tau);
}

namespace detail {

inline double kernel_variance(const MarketParams& mk, double tau) {
    const double v = mk.sigma_r * mk.sigma_r * squared_decay_integral(mk.a, tau) -
                     2.0 * mk.lambda_r * mk.sigma_r * integrated_decay(mk.a, tau) + mk.lambda_sq() * tau;
    return v > 0.0 ? v : 0.0;
}

}  // namespace detail

inline KernelMoments kernel_moments(const MarketParams& mk, double plan_k, double t, double r) {
    if (!(t >= 0.0 && t <= mk.T)) throw DomainError("kernel_moments: t outside [0, T]");
    const double drift = plan_k - mk.b - 0.5 * mk.lambda_sq();
    const double tau = mk.T - t;
    KernelMoments km;
    km.m_tilde = drift * tau;
    km.v_tilde = std::sqrt(detail::kernel_variance(mk, tau));
    km.kappa = std::exp(decay_integral(mk.a, tau) * (mk.b - r));
    km.m_total = drift * mk.T + decay_integral(mk.a, mk.T) * (mk.b - mk.r0);
    km.v_total = std::sqrt(detail::kernel_variance(mk, mk.T));
    return km;
}

}  // namespace dbpension

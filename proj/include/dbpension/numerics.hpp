// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Small numerical kernels shared by every module: stable integrals of the
// exponential decay e^{-a v} that appear in all OU moment formulas, and the
// standard normal distribution.

#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace dbpension {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

// sum_{n>=k} c_n x^{n-k} with c_n = coeff(n) / n!, evaluated until terms vanish.
template <class Coeff>
double factorial_series(double x, int k, Coeff coeff) {
    double fact = 1.0;
    for (int n = 2; n <= k; ++n) fact *= n;
    double sum = 0.0;
    double xp = 1.0;
    for (int n = k; n < k + 40; ++n) {
        if (n > k) fact *= n;
        const double term = coeff(n) * xp / fact;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        xp *= x;
    }
    return sum;
}

}  // namespace detail

/// A(tau) = (1 - e^{-a tau}) / a, the integral of e^{-a v} over [0, tau].
/// Falls back to its Taylor series when a*tau < 1e-6.
inline double decay_integral(double a, double tau) {
    const double x = a * tau;
    if (std::abs(x) < 1e-6) return tau * (1.0 - x / 2.0 + x * x / 6.0);
    return -std::expm1(-x) / a;
}

/// Integral of A(v) over [0, tau], i.e. (tau - A(tau)) / a.
inline double integrated_decay(double a, double tau) {
    const double x = a * tau;
    if (std::abs(x) < 0.5) {
        // (e^{-x} - 1 + x) / x^2 = sum_{n>=2} (-1)^n x^{n-2} / n!
        return tau * tau *
               detail::factorial_series(x, 2, [](int n) { return (n % 2 == 0) ? 1.0 : -1.0; });
    }
    return (tau - decay_integral(a, tau)) / a;
}

/// Integral of A(v)^2 over [0, tau].
inline double squared_decay_integral(double a, double tau) {
    const double x = a * tau;
    if (std::abs(x) < 0.5) {
        // x - 3/2 + 2e^{-x} - e^{-2x}/2 = sum_{n>=3} (-1)^n (2 - 2^{n-1}) x^n / n!
        return tau * tau * tau * detail::factorial_series(x, 3, [](int n) {
                   const double c = 2.0 - std::ldexp(1.0, n - 1);
                   return (n % 2 == 0) ? c : -c;
               });
    }
    return (x - 1.5 + 2.0 * std::exp(-x) - 0.5 * std::exp(-2.0 * x)) / (a * a * a);
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// P(lo < Z <= hi) for a standard normal Z, computed from the nearer tail so
/// that intervals far from the origin keep their relative precision.
inline double normal_interval(double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (lo > 0.0) {
        return 0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2));
    }
    return normal_cdf(hi) - normal_cdf(lo);
}

}  // namespace dbpension

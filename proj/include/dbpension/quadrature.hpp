// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Gauss-Legendre rules and a node-doubling integrator for vector-valued
// integrands. Rules are computed once per node count and memoized.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace dbpension {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule build_gauss_legendre(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace detail

/// Memoized n-point Gauss-Legendre rule. Thread-safe; the returned reference
/// stays valid for the life of the program.
inline const GaussLegendreRule& gauss_legendre(int n) {
    detail::require(n >= 1, "gauss_legendre: node count must be positive");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendreRule>(detail::build_gauss_legendre(n));
    return *slot;
}

struct QuadratureConfig {
    int initial_nodes = 64;
    int max_nodes = 4096;
    double rel_tol = 1e-10;
};

template <std::size_t N>
using Vec = std::array<double, N>;

/// Composite n-point rule over the panels [b_0,b_1],...,[b_{k-1},b_k].
/// Also returns the integral of |f| per component, used as the error scale.
template <std::size_t N, class F>
std::pair<Vec<N>, Vec<N>> apply_rule(F&& f, const std::vector<double>& breaks, int n) {
    const GaussLegendreRule& rule = gauss_legendre(n);
    Vec<N> sum{};
    Vec<N> mag{};
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double lo = breaks[p];
        const double hi = breaks[p + 1];
        if (!(hi > lo)) continue;
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (int i = 0; i < n; ++i) {
            const Vec<N> v = f(mid + half * rule.nodes[i]);
            const double w = half * rule.weights[i];
            for (std::size_t c = 0; c < N; ++c) {
                sum[c] += w * v[c];
                mag[c] += w * std::abs(v[c]);
            }
        }
    }
    return {sum, mag};
}

/// Integrates f over the panels, doubling the per-panel node count until every
/// component changes by at most rel_tol times its absolute integral.
template <std::size_t N, class F>
Vec<N> integrate_piecewise(F&& f, const std::vector<double>& breaks, const QuadratureConfig& cfg = {}) {
    detail::require(cfg.initial_nodes >= 2, "quadrature: initial node count must be at least 2");
    int n = cfg.initial_nodes;
    auto [prev, mag] = apply_rule<N>(f, breaks, n);
    double last_change = 0.0;
    while (2 * n <= cfg.max_nodes) {
        n *= 2;
        auto [cur, cur_mag] = apply_rule<N>(f, breaks, n);
        bool ok = true;
        last_change = 0.0;
        for (std::size_t c = 0; c < N; ++c) {
            const double diff = std::abs(cur[c] - prev[c]);
            const double scale = cur_mag[c];
            if (scale > 0.0) last_change = std::max(last_change, diff / scale);
            if (diff > cfg.rel_tol * scale) ok = false;
        }
        if (ok) return cur;
        prev = cur;
    }
    std::ostringstream msg;
    msg << "quadrature did not converge: " << n << " nodes per panel, relative change "
        << last_change << " > tolerance " << cfg.rel_tol << " on [" << breaks.front() << ", "
        << breaks.back() << "]";
    throw NumericalError(msg.str());
}

template <std::size_t N, class F>
Vec<N> integrate(F&& f, double lo, double hi, const QuadratureConfig& cfg = {}) {
    return integrate_piecewise<N>(std::forward<F>(f), std::vector<double>{lo, hi}, cfg);
}

}  // namespace dbpension

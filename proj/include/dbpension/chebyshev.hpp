// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace dbpension {

/// Chebyshev interpolant of a vector-valued function on [lo, hi], built from
/// values at the Chebyshev points of the first kind.
template <std::size_t N>
class ChebyshevInterpolant {
public:
    ChebyshevInterpolant() = default;

    template <class F>
    ChebyshevInterpolant(F&& f, double lo, double hi, int degree) : lo_(lo), hi_(hi) {
        detail::require(hi > lo && degree >= 1, "chebyshev: need hi > lo and positive degree");
        const int n = degree + 1;
        std::vector<std::array<double, N>> vals(n);
        for (int j = 0; j < n; ++j) {
            const double theta = std::numbers::pi * (j + 0.5) / n;
            vals[j] = f(to_x(std::cos(theta)));
        }
        coeffs_.assign(n, std::array<double, N>{});
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < n; ++j) {
                const double c = std::cos(std::numbers::pi * k * (j + 0.5) / n);
                for (std::size_t i = 0; i < N; ++i) coeffs_[k][i] += c * vals[j][i];
            }
            const double scale = (k == 0 ? 1.0 : 2.0) / n;
            for (std::size_t i = 0; i < N; ++i) coeffs_[k][i] *= scale;
        }
    }

    bool contains(double x) const { return x >= lo_ && x <= hi_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool empty() const { return coeffs_.empty(); }

    std::array<double, N> operator()(double x) const {
        const double u = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
        std::array<double, N> b1{};
        std::array<double, N> b2{};
        for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) {
            for (std::size_t i = 0; i < N; ++i) {
                const double t = 2.0 * u * b1[i] - b2[i] + coeffs_[k][i];
                b2[i] = b1[i];
                b1[i] = t;
            }
        }
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i) out[i] = u * b1[i] - b2[i] + coeffs_[0][i];
        return out;
    }

private:
    double to_x(double u) const { return 0.5 * (lo_ + hi_) + 0.5 * (hi_ - lo_) * u; }

    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<std::array<double, N>> coeffs_;
};

}  // namespace dbpension

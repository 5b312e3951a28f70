// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace dbpension {

/// Argument outside the mathematical domain of an operation (reversed times,
/// negative maturities, out-of-range ages, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed to reach its tolerance. The message carries
/// the diagnostics (bracket, iteration count, last change).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a policy is requested for a scenario whose auxiliary initial
/// wealth lies below the attainable floor -B*exp(M + V^2/2).
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, double threshold, double y0)
        : std::runtime_error(what), threshold_(threshold), y0_(y0) {}

    double threshold() const noexcept { return threshold_; }
    double y0() const noexcept { return y0_; }

private:
    double threshold_;
    double y0_;
};

/// Malformed scenario configuration (unknown key, bad value, failed invariant).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DomainError(msg);
}

}  // namespace detail
}  // namespace dbpension

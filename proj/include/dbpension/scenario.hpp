// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "analytics.hpp"
#include "dual.hpp"
#include "liability.hpp"
#include "market.hpp"
#include "replication.hpp"

namespace dbpension {

struct Scenario {
    MarketParams market;
    PlanParams plan;
    Preferences prefs;

    void validate() const {
        market.validate();
        plan.validate();
        prefs.validate();
    }

    HValues h0(const QuadratureConfig& inner = {}) const {
        return h_values(plan, market, 0.0, market.r0, plan.p0, inner);
    }

    double y0(const QuadratureConfig& inner = {}) const { return y_from_x(plan, market, h0(inner), plan.x0); }

    DualSolution solve(const QuadratureConfig& inner = {}) const {
        return solve_multiplier(prefs, market, plan.k, y0(inner));
    }
};

/// The reference parameter set of the numerical study.
inline Scenario benchmark() {
    Scenario s;
    s.market = {.a = 0.2,
                .b = 0.02,
                .sigma_r = 0.02,
                .r0 = 0.04,
                .lambda_r = 0.15,
                .lambda_s = 0.2,
                .sigma_1 = 0.2,
                .sigma_2 = 0.4,
                .K = 8.0,
                .T = 10.0};
    s.plan.mu = 0.04;
    s.plan.sigma_p1 = 0.1;
    s.plan.sigma_p2 = 0.1;
    s.plan.p0 = 0.15;
    s.plan.delta = 0.005;
    s.plan.k = 0.06;
    s.plan.m = 25.0;
    s.plan.d = 55.0;
    s.plan.membership = Membership::linear(25.0, 55.0);
    s.plan.x0 = 0.0;
    s.prefs = {.alpha = 0.1, .gamma = 0.4, .bound = 5.0};
    return s;
}

}  // namespace dbpension

// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "dbpension/config.hpp"

namespace dbpension {
namespace {

ScenarioConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(Config, EmptyFileIsBenchmark) {
    const auto c = parse("# nothing\n\n");
    const auto b = benchmark();
    EXPECT_EQ(c.scenario.market.K, b.market.K);
    EXPECT_EQ(c.scenario.plan.p0, b.plan.p0);
    EXPECT_EQ(c.scenario.prefs.bound, b.prefs.bound);
    EXPECT_EQ(c.sim.grid.size(), 101u);
    EXPECT_EQ(c.sim.grid.back(), 10.0);
}

TEST(Config, OverridesAndComments) {
    const auto c = parse("prefs.alpha = 0.3  # tolerant\nsim.paths=1000\nmarket.T = 5\nsim.grid = 6\n");
    EXPECT_EQ(c.scenario.prefs.alpha, 0.3);
    EXPECT_EQ(c.sim.n_paths, 1000u);
    EXPECT_EQ(c.sim.grid.size(), 6u);
    EXPECT_EQ(c.sim.grid.back(), 5.0);
    EXPECT_EQ(c.alpha_grid().size(), 40u);
}

TEST(Config, ErrorsNameTheKey) {
    EXPECT_NE(error_of("market.volatility = 1\n").find("market.volatility"), std::string::npos);
    EXPECT_NE(error_of("prefs.alpha = 0.1\nprefs.alpha = 0.2\n").find("duplicate key 'prefs.alpha'"),
              std::string::npos);
    EXPECT_NE(error_of("prefs.gamma = abc\n").find("prefs.gamma"), std::string::npos);
    EXPECT_NE(error_of("sim.paths = -3\n").find("sim.paths"), std::string::npos);
    EXPECT_NE(error_of("just text\n").find("line 1"), std::string::npos);
    EXPECT_NE(error_of("output.format = xml\n").find("output.format"), std::string::npos);
}

TEST(Config, DomainViolationsBecomeConfigErrors) {
    EXPECT_FALSE(error_of("prefs.gamma = 1.5\n").empty());
    EXPECT_FALSE(error_of("plan.d = 20\n").empty());
    EXPECT_FALSE(error_of("market.sigma_r = 0\n").empty());
    EXPECT_FALSE(error_of("sim.grid = 1\n").empty());
    EXPECT_FALSE(error_of("plan.membership = table\n").empty());
}

TEST(Config, RetirementMembership) {
    const auto c = parse("plan.membership = retirement\n");
    EXPECT_EQ(c.scenario.plan.membership.atoms().size(), 1u);
}

TEST(Config, TableMembershipResolvesRelativePath) {
    const auto c = load_config(std::string(DBP_SOURCE_DIR) + "/configs/table_membership.cfg");
    EXPECT_DOUBLE_EQ(c.scenario.plan.membership.value(40), 0.42);
    EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, ShippedBenchmarkFile) {
    const auto c = load_config(std::string(DBP_SOURCE_DIR) + "/configs/benchmark.cfg");
    EXPECT_EQ(c.sim.seed, 20260101u);
    EXPECT_EQ(c.scenario.market.lambda_r, 0.15);
}

}  // namespace
}  // namespace dbpension

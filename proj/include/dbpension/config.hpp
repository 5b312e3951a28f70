// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Flat "section.key = value" scenario files. Keys not present keep their
// benchmark values; unknown keys are rejected.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "scenario.hpp"
#include "simulation.hpp"

namespace dbpension {

struct ScenarioConfig {
    Scenario scenario = benchmark();
    SimConfig sim;
    double alpha_min = 1e-3;
    double alpha_max = 1e2;
    int alpha_points = 40;
    QuadratureConfig quad;
    QuadratureConfig outer_quad = default_outer_quadrature();
    std::string out_dir = "out";
    std::string format = "csv";
    std::string membership_kind = "linear";
    std::string membership_table;

    ScenarioConfig() {
        sim.n_paths = 100000;
        sim.grid = SimConfig::uniform_grid(scenario.market.T, 101);
    }

    std::vector<double> alpha_grid() const { return log_grid(alpha_min, alpha_max, alpha_points); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out))
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

}  // namespace detail

/// Parses a scenario file. base_dir resolves a relative membership table path.
inline ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ScenarioConfig cfg;
    auto& mk = cfg.scenario.market;
    auto& pl = cfg.scenario.plan;
    auto& pr = cfg.scenario.prefs;
    std::size_t grid_points = 101;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto num = [](double& field) -> Setter {
        return [&field](const std::string& k, const std::string& v) { field = detail::parse_double(k, v); };
    };
    auto integer = [](auto& field) -> Setter {
        return [&field](const std::string& k, const std::string& v) {
            field = static_cast<std::remove_reference_t<decltype(field)>>(detail::parse_u64(k, v));
        };
    };
    const std::map<std::string, Setter> setters = {
        {"market.a", num(mk.a)},
        {"market.b", num(mk.b)},
        {"market.sigma_r", num(mk.sigma_r)},
        {"market.r0", num(mk.r0)},
        {"market.lambda_r", num(mk.lambda_r)},
        {"market.lambda_s", num(mk.lambda_s)},
        {"market.sigma_1", num(mk.sigma_1)},
        {"market.sigma_2", num(mk.sigma_2)},
        {"market.K", num(mk.K)},
        {"market.T", num(mk.T)},
        {"plan.mu", num(pl.mu)},
        {"plan.sigma_p1", num(pl.sigma_p1)},
        {"plan.sigma_p2", num(pl.sigma_p2)},
        {"plan.p0", num(pl.p0)},
        {"plan.delta", num(pl.delta)},
        {"plan.k", num(pl.k)},
        {"plan.m", num(pl.m)},
        {"plan.d", num(pl.d)},
        {"plan.x0", num(pl.x0)},
        {"plan.membership",
         [&](const std::string& k, const std::string& v) {
             if (v != "linear" && v != "table" && v != "retirement")
                 throw ConfigError("config: key '" + k + "' must be linear, table or retirement");
             cfg.membership_kind = v;
         }},
        {"plan.membership_table", [&](const std::string&, const std::string& v) { cfg.membership_table = v; }},
        {"prefs.alpha", num(pr.alpha)},
        {"prefs.gamma", num(pr.gamma)},
        {"prefs.B", num(pr.bound)},
        {"sim.paths", integer(cfg.sim.n_paths)},
        {"sim.grid",
         [&](const std::string& k, const std::string& v) {
             grid_points = detail::parse_u64(k, v);
         }},
        {"sim.seed", integer(cfg.sim.seed)},
        {"sim.euler_dt", num(cfg.sim.euler_dt)},
        {"frontier.alpha_min", num(cfg.alpha_min)},
        {"frontier.alpha_max", num(cfg.alpha_max)},
        {"frontier.alpha_points", integer(cfg.alpha_points)},
        {"quad.nodes", integer(cfg.quad.initial_nodes)},
        {"quad.max_nodes", integer(cfg.quad.max_nodes)},
        {"quad.rel_tol", num(cfg.quad.rel_tol)},
        {"quad.outer_nodes", integer(cfg.outer_quad.initial_nodes)},
        {"quad.outer_rel_tol", num(cfg.outer_quad.rel_tol)},
        {"output.dir", [&](const std::string&, const std::string& v) { cfg.out_dir = v; }},
        {"output.format",
         [&](const std::string& k, const std::string& v) {
             if (v != "csv" && v != "json") throw ConfigError("config: key '" + k + "' must be csv or json");
             cfg.format = v;
         }},
    };

    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("config: unknown key '" + key + "' at line " + std::to_string(lineno));
        if (!seen.insert(key).second) throw ConfigError("config: duplicate key '" + key + "'");
        if (val.empty()) throw ConfigError("config: key '" + key + "' has no value");
        it->second(key, val);
    }

    try {
        if (cfg.membership_kind == "table") {
            if (cfg.membership_table.empty())
                throw ConfigError("config: key 'plan.membership_table' required for a table membership");
            std::filesystem::path p(cfg.membership_table);
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            pl.membership = Membership::from_csv_file(p.string());
        } else if (cfg.membership_kind == "retirement") {
            pl.membership = Membership::retirement_mass(pl.m, pl.d);
        } else {
            pl.membership = Membership::linear(pl.m, pl.d);
        }
        cfg.sim.grid = SimConfig::uniform_grid(mk.T, grid_points);
        cfg.scenario.validate();
        cfg.sim.validate(mk.T);
        if (cfg.alpha_points < 1 || !(cfg.alpha_min > 0.0) || cfg.alpha_max < cfg.alpha_min)
            throw ConfigError("config: frontier alpha range invalid");
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    return parse_config(in, std::filesystem::path(path).parent_path());
}

}  // namespace dbpension

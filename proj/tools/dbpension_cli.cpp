// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Scenario runner: solve, simulate, frontier, probability and figures.
// Exit codes: 0 ok, 2 config or usage error, 3 infeasible scenario,
// 4 numerical failure, 5 I/O error.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbpension/dbpension.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dbpension;

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& what, const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw UsageError(what + ": expected a number, got '" + s + "'");
    return v;
}

// ---------------------------------------------------------------- output

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char b[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

// Writes files under one directory and keeps a manifest of their hashes.
class OutputDir {
public:
    OutputDir(fs::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    const fs::path& dir() const { return dir_; }

    void table(const std::string& stem, const Table& t) {
        std::ostringstream os;
        if (format_ == "json") {
            json arr = json::array();
            for (const auto& row : t.rows) {
                json rec = json::object();
                for (std::size_t c = 0; c < t.header.size(); ++c) {
                    const std::string& cell = row[c];
                    double v = 0.0;
                    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                    if (res.ec == std::errc() && res.ptr == cell.data() + cell.size() && std::isfinite(v))
                        rec[t.header[c]] = v;
                    else
                        rec[t.header[c]] = cell;
                }
                arr.push_back(rec);
            }
            os << arr.dump(1) << "\n";
            write(stem + ".json", os.str());
        } else {
            for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << t.header[c];
            os << "\n";
            for (const auto& row : t.rows) {
                for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
                os << "\n";
            }
            write(stem + ".csv", os.str());
        }
    }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("cannot open " + p.string() + " for writing");
        out << content;
        out.close();
        if (!out) throw IoError("failed writing " + p.string());
        manifest_.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }

    const json& manifest() const { return manifest_; }

private:
    fs::path dir_;
    std::string format_;
    json manifest_ = json::array();
};

// ---------------------------------------------------------------- options

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> grid;
    std::optional<std::string> format;
    std::string solution;
    std::vector<int> ids;
    std::string vary;
    std::string by;
};

ScenarioConfig load(const Options& o) {
    ScenarioConfig cfg;
    if (!o.config.empty()) cfg = load_config(o.config);
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.paths) cfg.sim.n_paths = *o.paths;
    if (o.grid) {
        try {
            cfg.sim.grid = SimConfig::uniform_grid(cfg.scenario.market.T, *o.grid);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("--grid: ") + e.what());
        }
    }
    if (o.out) cfg.out_dir = *o.out;
    if (o.format) cfg.format = *o.format;
    try {
        cfg.sim.validate(cfg.scenario.market.T);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("simulation settings: ") + e.what());
    }
    return cfg;
}

// Scenario parameters that sweeps may vary.
void set_param(Scenario& s, const std::string& key, double v) {
    auto& mk = s.market;
    auto& pl = s.plan;
    auto& pr = s.prefs;
    const std::map<std::string, double*> fields = {
        {"market.a", &mk.a},           {"market.b", &mk.b},
        {"market.sigma_r", &mk.sigma_r}, {"market.r0", &mk.r0},
        {"market.lambda_r", &mk.lambda_r}, {"market.lambda_s", &mk.lambda_s},
        {"market.sigma_1", &mk.sigma_1}, {"market.sigma_2", &mk.sigma_2},
        {"market.K", &mk.K},           {"plan.mu", &pl.mu},
        {"plan.sigma_p1", &pl.sigma_p1}, {"plan.sigma_p2", &pl.sigma_p2},
        {"plan.p0", &pl.p0},           {"plan.delta", &pl.delta},
        {"plan.k", &pl.k},             {"plan.x0", &pl.x0},
        {"prefs.alpha", &pr.alpha},    {"prefs.gamma", &pr.gamma},
        {"prefs.B", &pr.bound},
    };
    const auto it = fields.find(key);
    if (it == fields.end()) throw UsageError("cannot vary '" + key + "'");
    *it->second = v;
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(key + " = " + fmt(v) + ": " + e.what());
    }
}

struct Sweep {
    std::string key;
    std::vector<double> values;
};

// key=lo:hi:n (linear) or key=v1,v2,...
Sweep parse_sweep(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("sweep '" + spec + "': expected key=values");
    Sweep sw;
    sw.key = spec.substr(0, eq);
    const std::string rhs = spec.substr(eq + 1);
    if (rhs.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(rhs);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw UsageError("sweep '" + spec + "': expected lo:hi:n");
        const double lo = parse_number(sw.key, parts[0]);
        const double hi = parse_number(sw.key, parts[1]);
        const double n = parse_number(sw.key, parts[2]);
        if (n < 1 || n != std::floor(n)) throw UsageError("sweep '" + spec + "': n must be a positive integer");
        for (int i = 0; i < static_cast<int>(n); ++i)
            sw.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    } else {
        std::stringstream ss(rhs);
        for (std::string p; std::getline(ss, p, ',');) sw.values.push_back(parse_number(sw.key, p));
    }
    if (sw.values.empty()) throw UsageError("sweep '" + spec + "': no values");
    return sw;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

// ---------------------------------------------------------------- solution I/O

// +inf marks the lower-bound case; NaN (infeasible) is written as null.
json beta_json(double beta) {
    if (std::isnan(beta)) return nullptr;
    return std::isinf(beta) ? json("inf") : json(beta);
}

json envelope_json(const EnvelopeConstants& e) {
    return {{"regime", to_string(e.regime)}, {"k1", e.k1}, {"z1", e.z1}, {"z2", e.z2},
            {"k2", std::isnan(e.k2) ? json(nullptr) : json(e.k2)},
            {"z0", std::isnan(e.z0) ? json(nullptr) : json(e.z0)}, {"z0_iterations", e.z0_iterations}};
}

json solution_json(const DualSolution& sol) {
    const auto& mk = sol.market;
    json j = {
        {"case", to_string(sol.kind)},
        {"beta_star", beta_json(sol.beta_star)},
        {"y0", sol.y0},
        {"threshold", sol.threshold},
        {"iterations", sol.iterations},
        {"residual", sol.residual},
        {"envelope", envelope_json(sol.envelope)},
        {"moments",
         {{"m_tilde", sol.moments.m_tilde},
          {"v_tilde", sol.moments.v_tilde},
          {"kappa", sol.moments.kappa},
          {"m_total", sol.moments.m_total},
          {"v_total", sol.moments.v_total}}},
        {"prefs", {{"alpha", sol.prefs.alpha}, {"gamma", sol.prefs.gamma}, {"B", sol.prefs.bound}}},
        {"market",
         {{"a", mk.a}, {"b", mk.b}, {"sigma_r", mk.sigma_r}, {"r0", mk.r0}, {"lambda_r", mk.lambda_r},
          {"lambda_s", mk.lambda_s}, {"sigma_1", mk.sigma_1}, {"sigma_2", mk.sigma_2}, {"K", mk.K}, {"T", mk.T}}},
        {"plan_k", sol.plan_k},
    };
    return j;
}

double get_num(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError(std::string("solution: missing number '") + key + "'");
    return j.at(key).get<double>();
}

DualSolution load_solution(const std::string& path, const Scenario& s) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open solution file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("solution " + path + ": " + e.what());
    }
    try {
        DualSolution sol;
        sol.kind = case_from_string(j.at("case").get<std::string>());
        const auto& bj = j.at("beta_star");
        sol.beta_star = bj.is_null() ? std::nan("") : bj.is_string() ? kInf : bj.get<double>();
        sol.y0 = get_num(j, "y0");
        sol.threshold = get_num(j, "threshold");
        sol.iterations = j.at("iterations").get<int>();
        sol.residual = get_num(j, "residual");
        const auto& e = j.at("envelope");
        sol.envelope.regime = case_from_string(e.at("regime").get<std::string>());
        sol.envelope.k1 = get_num(e, "k1");
        sol.envelope.z1 = get_num(e, "z1");
        sol.envelope.z2 = get_num(e, "z2");
        sol.envelope.k2 = e.at("k2").is_null() ? std::nan("") : e.at("k2").get<double>();
        sol.envelope.z0 = e.at("z0").is_null() ? std::nan("") : e.at("z0").get<double>();
        sol.envelope.z0_iterations = e.at("z0_iterations").get<int>();
        const auto& m = j.at("moments");
        sol.moments = {get_num(m, "m_tilde"), get_num(m, "v_tilde"), get_num(m, "kappa"), get_num(m, "m_total"),
                       get_num(m, "v_total")};
        const auto& p = j.at("prefs");
        sol.prefs = {get_num(p, "alpha"), get_num(p, "gamma"), get_num(p, "B")};
        const auto& k = j.at("market");
        sol.market = {get_num(k, "a"),        get_num(k, "b"),        get_num(k, "sigma_r"), get_num(k, "r0"),
                      get_num(k, "lambda_r"), get_num(k, "lambda_s"), get_num(k, "sigma_1"), get_num(k, "sigma_2"),
                      get_num(k, "K"),        get_num(k, "T")};
        sol.plan_k = get_num(j, "plan_k");
        const auto& a = sol.market;
        const auto& b = s.market;
        const bool same = a.a == b.a && a.b == b.b && a.sigma_r == b.sigma_r && a.r0 == b.r0 &&
                          a.lambda_r == b.lambda_r && a.lambda_s == b.lambda_s && a.sigma_1 == b.sigma_1 &&
                          a.sigma_2 == b.sigma_2 && a.K == b.K && a.T == b.T && sol.plan_k == s.plan.k &&
                          sol.prefs.alpha == s.prefs.alpha && sol.prefs.gamma == s.prefs.gamma &&
                          sol.prefs.bound == s.prefs.bound;
        if (!same) throw ConfigError("solution " + path + " was computed for different parameters than the config");
        return sol;
    } catch (const json::exception& e) {
        throw ConfigError("solution " + path + ": " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError("solution " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------- runs

struct Run {
    ScenarioConfig cfg;
    OutputDir out;
    json report = json::object();
};

DualSolution solve_scenario(const ScenarioConfig& cfg, const Scenario& s) {
    const double y0 = s.y0(cfg.quad);
    return solve_multiplier(s.prefs, s.market, s.plan.k, y0);
}

void summarize(json& report, const DualSolution& sol) {
    report["case"] = to_string(sol.kind);
    report["beta_star"] = beta_json(sol.beta_star);
    report["y0"] = sol.y0;
    report["threshold"] = sol.threshold;
    if (!sol.feasible()) return;
    const auto ru = risk_and_utility(sol);
    const auto pr = region_probabilities(sol);
    report["risk"] = ru.risk;
    report["utility"] = ru.utility;
    report["p_over"] = pr.p_over;
}

Table wealth_table(const WealthStatistics& st, bool allocations) {
    Table t;
    t.header = {"t"};
    std::vector<std::size_t> series = {kXStar, kYStar, kRhoY, kFund, kAl};
    if (allocations)
        for (std::size_t k : {kU0, kUB, kUS, kPi1, kPi2}) series.push_back(k);
    for (std::size_t k : series) {
        t.header.push_back(std::string(series_name(k)) + "_mean");
        t.header.push_back(std::string(series_name(k)) + "_se");
    }
    for (double q : st.quantile_levels) t.header.push_back("x_star_q" + fmt(q));
    for (std::size_t g = 0; g < st.grid.size(); ++g) {
        std::vector<std::string> row = {fmt(st.grid[g])};
        for (std::size_t k : series) {
            row.push_back(fmt(st.series[k][g].mean));
            row.push_back(fmt(st.series[k][g].se));
        }
        for (std::size_t l = 0; l < st.quantile_levels.size(); ++l) row.push_back(fmt(st.x_quantiles[l][g]));
        t.add(row);
    }
    return t;
}

Table curve(const WealthStatistics& st, Series k) {
    Table t;
    t.header = {"t", "mean", "se"};
    for (std::size_t g = 0; g < st.grid.size(); ++g)
        t.add({fmt(st.grid[g]), fmt(st.series[k][g].mean), fmt(st.series[k][g].se)});
    return t;
}

WealthStatistics simulate_scenario(const ScenarioConfig& cfg, const Scenario& s, const DualSolution& sol,
                                   bool allocations) {
    sol.require_feasible();
    PathSampler sampler(s.market, s.plan, cfg.sim.grid, cfg.sim.seed, cfg.sim.n_paths);
    const ReplicationProfile profile(s.plan, s.market, cfg.sim.grid);
    WealthOptions opt;
    opt.allocations = allocations;
    return wealth_statistics(sampler, sol, s.plan, profile, opt);
}

Table frontier_table(const std::vector<FrontierPoint>& pts) {
    Table t;
    t.header = {"alpha", "beta_star", "case", "risk", "utility", "p_over", "error"};
    for (const auto& p : pts)
        t.add({fmt(p.alpha), fmt(p.beta_star), to_string(p.kind), fmt(p.risk), fmt(p.utility), fmt(p.p_over),
               p.error.empty() ? "" : "\"" + p.error + "\""});
    return t;
}

std::vector<FrontierPoint> frontier_for(const ScenarioConfig& cfg, const Scenario& s) {
    return efficient_frontier(s.prefs, s.market, s.plan.k, s.y0(cfg.quad), cfg.alpha_grid());
}

std::string tag(const std::string& key, double v) {
    std::string k = key.substr(key.find('.') + 1);
    return k + "_" + fmt(v);
}

// p_over along one parameter, optionally for several values of a second one.
Table probability_table(const ScenarioConfig& cfg, const Sweep& x, const std::optional<Sweep>& by) {
    Table t;
    if (by) t.header.push_back(by->key);
    for (const auto& h : {x.key, std::string("p_over"), std::string("p_under"), std::string("case"),
                          std::string("beta_star")})
        t.header.push_back(h);
    const std::vector<double> outer = by ? by->values : std::vector<double>{0.0};
    for (double bv : outer) {
        Scenario base = cfg.scenario;
        if (by) set_param(base, by->key, bv);
        // Y0 depends only on market and plan; prefs sweeps can reuse it.
        const bool prefs_only = x.key.rfind("prefs.", 0) == 0;
        const double y0_base = prefs_only ? base.y0(cfg.quad) : 0.0;
        for (double xv : x.values) {
            Scenario s = base;
            set_param(s, x.key, xv);
            const double y0 = prefs_only ? y0_base : s.y0(cfg.quad);
            const auto sol = solve_multiplier(s.prefs, s.market, s.plan.k, y0);
            std::vector<std::string> row;
            if (by) row.push_back(fmt(bv));
            row.push_back(fmt(xv));
            if (sol.feasible()) {
                const auto pr = region_probabilities(sol);
                row.insert(row.end(), {fmt(pr.p_over), fmt(pr.p_under)});
            } else {
                row.insert(row.end(), {"nan", "nan"});
            }
            row.insert(row.end(), {to_string(sol.kind), fmt(sol.beta_star)});
            t.add(row);
        }
    }
    return t;
}

// ---------------------------------------------------------------- figures

struct FigureSpec {
    int id;
    std::string kind;  // wealth, portfolio, frontier, probability
    std::string title;
    std::string key;
    std::vector<double> values;
    std::string key2;
    std::vector<double> values2;
};

const std::vector<FigureSpec>& figure_specs() {
    static const std::vector<FigureSpec> specs = {
        {2, "wealth", "mean optimal surplus, effect of X0", "plan.x0", {3, 0, -2}, "", {}},
        {3, "wealth", "mean optimal surplus, effect of alpha", "prefs.alpha", {0.05, 0.1, 0.2}, "", {}},
        {4, "wealth", "mean optimal surplus, effect of gamma", "prefs.gamma", {0.3, 0.4, 0.5}, "", {}},
        {5, "wealth", "mean optimal surplus, effect of B", "prefs.B", {3, 5, 10}, "", {}},
        {6, "portfolio", "holdings, benchmark", "", {}, "", {}},
        {7, "portfolio", "holdings, X0 = -2", "plan.x0", {-2}, "", {}},
        {8, "portfolio", "holdings, X0 = 3", "plan.x0", {3}, "", {}},
        {9, "portfolio", "holdings, alpha = 0.2", "prefs.alpha", {0.2}, "", {}},
        {10, "portfolio", "holdings, gamma = 0.2", "prefs.gamma", {0.2}, "", {}},
        {11, "portfolio", "holdings, B = 10", "prefs.B", {10}, "", {}},
        {12, "portfolio", "holdings, mu = 0.06", "plan.mu", {0.06}, "", {}},
        {13, "portfolio", "holdings, delta = 0.001", "plan.delta", {0.001}, "", {}},
        {14, "portfolio", "holdings, k = 0.09", "plan.k", {0.09}, "", {}},
        {15, "portfolio", "holdings, sigma_r = 0.01", "market.sigma_r", {0.01}, "", {}},
        {16, "frontier", "efficient frontier, effect of X0", "plan.x0", {3, 0, -2}, "", {}},
        {17, "frontier", "efficient frontier, effect of gamma", "prefs.gamma", {0.3, 0.4, 0.5}, "", {}},
        {18, "frontier", "efficient frontier, effect of B", "prefs.B", {3, 5, 10}, "", {}},
        {19, "frontier", "efficient frontier, effect of delta", "plan.delta", {0.001, 0.005, 0.01}, "", {}},
        {20, "frontier", "efficient frontier, effect of mu", "plan.mu", {0.02, 0.04, 0.06}, "", {}},
        {21, "frontier", "efficient frontier, effect of k", "plan.k", {0.03, 0.06, 0.09}, "", {}},
        {22, "frontier", "efficient frontier, effect of sigma_r", "market.sigma_r", {0.01, 0.02, 0.03}, "", {}},
        {23, "probability", "overfunded probability vs alpha for several gamma", "prefs.gamma", {0.3, 0.4, 0.5},
         "prefs.alpha", {}},
        {24, "probability", "overfunded probability vs X0 and vs B", "plan.x0", linspace(-2, 3, 21), "prefs.B",
         linspace(1, 10, 19)},
        {25, "probability", "overfunded probability vs delta and vs mu", "plan.delta", linspace(0, 0.02, 21),
         "plan.mu", linspace(0.01, 0.07, 19)},
        {26, "probability", "overfunded probability vs k and vs sigma_r", "plan.k", linspace(0.02, 0.1, 17),
         "market.sigma_r", linspace(0.005, 0.04, 15)},
    };
    return specs;
}

std::string fig_stem(int id) {
    char b[16];
    std::snprintf(b, sizeof b, "fig%02d", id);
    return b;
}

void run_figure(Run& run, const FigureSpec& f, json& index) {
    const auto& cfg = run.cfg;
    const std::string stem = fig_stem(f.id);
    json files = json::array();
    auto emit = [&](const std::string& name, const Table& t) {
        run.out.table(name, t);
        files.push_back(name);
    };
    if (f.kind == "wealth" || f.kind == "portfolio") {
        const std::vector<double> values = f.values.empty() ? std::vector<double>{0.0} : f.values;
        for (double v : values) {
            Scenario s = cfg.scenario;
            if (!f.key.empty()) set_param(s, f.key, v);
            const auto sol = solve_scenario(cfg, s);
            const auto st = simulate_scenario(cfg, s, sol, f.kind == "portfolio");
            if (f.kind == "wealth") {
                emit(stem + "_" + tag(f.key, v), curve(st, kXStar));
            } else {
                emit(stem + "_cash", curve(st, kU0));
                emit(stem + "_bond", curve(st, kUB));
                emit(stem + "_stock", curve(st, kUS));
                emit(stem + "_fund", curve(st, kFund));
            }
        }
    } else if (f.kind == "frontier") {
        for (double v : f.values) {
            Scenario s = cfg.scenario;
            set_param(s, f.key, v);
            emit(stem + "_" + tag(f.key, v), frontier_table(frontier_for(cfg, s)));
        }
    } else {
        if (f.values2.empty()) {
            // One curve over alpha per value of the first parameter.
            Sweep x{f.key2, cfg.alpha_grid()};
            for (double v : f.values) {
                Sweep one{f.key, {v}};
                emit(stem + "_" + tag(f.key, v), probability_table(cfg, x, one));
            }
        } else {
            emit(stem + "_" + f.key.substr(f.key.find('.') + 1), probability_table(cfg, {f.key, f.values}, {}));
            emit(stem + "_" + f.key2.substr(f.key2.find('.') + 1),
                 probability_table(cfg, {f.key2, f.values2}, {}));
        }
    }
    index.push_back({{"id", f.id}, {"title", f.title}, {"files", files}});
}

// ---------------------------------------------------------------- commands

void cmd_solve(Run& run) {
    const auto& s = run.cfg.scenario;
    const auto sol = solve_scenario(run.cfg, s);
    summarize(run.report, sol);
    json j = solution_json(sol);
    if (sol.feasible()) {
        j["risk"] = run.report["risk"];
        j["utility"] = run.report["utility"];
        j["p_over"] = run.report["p_over"];
    }
    run.out.write("solution.json", j.dump(2) + "\n");
    std::cout << "case      " << to_string(sol.kind) << "\n"
              << "beta_star " << fmt(sol.beta_star) << "\n"
              << "y0        " << fmt(sol.y0) << "\n"
              << "threshold " << fmt(sol.threshold) << "\n";
    if (sol.feasible()) {
        std::cout << "risk      " << fmt(run.report["risk"].get<double>()) << "\n"
                  << "utility   " << fmt(run.report["utility"].get<double>()) << "\n"
                  << "p_over    " << fmt(run.report["p_over"].get<double>()) << "\n";
    }
    sol.require_feasible();
}

void cmd_simulate(Run& run, const Options& o) {
    const auto& s = run.cfg.scenario;
    const DualSolution sol = o.solution.empty() ? solve_scenario(run.cfg, s) : load_solution(o.solution, s);
    summarize(run.report, sol);
    const auto st = simulate_scenario(run.cfg, s, sol, true);
    run.out.table("wealth", wealth_table(st, true));
    std::cout << "case " << to_string(sol.kind) << ", " << run.cfg.sim.n_paths << " paths, mean X*(T) "
              << fmt(st.series[kXStar].back().mean) << " (se " << fmt(st.series[kXStar].back().se) << ")\n";
}

void cmd_frontier(Run& run, const Options& o) {
    const auto& s = run.cfg.scenario;
    if (o.vary.empty()) {
        const auto pts = frontier_for(run.cfg, s);
        run.out.table("frontier", frontier_table(pts));
        std::cout << pts.size() << " frontier points\n";
        return;
    }
    const Sweep sw = parse_sweep(o.vary);
    for (double v : sw.values) {
        Scenario sv = s;
        set_param(sv, sw.key, v);
        run.out.table("frontier_" + tag(sw.key, v), frontier_table(frontier_for(run.cfg, sv)));
    }
    std::cout << sw.values.size() << " frontiers\n";
}

void cmd_probability(Run& run, const Options& o) {
    const Sweep x = o.vary.empty() ? Sweep{"prefs.alpha", run.cfg.alpha_grid()} : parse_sweep(o.vary);
    std::optional<Sweep> by;
    if (!o.by.empty()) by = parse_sweep(o.by);
    run.out.table("probability", probability_table(run.cfg, x, by));
    std::cout << "probability sweep over " << x.key << (by ? " by " + by->key : "") << "\n";
}

void cmd_figures(Run& run, const Options& o) {
    const auto& specs = figure_specs();
    std::vector<int> ids = o.ids;
    if (ids.empty())
        for (const auto& f : specs) ids.push_back(f.id);
    for (int id : ids) {
        bool known = false;
        for (const auto& f : specs) known = known || f.id == id;
        if (!known)
            throw UsageError("unknown figure id " + std::to_string(id) + "; valid ids are " +
                             std::to_string(specs.front().id) + " to " + std::to_string(specs.back().id));
    }
    json index = json::array();
    for (int id : ids) {
        for (const auto& f : specs) {
            if (f.id != id) continue;
            std::cerr << "figure " << id << ": " << f.title << "\n";
            run_figure(run, f, index);
        }
    }
    run.report["figures"] = index;
}

int report_error(const char* kind, const std::string& msg, int code) {
    std::cerr << "error (" << kind << "): " << msg << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal management of a defined-benefit pension fund: solve, simulate and sweep scenarios."};
    app.require_subcommand(1, 1);
    Options o;
    std::string format;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario file (defaults to the benchmark)");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--paths", o.paths, "number of Monte Carlo paths")->check(CLI::PositiveNumber);
        sub->add_option("--grid", o.grid, "number of time grid points on [0, T]")->check(CLI::Range(2, 100000));
        sub->add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto* solve = app.add_subcommand("solve", "solve the dual problem and report the optimal case");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo statistics of the optimal policy");
    auto* frontier = app.add_subcommand("frontier", "efficient frontier over the alpha grid");
    auto* probability = app.add_subcommand("probability", "overfunded probability sweeps");
    auto* figures = app.add_subcommand("figures", "data for the numerical-study figures (ids 2 to 26)");
    for (auto* sub : {solve, simulate, frontier, probability, figures}) common(sub);
    simulate->add_option("--solution", o.solution, "reuse a solution.json written by solve");
    frontier->add_option("--vary", o.vary, "one frontier per value: key=v1,v2 or key=lo:hi:n");
    probability->add_option("--vary", o.vary, "swept parameter: key=v1,v2 or key=lo:hi:n (default alpha grid)");
    probability->add_option("--by", o.by, "one curve per value of this parameter");
    figures->add_option("--ids", o.ids, "figure ids (default: all)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        ScenarioConfig cfg = load(o);
        for (const auto& w : cfg.scenario.market.warnings()) std::cerr << "warning: " << w << "\n";
        Run run{cfg, OutputDir(cfg.out_dir, cfg.format)};
        CLI::App* used = app.get_subcommands().front();
        const std::string name = used->get_name();
        run.report["command"] = name;
        run.report["config"] = o.config.empty() ? "benchmark" : o.config;
        run.report["seed"] = cfg.sim.seed;
        run.report["paths"] = cfg.sim.n_paths;
        run.report["grid_points"] = cfg.sim.grid.size();
        run.report["format"] = cfg.format;
        int code = 0;
        try {
            if (name == "solve") cmd_solve(run);
            if (name == "simulate") cmd_simulate(run, o);
            if (name == "frontier") cmd_frontier(run, o);
            if (name == "probability") cmd_probability(run, o);
            if (name == "figures") cmd_figures(run, o);
        } catch (const InfeasibleError& e) {
            std::cerr << "infeasible: initial auxiliary wealth " << fmt(e.y0()) << " is below the threshold "
                      << fmt(e.threshold()) << "\n";
            run.report["error"] = e.what();
            code = 3;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        run.report["wall_clock_seconds"] = secs;
        run.report["files"] = run.out.manifest();
        const fs::path rp = run.out.dir() / "report.json";
        std::ofstream rout(rp);
        if (!rout) throw IoError("cannot write " + rp.string());
        rout << run.report.dump(2) << "\n";
        if (!rout) throw IoError("failed writing " + rp.string());
        return code;
    } catch (const ConfigError& e) {
        return report_error("config", e.what(), 2);
    } catch (const UsageError& e) {
        return report_error("usage", e.what(), 2);
    } catch (const DomainError& e) {
        return report_error("domain", e.what(), 2);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: threshold " << fmt(e.threshold()) << "\n";
        return 3;
    } catch (const NumericalError& e) {
        return report_error("numerical", e.what(), 4);
    } catch (const IoError& e) {
        return report_error("io", e.what(), 5);
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), 4);
    }
}

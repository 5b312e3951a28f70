// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Exact joint sampling of (r, int r, W_r, W_s, P, rho) on a time grid and the
// Monte Carlo statistics built on it.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dual.hpp"
#include "errors.hpp"
#include "liability.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "replication.hpp"

namespace dbpension {

struct SimConfig {
    std::size_t n_paths = 100000;
    std::vector<double> grid;
    std::uint64_t seed = 20260101;
    double euler_dt = 0.01;

    static std::vector<double> uniform_grid(double T, std::size_t points) {
        if (points < 2) throw DomainError("grid: need at least two points");
        std::vector<double> g(points);
        for (std::size_t i = 0; i < points; ++i) g[i] = T * static_cast<double>(i) / static_cast<double>(points - 1);
        g.back() = T;
        return g;
    }

    void validate(double T) const {
        if (n_paths < 1) throw DomainError("sim: n_paths must be >= 1");
        validate_grid(grid, T);
        if (!(euler_dt > 0.0)) throw DomainError("sim: euler_dt must be > 0");
    }

    static void validate_grid(const std::vector<double>& grid, double T) {
        if (grid.size() < 2 || grid.front() != 0.0 || std::abs(grid.back() - T) > 1e-12)
            throw DomainError("sim: grid must start at 0 and end at T");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1])) throw DomainError("sim: grid must be strictly increasing");
    }
};

struct PathPoint {
    double r = 0.0;
    double int_r = 0.0;
    double w_r = 0.0;
    double w_s = 0.0;
    double p = 0.0;
    double rho = 1.0;
};

/// 64-bit FNV-1a over the byte images of the parameters.
inline std::uint64_t params_fingerprint(const MarketParams& mk, const PlanParams& plan) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (double v : {mk.a, mk.b, mk.sigma_r, mk.r0, mk.lambda_r, mk.lambda_s, mk.sigma_1, mk.sigma_2, mk.K, mk.T,
                     plan.mu, plan.sigma_p1, plan.sigma_p2, plan.p0, plan.k})
        mix(v);
    return h;
}

/// Streams exactly sampled paths. Path i depends only on (seed, i, grid, params).
class PathSampler {
public:
    PathSampler(const MarketParams& mk, const PlanParams& plan, std::vector<double> grid, std::uint64_t seed,
                std::size_t n_paths)
        : mk_(mk), grid_(std::move(grid)), seed_(seed), n_paths_(n_paths) {
        SimConfig::validate_grid(grid_, mk.T);
        const double lam = mk.lambda_sq();
        const double sp2 = plan.sigma_p1 * plan.sigma_p1 + plan.sigma_p2 * plan.sigma_p2;
        p0_ = plan.p0;
        sp1_ = plan.sigma_p1;
        sps_ = plan.sigma_p2;
        for (std::size_t i = 1; i < grid_.size(); ++i) {
            const double tau = grid_[i] - grid_[i - 1];
            const GaussianLaw3 law = ou_step(mk, tau, mk.b);
            Step s;
            s.tau = tau;
            s.e = std::exp(-mk.a * tau);
            s.A = decay_integral(mk.a, tau);
            s.L = law.cholesky();
            s.sqrt_tau = std::sqrt(tau);
            s.rho_drift = (plan.k - 0.5 * lam) * tau;
            s.p_drift = (plan.mu - 0.5 * sp2) * tau;
            steps_.push_back(s);
        }
        fingerprint_ = params_fingerprint(mk, plan);
    }

    std::size_t n_paths() const { return n_paths_; }
    const std::vector<double>& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    void fill(std::size_t path, std::span<PathPoint> out) const {
        NormalStream z(seed_, path);
        PathPoint cur;
        cur.r = mk_.r0;
        cur.p = p0_;
        double log_rho = 0.0;
        double log_p = std::log(p0_);
        out[0] = cur;
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            const Step& s = steps_[i];
            const double z0 = z.next();
            const double z1 = z.next();
            const double z2 = z.next();
            const double z3 = z.next();
            const double dr = s.L[0][0] * z0;
            const double di = s.L[1][0] * z0 + s.L[1][1] * z1;
            const double dw = s.L[2][0] * z0 + s.L[2][1] * z1 + s.L[2][2] * z2;
            const double dws = s.sqrt_tau * z3;
            const double dev = cur.r - mk_.b;
            const double I = mk_.b * s.tau + dev * s.A + di;
            cur.r = mk_.b + dev * s.e + dr;
            cur.int_r += I;
            cur.w_r += dw;
            cur.w_s += dws;
            log_rho += -I + s.rho_drift - mk_.lambda_r * dw - mk_.lambda_s * dws;
            log_p += s.p_drift + sp1_ * dw + sps_ * dws;
            cur.rho = std::exp(log_rho);
            cur.p = std::exp(log_p);
            out[i + 1] = cur;
        }
    }

private:
    struct Step {
        double tau, e, A, sqrt_tau, rho_drift, p_drift;
        std::array<std::array<double, 3>, 3> L;
    };

    MarketParams mk_;
    std::vector<double> grid_;
    std::uint64_t seed_;
    std::size_t n_paths_;
    double p0_ = 0.0;
    double sp1_ = 0.0;
    double sps_ = 0.0;
    std::vector<Step> steps_;
    std::uint64_t fingerprint_ = 0;
};

/// Materialized path set, row-major by path.
struct MarketPathSet {
    std::vector<double> times;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
    std::vector<PathPoint> data;

    std::size_t n_paths() const { return paths; }
    const std::vector<double>& grid() const { return times; }
    std::span<const PathPoint> path(std::size_t i) const { return {data.data() + i * times.size(), times.size()}; }
    void fill(std::size_t i, std::span<PathPoint> out) const {
        const auto src = path(i);
        std::copy(src.begin(), src.end(), out.begin());
    }
};

inline MarketPathSet sample_paths(const SimConfig& cfg, const MarketParams& mk, const PlanParams& plan) {
    cfg.validate(mk.T);
    PathSampler sampler(mk, plan, cfg.grid, cfg.seed, cfg.n_paths);
    MarketPathSet set;
    set.times = cfg.grid;
    set.paths = cfg.n_paths;
    set.seed = cfg.seed;
    set.fingerprint = sampler.fingerprint();
    set.data.resize(cfg.n_paths * cfg.grid.size());
    const std::size_t block = 1024;
    const std::size_t n_blocks = (cfg.n_paths + block - 1) / block;
    parallel_blocks(n_blocks, [&](std::size_t b) {
        const std::size_t end = std::min(cfg.n_paths, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i)
            sampler.fill(i, {set.data.data() + i * cfg.grid.size(), cfg.grid.size()});
    });
    return set;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Sample mean and standard error of several per-path series on a grid,
/// reduced in fixed block order for reproducibility.
class GridStatistics {
public:
    GridStatistics(std::size_t series, std::size_t points) : series_(series), points_(points) {}

    std::size_t series() const { return series_; }
    std::size_t points() const { return points_; }

    /// Streams n paths in blocks; record(path, sink) writes values through
    /// sink(series, point, value). NaN values are skipped.
    template <class Record>
    void run(std::size_t n, Record&& record, std::size_t block = 2048) {
        const std::size_t cells = series_ * points_;
        // Shift every cell by path 0 so sums of squares keep their precision.
        shift_.assign(cells, 0.0);
        record(0, [&](std::size_t k, std::size_t g, double v) {
            if (std::isfinite(v)) shift_[k * points_ + g] = v;
        });
        const std::size_t n_blocks = (n + block - 1) / block;
        std::vector<std::vector<double>> s(n_blocks), q(n_blocks), c(n_blocks);
        parallel_blocks(n_blocks, [&](std::size_t b) {
            s[b].assign(cells, 0.0);
            q[b].assign(cells, 0.0);
            c[b].assign(cells, 0.0);
            const std::size_t end = std::min(n, (b + 1) * block);
            for (std::size_t i = b * block; i < end; ++i) {
                record(i, [&](std::size_t k, std::size_t g, double v) {
                    if (!std::isfinite(v)) return;
                    const std::size_t cell = k * points_ + g;
                    const double d = v - shift_[cell];
                    s[b][cell] += d;
                    q[b][cell] += d * d;
                    c[b][cell] += 1.0;
                });
            }
        });
        sum_.assign(cells, 0.0);
        sq_.assign(cells, 0.0);
        count_.assign(cells, 0.0);
        std::vector<double> tmp(n_blocks);
        for (std::size_t cell = 0; cell < cells; ++cell) {
            for (std::size_t b = 0; b < n_blocks; ++b) tmp[b] = s[b][cell];
            sum_[cell] = pairwise_sum(tmp.data(), n_blocks);
            for (std::size_t b = 0; b < n_blocks; ++b) tmp[b] = q[b][cell];
            sq_[cell] = pairwise_sum(tmp.data(), n_blocks);
            for (std::size_t b = 0; b < n_blocks; ++b) tmp[b] = c[b][cell];
            count_[cell] = pairwise_sum(tmp.data(), n_blocks);
        }
    }

    MeanSe at(std::size_t k, std::size_t g) const {
        const std::size_t cell = k * points_ + g;
        const double n = count_[cell];
        if (n < 1.0) return {std::nan(""), std::nan("")};
        const double m = sum_[cell] / n;
        double var = n > 1.0 ? (sq_[cell] - sum_[cell] * m) / (n - 1.0) : 0.0;
        if (var < 0.0) var = 0.0;
        return {shift_[cell] + m, std::sqrt(var / n)};
    }

private:
    std::size_t series_;
    std::size_t points_;
    std::vector<double> shift_, sum_, sq_, count_;
};

enum Series : std::size_t { kXStar = 0, kYStar, kRhoY, kFund, kAl, kU0, kUB, kUS, kPi1, kPi2, kSeriesCount };

inline const char* series_name(std::size_t k) {
    static const char* names[] = {"x_star", "y_star", "rho_y", "fund", "al", "u0", "u_b", "u_s", "pi1", "pi2"};
    return names[k];
}

struct WealthStatistics {
    std::vector<double> grid;
    std::size_t n_paths = 0;
    std::vector<std::vector<MeanSe>> series;  // [Series][grid]
    std::vector<double> quantile_levels;
    std::vector<std::vector<double>> x_quantiles;  // [level][grid]
    double y0 = 0.0;

    const std::vector<MeanSe>& operator[](Series s) const { return series[s]; }
};

struct WealthOptions {
    bool allocations = true;
    std::vector<double> quantiles = {0.05, 0.5, 0.95};
};

/// Monte Carlo statistics of the optimal policy along sampled paths. The
/// profile must be tabulated on the source's grid.
template <class Source>
WealthStatistics wealth_statistics(const Source& src, const DualSolution& sol, const PlanParams& plan,
                                   const ReplicationProfile& profile, const WealthOptions& opt = {}) {
    sol.require_feasible();
    const auto& grid = src.grid();
    if (profile.times() != grid) throw DomainError("wealth_statistics: profile grid differs from path grid");
    const std::size_t G = grid.size();
    const std::size_t n = src.n_paths();
    const double T = sol.market.T;
    GridStatistics stats(kSeriesCount, G);
    const bool keep = !opt.quantiles.empty();
    std::vector<float> xs(keep ? n * G : 0);
    stats.run(n, [&](std::size_t i, auto&& sink) {
        std::vector<PathPoint> path(G);
        src.fill(i, path);
        for (std::size_t g = 0; g < G; ++g) {
            const auto& pt = path[g];
            const bool strat = opt.allocations && grid[g] < T;
            const auto q = profile(g, pt.r);
            const PolicyState s = evaluate_policy(sol, plan, q, grid[g], pt.rho, pt.r, pt.p, strat);
            const double x = grid[g] < T ? s.x_star : optimal_terminal_wealth(sol, pt.rho);
            sink(kXStar, g, x);
            sink(kYStar, g, s.y_star);
            sink(kRhoY, g, pt.rho * s.y_star);
            sink(kFund, g, s.fund);
            sink(kAl, g, s.al);
            if (strat) {
                sink(kU0, g, s.u0);
                sink(kUB, g, s.u_b);
                sink(kUS, g, s.u_s);
                sink(kPi1, g, s.pi1);
                sink(kPi2, g, s.pi2);
            }
            if (keep) xs[i * G + g] = static_cast<float>(x);
        }
    });
    WealthStatistics out;
    out.grid = grid;
    out.n_paths = n;
    out.y0 = sol.y0;
    out.series.resize(kSeriesCount);
    for (std::size_t k = 0; k < kSeriesCount; ++k)
        for (std::size_t g = 0; g < G; ++g) out.series[k].push_back(stats.at(k, g));
    if (keep) {
        out.quantile_levels = opt.quantiles;
        out.x_quantiles.assign(opt.quantiles.size(), std::vector<double>(G));
        std::vector<float> col(n);
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t i = 0; i < n; ++i) col[i] = xs[i * G + g];
            std::sort(col.begin(), col.end());
            for (std::size_t l = 0; l < opt.quantiles.size(); ++l) {
                const double pos = opt.quantiles[l] * static_cast<double>(n - 1);
                const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
                const std::size_t hi = std::min(n - 1, lo + 1);
                const double w = pos - static_cast<double>(lo);
                out.x_quantiles[l][g] = (1.0 - w) * col[lo] + w * col[hi];
            }
        }
    }
    return out;
}

struct ReplicationErrorConfig {
    std::size_t n_paths = 1000;
    std::uint64_t seed = 7;
    double base_dt = 0.01;  // coarsest step
    int halvings = 3;
};

struct ReplicationErrorResult {
    std::vector<double> dts;
    std::vector<double> rmse;
    std::vector<double> rmse_se;
    std::vector<double> min_terminal;
    std::vector<double> ratios;  // rmse[i+1] / rmse[i]
    std::size_t n_paths = 0;
};

/// Euler integration of the surplus dynamics
///   dX = (r-k)X dt + lambda_r P f2 dt + c P f0 dt + v1 (lambda_r dt + dW_r) + v2 (lambda_s dt + dW_s),
///   v1 = u_B h(K) + u_S sigma_1 - P f2 - sigma_p1 P f0,  v2 = u_S sigma_2 - sigma_p2 P f0,
/// under the optimal allocation, on the exact paths, compared with X*(T).
/// All step sizes share the finest path; coarse increments are sums of fine ones.
inline ReplicationErrorResult strategy_replication_error(const DualSolution& sol, const PlanParams& plan,
                                                         const ReplicationErrorConfig& cfg,
                                                         const ReplicationProfile* prebuilt = nullptr) {
    sol.require_feasible();
    const auto& mk = sol.market;
    const double fine_dt = cfg.base_dt / std::ldexp(1.0, cfg.halvings);
    const double steps_d = mk.T / fine_dt;
    const std::size_t steps = static_cast<std::size_t>(std::llround(steps_d));
    if (std::abs(steps_d - static_cast<double>(steps)) > 1e-9 * steps_d)
        throw DomainError("replication error: step must divide the horizon");
    const auto grid = SimConfig::uniform_grid(mk.T, steps + 1);
    std::unique_ptr<ReplicationProfile> own;
    if (!prebuilt) own = std::make_unique<ReplicationProfile>(plan, mk, grid);
    const ReplicationProfile& profile = prebuilt ? *prebuilt : *own;
    if (profile.times().size() != grid.size()) throw DomainError("replication error: profile grid mismatch");
    PathSampler sampler(mk, plan, grid, cfg.seed, cfg.n_paths);
    const std::size_t levels = static_cast<std::size_t>(cfg.halvings) + 1;
    const double h = bond_volatility(mk, mk.K);
    const double c = flow_weight(plan, mk);

    std::vector<std::vector<double>> err(levels, std::vector<double>(cfg.n_paths));
    std::vector<std::vector<double>> xt(levels, std::vector<double>(cfg.n_paths));
    const std::size_t block = 16;
    const std::size_t n_blocks = (cfg.n_paths + block - 1) / block;
    parallel_blocks(n_blocks, [&](std::size_t b) {
        std::vector<PathPoint> path(grid.size());
        std::vector<double> drift(steps), v1(steps), v2(steps);
        const std::size_t end = std::min(cfg.n_paths, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) {
            sampler.fill(i, path);
            for (std::size_t j = 0; j < steps; ++j) {
                const auto& pt = path[j];
                const auto q = profile(j, pt.r);
                const PolicyState s = evaluate_policy(sol, plan, q, grid[j], pt.rho, pt.r, pt.p);
                v1[j] = s.u_b * h + s.u_s * mk.sigma_1 - pt.p * q.f2 - plan.sigma_p1 * pt.p * q.f0;
                v2[j] = s.u_s * mk.sigma_2 - plan.sigma_p2 * pt.p * q.f0;
                drift[j] = mk.lambda_r * pt.p * q.f2 + c * pt.p * q.f0 + v1[j] * mk.lambda_r + v2[j] * mk.lambda_s;
            }
            const double target = optimal_terminal_wealth(sol, path[steps].rho);
            for (std::size_t l = 0; l < levels; ++l) {
                const std::size_t stride = std::size_t{1} << (levels - 1 - l);
                double x = plan.x0;
                for (std::size_t j = 0; j < steps; j += stride) {
                    const auto& a = path[j];
                    const auto& z = path[j + stride];
                    const double dt = grid[j + stride] - grid[j];
                    x += ((a.r - plan.k) * x + drift[j]) * dt + v1[j] * (z.w_r - a.w_r) + v2[j] * (z.w_s - a.w_s);
                }
                err[l][i] = x - target;
                xt[l][i] = x;
            }
        }
    });
    ReplicationErrorResult out;
    out.n_paths = cfg.n_paths;
    for (std::size_t l = 0; l < levels; ++l) {
        std::vector<double> sq(cfg.n_paths);
        for (std::size_t i = 0; i < cfg.n_paths; ++i) sq[i] = err[l][i] * err[l][i];
        const double ms = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(cfg.n_paths);
        double var = 0.0;
        for (double v : sq) var += (v - ms) * (v - ms);
        var /= std::max<double>(1.0, static_cast<double>(cfg.n_paths) - 1.0);
        const double rm = std::sqrt(ms);
        out.dts.push_back(cfg.base_dt / std::ldexp(1.0, static_cast<int>(l)));
        out.rmse.push_back(rm);
        // Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
        out.rmse_se.push_back(rm > 0.0 ? std::sqrt(var / cfg.n_paths) / (2.0 * rm) : 0.0);
        out.min_terminal.push_back(*std::min_element(xt[l].begin(), xt[l].end()));
    }
    for (std::size_t l = 0; l + 1 < levels; ++l) out.ratios.push_back(out.rmse[l + 1] / out.rmse[l]);
    return out;
}

struct LiabilityCheck {
    double f0 = 0.0;
    double f0_se = 0.0;
    double nc = 0.0;  // per unit benefit
    double nc_se = 0.0;
};

/// Monte Carlo of E[int e^{-int (r+delta)} P(t+d-x)/P(t) dM-weights | r(t)] by
/// exact sequential OU transitions through the remaining-service horizons of
/// Gauss-Legendre age nodes (plus membership atoms).
inline LiabilityCheck mc_liability_check(const MarketParams& mk, const PlanParams& plan, double r_t, std::size_t n,
                                         std::uint64_t seed, int age_nodes = 64) {
    if (n < 2) throw DomainError("mc_liability_check: need at least two samples");
    struct Node {
        double u, w_al, w_nc;
    };
    std::vector<Node> nodes;
    const auto breaks = plan.membership.breakpoints();
    const auto& rule = gauss_legendre(age_nodes);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double half = 0.5 * (breaks[p + 1] - breaks[p]);
        const double mid = 0.5 * (breaks[p + 1] + breaks[p]);
        for (int j = 0; j < age_nodes; ++j) {
            const double x = mid + half * rule.nodes[j];
            const double w = half * rule.weights[j];
            nodes.push_back({plan.d - x, w * plan.membership.value(x), w * plan.membership.density(x)});
        }
    }
    for (const auto& [x, w] : plan.membership.atoms()) nodes.push_back({plan.d - x, 0.0, w});
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.u < b.u; });

    struct Step {
        double tau, e, A, sqrt_tau;
        std::array<std::array<double, 3>, 3> L;
    };
    std::vector<Step> st;
    double prev = 0.0;
    for (const auto& nd : nodes) {
        const double tau = nd.u - prev;
        st.push_back({tau, std::exp(-mk.a * tau), decay_integral(mk.a, tau), std::sqrt(tau),
                      ou_step(mk, tau, mk.b).cholesky()});
        prev = nd.u;
    }
    const double pdrift = plan.mu - 0.5 * (plan.sigma_p1 * plan.sigma_p1 + plan.sigma_p2 * plan.sigma_p2);
    std::vector<double> al(n), nc(n);
    const std::size_t block = 1024;
    const std::size_t n_blocks = (n + block - 1) / block;
    parallel_blocks(n_blocks, [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) {
            NormalStream z(seed, i);
            double r = r_t;
            double I = 0.0;
            double wr = 0.0;
            double ws = 0.0;
            double sa = 0.0;
            double sn = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                const Step& s = st[j];
                const double z0 = z.next();
                const double z1 = z.next();
                const double z2 = z.next();
                const double z3 = z.next();
                const double dev = r - mk.b;
                I += mk.b * s.tau + dev * s.A + s.L[1][0] * z0 + s.L[1][1] * z1;
                r = mk.b + dev * s.e + s.L[0][0] * z0;
                wr += s.L[2][0] * z0 + s.L[2][1] * z1 + s.L[2][2] * z2;
                ws += s.sqrt_tau * z3;
                const double u = nodes[j].u;
                const double v =
                    std::exp(-I - plan.delta * u + pdrift * u + plan.sigma_p1 * wr + plan.sigma_p2 * ws);
                sa += nodes[j].w_al * v;
                sn += nodes[j].w_nc * v;
            }
            al[i] = sa;
            nc[i] = sn;
        }
    });
    auto mean_se = [&](const std::vector<double>& v) {
        const double m = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
        std::vector<double> d(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - m) * (v[i] - m);
        const double var = pairwise_sum(d.data(), d.size()) / static_cast<double>(v.size() - 1);
        return MeanSe{m, std::sqrt(var / static_cast<double>(v.size()))};
    };
    const auto a = mean_se(al);
    const auto c = mean_se(nc);
    return {a.mean, a.se, c.mean, c.se};
}

}  // namespace dbpension

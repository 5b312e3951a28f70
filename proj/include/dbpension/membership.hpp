// Copyright 2026 The dbpension Authors.
// SPDX-License-Identifier: Apache-2.0

// Membership distribution M(x) of active workers by age on [m, d].

#pragma once

#include <algorithm>
#include <cmath>

// The installed pchip header calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}

#include <boost/math/interpolators/pchip.hpp>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace dbpension {

class Membership {
public:
    enum class Kind { Linear, Table, RetirementMass };

    Membership() = default;

    /// M(x) = (x - m) / (d - m).
    static Membership linear(double m, double d) {
        check_range(m, d);
        Membership out;
        out.kind_ = Kind::Linear;
        out.m_ = m;
        out.d_ = d;
        return out;
    }

    /// Every member sits at the retirement age: M(x) = 1{x >= d}.
    static Membership retirement_mass(double m, double d) {
        check_range(m, d);
        Membership out;
        out.kind_ = Kind::RetirementMass;
        out.m_ = m;
        out.d_ = d;
        return out;
    }

    /// Monotone cubic (PCHIP) through (age, M) knots; linear when fewer than
    /// four knots are given.
    static Membership table(std::vector<double> ages, std::vector<double> values) {
        if (ages.size() != values.size() || ages.size() < 2)
            throw ConfigError("membership table: need at least two (age, M) rows");
        for (std::size_t i = 1; i < ages.size(); ++i) {
            if (!(ages[i] > ages[i - 1])) throw ConfigError("membership table: ages must be strictly increasing");
            if (values[i] < values[i - 1]) throw ConfigError("membership table: M must be nondecreasing");
        }
        if (std::abs(values.front()) > 1e-12 || std::abs(values.back() - 1.0) > 1e-12)
            throw ConfigError("membership table: need M(m) = 0 and M(d) = 1");
        Membership out;
        out.kind_ = Kind::Table;
        out.m_ = ages.front();
        out.d_ = ages.back();
        out.ages_ = ages;
        out.values_ = values;
        if (ages.size() >= 4) {
            // Zero end slopes are not forced; one-sided secants keep monotonicity.
            out.spline_ = std::make_shared<Spline>(std::move(ages), std::move(values));
        }
        return out;
    }

    /// Two-column CSV "age,M"; '#' lines are comments and a non-numeric first
    /// row is taken as a header.
    static Membership from_csv(std::istream& in) {
        std::vector<double> ages;
        std::vector<double> vals;
        std::string line;
        int lineno = 0;
        bool header = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream row(line);
            double x = 0.0;
            double v = 0.0;
            if (!(row >> x >> v)) {
                if (ages.empty() && !header) {
                    header = true;
                    continue;
                }
                throw ConfigError("membership csv: malformed row " + std::to_string(lineno));
            }
            ages.push_back(x);
            vals.push_back(v);
        }
        return table(std::move(ages), std::move(vals));
    }

    static Membership from_csv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("membership csv: cannot open " + path);
        return from_csv(in);
    }

    Kind kind() const { return kind_; }
    double entry_age() const { return m_; }
    double retirement_age() const { return d_; }

    double value(double x) const {
        check_age(x);
        switch (kind_) {
            case Kind::Linear: return (x - m_) / (d_ - m_);
            case Kind::RetirementMass: return x >= d_ ? 1.0 : 0.0;
            case Kind::Table:
                if (spline_) return std::clamp((*spline_)(x), 0.0, 1.0);
                return linear_table(x).first;
        }
        return 0.0;
    }

    /// Absolutely continuous part of dM/dx.
    double density(double x) const {
        check_age(x);
        switch (kind_) {
            case Kind::Linear: return 1.0 / (d_ - m_);
            case Kind::RetirementMass: return 0.0;
            case Kind::Table:
                if (spline_) return spline_->prime(x);
                return linear_table(x).second;
        }
        return 0.0;
    }

    /// Point masses (age, weight) of dM.
    std::vector<std::pair<double, double>> atoms() const {
        if (kind_ == Kind::RetirementMass) return {{d_, 1.0}};
        return {};
    }

    /// Panel boundaries for age quadrature: [m, knots..., d].
    std::vector<double> breakpoints() const {
        if (kind_ == Kind::Table) return ages_;
        return {m_, d_};
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::Linear: return "linear";
            case Kind::RetirementMass: return "retirement";
            case Kind::Table: return "table";
        }
        return "?";
    }

    const std::vector<double>& table_ages() const { return ages_; }
    const std::vector<double>& table_values() const { return values_; }

private:
    using Spline = boost::math::interpolators::pchip<std::vector<double>>;

    static void check_range(double m, double d) {
        if (!(d > m)) throw DomainError("membership: need retirement age d > entry age m");
    }

    void check_age(double x) const {
        if (!(x >= m_ - 1e-12 && x <= d_ + 1e-12)) throw DomainError("membership: age outside [m, d]");
    }

    std::pair<double, double> linear_table(double x) const {
        auto it = std::upper_bound(ages_.begin(), ages_.end(), x);
        std::size_t i = it == ages_.begin() ? 0 : static_cast<std::size_t>(it - ages_.begin()) - 1;
        if (i + 1 >= ages_.size()) i = ages_.size() - 2;
        const double slope = (values_[i + 1] - values_[i]) / (ages_[i + 1] - ages_[i]);
        return {values_[i] + slope * (x - ages_[i]), slope};
    }

    Kind kind_ = Kind::Linear;
    double m_ = 0.0;
    double d_ = 1.0;
    std::vector<double> ages_;
    std::vector<double> values_;
    std::shared_ptr<const Spline> spline_;
};

}  // namespace dbpension

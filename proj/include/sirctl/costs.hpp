// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sirctl/params.hpp"
#include "sirctl/zones.hpp"

namespace sirctl {

struct CostMetadata {
    std::string name;
    double lower_bound = 0.0;
    bool continuous = true;  // asserted by the user, never checked
    bool control_independent = false;
    bool multiplicative = false;  // l1 = lambda(s,i) a
};

/// Running cost l1(s, i, a) in 1/time. Evaluators must be safe to call concurrently.
struct CostModel {
    std::function<double(double, double, double)> eval;
    CostMetadata meta;

    double operator()(double s, double i, double a) const { return eval(s, i, a); }
};

/// l1(s,i,a) / (gamma i a), defined for i > 0 and a > 0.
inline double normalized_cost(const CostModel& c, const EpidemicParams& p, double s, double i, double a) {
    if (!(i > 0.0 && a > 0.0)) throw DomainError("normalized_cost: requires i > 0 and a > 0");
    return c(s, i, a) / (p.gamma * i * a);
}

// ---------------------------------------------------------------------------
// Built-in families

inline CostModel affine_cost(double lambda) {
    return {[lambda](double, double, double a) { return lambda * a; },
            {"affine", 0.0, true, false, true}};
}

/// l1 = lambda(s,i) a; lambda is expected non-decreasing in s with lambda/i non-increasing in i.
inline CostModel multiplicative_cost(std::function<double(double, double)> lambda, std::string name = "multiplicative") {
    return {[lambda = std::move(lambda)](double s, double i, double a) { return lambda(s, i) * a; },
            {std::move(name), 0.0, true, false, true}};
}

/// l1 = lambda i^eta a with eta in [0, 1].
inline CostModel power_cost(double lambda, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("power_cost: eta must lie in [0, 1]");
    return {[lambda, eta](double, double i, double a) { return lambda * std::pow(std::max(i, 0.0), eta) * a; },
            {"multiplicative_power", 0.0, true, false, true}};
}

/// Control-independent cost l1(s, i).
inline CostModel state_cost(std::function<double(double, double)> l, std::string name, double lower_bound = 0.0) {
    return {[l = std::move(l)](double s, double i, double) { return l(s, i); },
            {std::move(name), lower_bound, true, true, false}};
}

inline CostModel zero_cost() {
    return {[](double, double, double) { return 0.0; }, {"zero", 0.0, true, true, false}};
}

/// Multilinear interpolation on a tensor grid read from CSV "s,i,a,l1".
/// Queries outside the grid are clamped to its bounding box.
class TableCost {
public:
    static TableCost from_csv(std::istream& in) {
        std::string line;
        if (!std::getline(in, line)) throw DomainError("table cost: empty input");
        std::map<std::array<double, 3>, double> rows;
        std::vector<double> ss, is, as;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::array<double, 4> v{};
            std::stringstream ls(line);
            std::string cell;
            for (int k = 0; k < 4; ++k) {
                if (!std::getline(ls, cell, ','))
                    throw DomainError("table cost: line " + std::to_string(lineno) + " needs 4 columns");
                v[k] = std::stod(cell);
            }
            rows[{v[0], v[1], v[2]}] = v[3];
            ss.push_back(v[0]);
            is.push_back(v[1]);
            as.push_back(v[2]);
        }
        TableCost t;
        t.s_ = unique_sorted(std::move(ss));
        t.i_ = unique_sorted(std::move(is));
        t.a_ = unique_sorted(std::move(as));
        if (rows.size() != t.s_.size() * t.i_.size() * t.a_.size())
            throw DomainError("table cost: rows do not form a full s x i x a grid");
        t.values_.resize(rows.size());
        for (const auto& [key, val] : rows) t.values_[t.index(pos(t.s_, key[0]), pos(t.i_, key[1]), pos(t.a_, key[2]))] = val;
        return t;
    }

    static TableCost from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw DomainError("table cost: cannot open " + path);
        return from_csv(f);
    }

    [[nodiscard]] double operator()(double s, double i, double a) const {
        const auto [ks, ws] = locate(s_, s);
        const auto [ki, wi] = locate(i_, i);
        const auto [ka, wa] = locate(a_, a);
        double acc = 0.0;
        for (int ds = 0; ds < 2; ++ds)
            for (int di = 0; di < 2; ++di)
                for (int da = 0; da < 2; ++da) {
                    const double w = (ds ? ws : 1 - ws) * (di ? wi : 1 - wi) * (da ? wa : 1 - wa);
                    if (w == 0.0) continue;
                    acc += w * values_[index(std::min(ks + ds, s_.size() - 1), std::min(ki + di, i_.size() - 1),
                                             std::min(ka + da, a_.size() - 1))];
                }
        return acc;
    }

    [[nodiscard]] double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
    [[nodiscard]] bool control_independent() const { return a_.size() == 1; }

private:
    static std::vector<double> unique_sorted(std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
    static std::size_t pos(const std::vector<double>& axis, double v) {
        return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
    }
    static std::pair<std::size_t, double> locate(const std::vector<double>& axis, double v) {
        if (axis.size() == 1 || v <= axis.front()) return {0, 0.0};
        if (v >= axis.back()) return {axis.size() - 1, 0.0};
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), v) - axis.begin()) - 1;
        return {k, (v - axis[k]) / (axis[k + 1] - axis[k])};
    }
    [[nodiscard]] std::size_t index(std::size_t ks, std::size_t ki, std::size_t ka) const {
        return (ks * i_.size() + ki) * a_.size() + ka;
    }

    std::vector<double> s_, i_, a_, values_;
};

inline CostModel table_cost(TableCost table) {
    const bool indep = table.control_independent();
    const double lb = std::min(0.0, table.min_value());
    return {[t = std::move(table)](double s, double i, double a) { return t(s, i, a); },
            {"table", lb, true, indep, false}};
}

// ---------------------------------------------------------------------------
// Sampled assumption checks

struct GridSpec {
    std::size_t ns = 200;
    std::size_t ni = 200;
    std::size_t na = 21;
};

struct CheckItem {
    std::string name;
    bool applicable = true;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst = 0.0;  // most negative margin seen
    double s = NAN, i = NAN, a = NAN;

    [[nodiscard]] bool passed() const { return !applicable || violations == 0; }

    void record(double margin, double ps, double pi, double pa, double tol) {
        ++checked;
        if (margin < -tol) ++violations;
        if (margin < worst || std::isnan(s)) {
            if (margin < worst) worst = margin;
            s = ps;
            i = pi;
            a = pa;
        }
    }
};

/// Sampled checks of the standing cost hypotheses; non-exhaustive by construction.
struct AssumptionReport {
    CheckItem nonnegative{"nonnegative"};
    CheckItem monotone_in_a{"monotone_in_a"};
    CheckItem convex_in_a{"convex_in_a"};
    CheckItem continuous_in_a{"continuous_in_a"};  // proxy for the convex value set
    CheckItem zero_control_zero_on_green{"zero_control_zero_on_green"};
    CheckItem zero_on_green{"zero_on_green"};
    CheckItem positive_at_zero_infection_off_green{"positive_at_zero_infection_off_green"};
    CheckItem lambda_nondecreasing_in_s{"lambda_nondecreasing_in_s"};
    CheckItem lambda_over_i_nonincreasing{"lambda_over_i_nonincreasing"};

    [[nodiscard]] std::vector<const CheckItem*> items() const {
        return {&nonnegative,   &monotone_in_a, &convex_in_a,
                &continuous_in_a, &zero_control_zero_on_green, &zero_on_green,
                &positive_at_zero_infection_off_green, &lambda_nondecreasing_in_s, &lambda_over_i_nonincreasing};
    }
    /// Assumption 1 (sampled): non-negative, monotone, interval-valued in a.
    [[nodiscard]] bool standing_assumptions() const {
        return nonnegative.passed() && monotone_in_a.passed() && continuous_in_a.passed();
    }
};

namespace detail {

inline double grid_point(double lo, double hi, std::size_t k, std::size_t n) {
    return n <= 1 ? lo : lo + (hi - lo) * double(k) / double(n - 1);
}

/// Narrows [a0, a1] on the half with the larger variation; a jump survives the narrowing.
inline bool has_jump(const CostModel& c, double s, double i, double a0, double a1) {
    double l0 = c(s, i, a0), l1 = c(s, i, a1);
    for (int it = 0; it < 40; ++it) {
        const double m = 0.5 * (a0 + a1), lm = c(s, i, m);
        if (std::fabs(lm - l0) >= std::fabs(l1 - lm)) {
            a1 = m;
            l1 = lm;
        } else {
            a0 = m;
            l0 = lm;
        }
    }
    return std::fabs(l1 - l0) > 1e-6 * (1.0 + std::fabs(l0));
}

}  // namespace detail

inline AssumptionReport check_assumptions(const CostModel& c, const EpidemicParams& p, const GridSpec& g = {}) {
    AssumptionReport rep;
    const double s_hi = psi_at_zero(p), lo = 1e-6;
    const std::size_t na = std::max<std::size_t>(g.na, 3);
    std::vector<double> as(na), ls(na), deltas(na - 1);
    for (std::size_t k = 0; k < na; ++k) as[k] = detail::grid_point(0.0, p.abar, k, na);
    rep.lambda_nondecreasing_in_s.applicable = c.meta.multiplicative;
    rep.lambda_over_i_nonincreasing.applicable = c.meta.multiplicative;

    auto tol = [](double v) { return 1e-12 * (1.0 + std::fabs(v)); };
    for (std::size_t ks = 0; ks < g.ns; ++ks) {
        const double s = detail::grid_point(lo, s_hi, ks, g.ns);
        for (std::size_t ki = 0; ki < g.ni; ++ki) {
            const double i = detail::grid_point(lo, p.istar, ki, g.ni);
            const ZoneLabel z = classify(p, {s, i});
            if (z == ZoneLabel::Infeasible || z == ZoneLabel::OutsideSimplex) continue;
            for (std::size_t k = 0; k < na; ++k) {
                ls[k] = c(s, i, as[k]);
                rep.nonnegative.record(ls[k] - std::max(0.0, c.meta.lower_bound), s, i, as[k], tol(ls[k]));
            }
            for (std::size_t k = 0; k + 1 < na; ++k) {
                rep.monotone_in_a.record(ls[k + 1] - ls[k], s, i, as[k + 1], tol(ls[k]));
                deltas[k] = std::fabs(ls[k + 1] - ls[k]);
            }
            for (std::size_t k = 1; k + 1 < na; ++k)
                rep.convex_in_a.record(ls[k + 1] - 2.0 * ls[k] + ls[k - 1], s, i, as[k], tol(ls[k]));

            std::vector<double> sorted = deltas;
            std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
            const double median = sorted[sorted.size() / 2];
            bool jump = false;
            for (std::size_t k = 0; k + 1 < na && !jump; ++k)
                if (deltas[k] > 4.0 * median + 1e-12) jump = detail::has_jump(c, s, i, as[k], as[k + 1]);
            rep.continuous_in_a.record(jump ? -1.0 : 0.0, s, i, NAN, 0.5);

            if (z == ZoneLabel::Green) {
                rep.zero_control_zero_on_green.record(-std::fabs(ls[0]), s, i, 0.0, 1e-12);
                for (std::size_t k = 0; k < na; ++k) rep.zero_on_green.record(-std::fabs(ls[k]), s, i, as[k], 1e-12);
            }
            if (c.meta.multiplicative) {
                const double lam = ls[na - 1] / p.abar;
                if (ks + 1 < g.ns) {
                    const double s2 = detail::grid_point(lo, s_hi, ks + 1, g.ns);
                    if (in_yellow(p, {s2, i})) rep.lambda_nondecreasing_in_s.record(c(s2, i, p.abar) / p.abar - lam, s, i, p.abar, tol(lam));
                }
                if (ki + 1 < g.ni) {
                    const double i2 = detail::grid_point(lo, p.istar, ki + 1, g.ni);
                    rep.lambda_over_i_nonincreasing.record(lam / i - c(s, i2, p.abar) / p.abar / i2, s, i, p.abar, tol(lam / i));
                }
            }
        }
    }
    // l1(s, 0, 0) > 0 wherever (s, 0) is outside the green zone.
    const double green0 = phi_at_zero(p);
    for (std::size_t ks = 0; ks < g.ns; ++ks) {
        const double s = detail::grid_point(lo, s_hi, ks, g.ns);
        if (s <= green0) continue;
        const double v = c(s, 0.0, 0.0);
        rep.positive_at_zero_infection_off_green.record(v > 0.0 ? 0.0 : -1.0, s, 0.0, 0.0, 0.5);
    }
    return rep;
}

}  // namespace sirctl

// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "sirctl/costs.hpp"
#include "sirctl/dynamics.hpp"
#include "sirctl/linalg.hpp"
#include "sirctl/params.hpp"

namespace sirctl {

class MissingMoment : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class HorizonMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Exponents of s^a1 i^a2 a^a3.
struct MonomialIndex {
    int a1 = 0, a2 = 0, a3 = 0;

    [[nodiscard]] int degree() const { return a1 + a2 + a3; }
    auto operator<=>(const MonomialIndex&) const = default;
};

/// All (a1, a2) with a1 + a2 <= d, graded then by decreasing a1.
inline std::vector<MonomialIndex> monomials_2d(int d) {
    std::vector<MonomialIndex> out;
    for (int k = 0; k <= d; ++k)
        for (int a1 = k; a1 >= 0; --a1) out.push_back({a1, k - a1, 0});
    return out;
}

/// Finitely supported polynomial; coefficients keyed by exponent.
struct Polynomial {
    std::map<MonomialIndex, double> coeffs;

    [[nodiscard]] double operator()(double s, double i, double a = 0.0) const {
        double v = 0.0;
        for (const auto& [m, c] : coeffs) v += c * std::pow(s, m.a1) * std::pow(i, m.a2) * std::pow(a, m.a3);
        return v;
    }
    [[nodiscard]] double ds(double s, double i) const {
        double v = 0.0;
        for (const auto& [m, c] : coeffs)
            if (m.a1 > 0) v += c * m.a1 * std::pow(s, m.a1 - 1) * std::pow(i, m.a2);
        return v;
    }
    [[nodiscard]] double di(double s, double i) const {
        double v = 0.0;
        for (const auto& [m, c] : coeffs)
            if (m.a2 > 0) v += c * m.a2 * std::pow(s, m.a1) * std::pow(i, m.a2 - 1);
        return v;
    }
    [[nodiscard]] int degree() const {
        int d = 0;
        for (const auto& [m, c] : coeffs)
            if (c != 0.0) d = std::max(d, m.degree());
        return d;
    }
};

inline void to_json(nlohmann::json& j, const Polynomial& p) {
    j = nlohmann::json::array();
    for (const auto& [m, c] : p.coeffs) j.push_back({m.a1, m.a2, m.a3, c});
}

// ---------------------------------------------------------------------------

/// Truncated moments of an occupation couple.
///
/// m1(a) = q int_0^T e^{-qt} s^a1 i^a2 a^a3 dt  (total mass 1 - e^{-qT}),
/// m2(a) = moments of the terminal measure.
struct MomentVector {
    int r = 1;
    double q = 0.0;
    double T = 0.0;
    std::map<MonomialIndex, double> m1;
    std::map<std::array<int, 2>, double> m2;

    [[nodiscard]] double get1(int a1, int a2, int a3) const {
        const auto it = m1.find({a1, a2, a3});
        if (it == m1.end())
            throw MissingMoment("missing m1(" + std::to_string(a1) + "," + std::to_string(a2) + "," + std::to_string(a3) + ")");
        return it->second;
    }
    [[nodiscard]] double get2(int a1, int a2) const {
        const auto it = m2.find({a1, a2});
        if (it == m2.end()) throw MissingMoment("missing m2(" + std::to_string(a1) + "," + std::to_string(a2) + ")");
        return it->second;
    }
};

inline void to_json(nlohmann::json& j, const MomentVector& mv) {
    nlohmann::json m1 = nlohmann::json::array(), m2 = nlohmann::json::array();
    for (const auto& [k, v] : mv.m1) m1.push_back({k.a1, k.a2, k.a3, v});
    for (const auto& [k, v] : mv.m2) m2.push_back({k[0], k[1], v});
    j = {{"r", mv.r}, {"q", mv.q}, {"T", mv.T}, {"m1", m1}, {"m2", m2}};
}

inline void from_json(const nlohmann::json& j, MomentVector& mv) {
    mv.r = j.at("r").get<int>();
    mv.q = j.at("q").get<double>();
    mv.T = j.at("T").get<double>();
    mv.m1.clear();
    mv.m2.clear();
    for (const auto& e : j.at("m1")) mv.m1[{e[0].get<int>(), e[1].get<int>(), e[2].get<int>()}] = e[3].get<double>();
    for (const auto& e : j.at("m2")) mv.m2[{e[0].get<int>(), e[1].get<int>()}] = e[2].get<double>();
}

/// Weighted mixture sum_k w_k mv_k (linear in the measures).
inline MomentVector mix(const std::vector<MomentVector>& parts, const std::vector<double>& weights) {
    if (parts.empty() || parts.size() != weights.size()) throw std::invalid_argument("mix: size mismatch");
    MomentVector out = parts.front();
    for (auto& [k, v] : out.m1) v = 0.0;
    for (auto& [k, v] : out.m2) v = 0.0;
    for (std::size_t n = 0; n < parts.size(); ++n) {
        for (auto& [k, v] : out.m1) v += weights[n] * parts[n].get1(k.a1, k.a2, k.a3);
        for (auto& [k, v] : out.m2) v += weights[n] * parts[n].get2(k[0], k[1]);
    }
    return out;
}

/// Moments of a single terminal Dirac; m1 left empty.
inline MomentVector dirac_moments(const State& x, int r) {
    MomentVector mv;
    mv.r = r;
    for (const auto& m : monomials_2d(2 * r)) mv.m2[{m.a1, m.a2}] = std::pow(x.s, m.a1) * std::pow(x.i, m.a2);
    return mv;
}

/// q int_0^T e^{-qt} f(s, i, a) dt along tr, Simpson on every sample interval
/// with the midpoint reconstructed by a partial RK4 step.
template <class F>
double discounted_integral(const EpidemicParams& p, const Trajectory& tr, double q, F&& f) {
    const auto& sm = tr.samples;
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < sm.size(); ++k) {
        const Sample& b = sm[k];
        const double h = sm[k + 1].t - b.t;
        if (h <= 0.0) continue;
        const State xm = detail::rk4_step(p, b.state(), b.a, b.law, 0.5 * h);
        const State xe = sm[k + 1].state();
        auto ctrl = [&](const State& y) {
            return b.law == ControlLaw::BoundaryFeedback ? detail::boundary_feedback(p, y.s) : b.a;
        };
        const double w0 = std::exp(-q * b.t), wm = std::exp(-q * (b.t + 0.5 * h)), we = std::exp(-q * sm[k + 1].t);
        total += h / 6.0 *
                 (w0 * f(b.s, b.i, ctrl(b.state())) + 4.0 * wm * f(xm.s, xm.i, ctrl(xm)) + we * f(xe.s, xe.i, ctrl(xe)));
    }
    return q * total;
}

/// Discounted running cost q int_0^T e^{-qt} l1 dt of a sampled trajectory.
inline double discounted_cost(const EpidemicParams& p, const Trajectory& tr, const CostModel& c, double q) {
    return discounted_integral(p, tr, q, [&](double s, double i, double a) { return c(s, i, a); });
}

inline MomentVector trajectory_to_moments(const Trajectory& tr, const EpidemicParams& p, double T, int r, double q) {
    if (r < 0) throw DomainError("trajectory_to_moments: r must be non-negative");
    if (!(q > 0.0)) throw DomainError("trajectory_to_moments: q must be positive");
    if (tr.samples.empty() || std::fabs(tr.samples.front().t) > 1e-12 || std::fabs(tr.samples.back().t - T) > 1e-9)
        throw HorizonMismatch("trajectory_to_moments: trajectory does not span [0, T]");
    MomentVector mv;
    mv.r = r;
    mv.q = q;
    mv.T = T;
    const auto idx = monomials_2d(2 * r + 1);
    // one pass over the samples for all exponents
    std::vector<double> acc(2 * idx.size(), 0.0);
    const auto& sm = tr.samples;
    auto add = [&](double w, double s, double i, double a) {
        for (std::size_t n = 0; n < idx.size(); ++n) {
            const double mono = std::pow(s, idx[n].a1) * std::pow(i, idx[n].a2);
            acc[2 * n] += w * mono;
            acc[2 * n + 1] += w * mono * a;
        }
    };
    for (std::size_t k = 0; k + 1 < sm.size(); ++k) {
        const Sample& b = sm[k];
        const double h = sm[k + 1].t - b.t;
        if (h <= 0.0) continue;
        const State xm = detail::rk4_step(p, b.state(), b.a, b.law, 0.5 * h);
        const State xe = sm[k + 1].state();
        auto ctrl = [&](const State& y) {
            return b.law == ControlLaw::BoundaryFeedback ? detail::boundary_feedback(p, y.s) : b.a;
        };
        const double f = q * h / 6.0;
        add(f * std::exp(-q * b.t), b.s, b.i, ctrl(b.state()));
        add(4.0 * f * std::exp(-q * (b.t + 0.5 * h)), xm.s, xm.i, ctrl(xm));
        add(f * std::exp(-q * sm[k + 1].t), xe.s, xe.i, ctrl(xe));
    }
    for (std::size_t n = 0; n < idx.size(); ++n) {
        mv.m1[{idx[n].a1, idx[n].a2, 0}] = acc[2 * n];
        mv.m1[{idx[n].a1, idx[n].a2, 1}] = acc[2 * n + 1];
    }
    const State xT = sm.back().state();
    for (const auto& m : monomials_2d(2 * r)) mv.m2[{m.a1, m.a2}] = std::pow(xT.s, m.a1) * std::pow(xT.i, m.a2);
    return mv;
}

/// Residual of the adjoint identity for f = e^{-qt} s^a1 i^a2:
///   e^{-qT} m2(a) - s0^a1 i0^a2 = (1/q)[-q m1(a,0) - a1 beta (m1(a1,a2+1,0) - m1(a1,a2+1,1))
///                                  + a2 beta (m1(a1+1,a2,0) - m1(a1+1,a2,1)) - a2 gamma m1(a,0)].
inline double moment_constraint_residual(const MomentVector& mv, const EpidemicParams& p, const State& x0) {
    if (!(mv.q > 0.0)) throw DomainError("moment_constraint_residual: q must be positive");
    const double decay = std::exp(-mv.q * mv.T);
    double worst = 0.0;
    for (const auto& m : monomials_2d(2 * mv.r)) {
        const int a1 = m.a1, a2 = m.a2;
        const double lhs = decay * mv.get2(a1, a2) - std::pow(x0.s, a1) * std::pow(x0.i, a2);
        double rhs = -mv.q * mv.get1(a1, a2, 0) - a2 * p.gamma * mv.get1(a1, a2, 0);
        if (a1 > 0) rhs -= a1 * p.beta * (mv.get1(a1, a2 + 1, 0) - mv.get1(a1, a2 + 1, 1));
        if (a2 > 0) rhs += a2 * p.beta * (mv.get1(a1 + 1, a2, 0) - mv.get1(a1 + 1, a2, 1));
        worst = std::max(worst, std::fabs(lhs - rhs / mv.q));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Moment-matrix compatibility

/// Polynomial g(s, i) whose localizing matrix must be PSD.
struct Localizer {
    std::string name;
    Polynomial g;
};

/// s (smax - s) and i (i* - i); smax defaults to gamma/(beta(1-abar)).
inline std::vector<Localizer> box_localizers(const EpidemicParams& p, double smax = NAN) {
    if (std::isnan(smax)) smax = p.herd_confined();
    Polynomial gs, gi;
    gs.coeffs[{1, 0, 0}] = smax;
    gs.coeffs[{2, 0, 0}] = -1.0;
    gi.coeffs[{0, 1, 0}] = p.istar;
    gi.coeffs[{0, 2, 0}] = -1.0;
    return {{"s_box", gs}, {"i_box", gi}};
}

struct PsdEntry {
    std::string name;
    std::size_t size = 0;
    double min_eigenvalue = 0.0;
};

struct PsdReport {
    std::vector<PsdEntry> entries;
    double tolerance = -1e-8;

    [[nodiscard]] bool passed() const {
        for (const auto& e : entries)
            if (e.min_eigenvalue < tolerance) return false;
        return true;
    }
    [[nodiscard]] double min_eigenvalue() const {
        double v = INFINITY;
        for (const auto& e : entries) v = std::min(v, e.min_eigenvalue);
        return v;
    }
};

/// M[u,v] = m2(u+v) over monomials of degree <= r, plus localized matrices
/// (g m2)(u+v) over degree <= r - ceil(deg g / 2).
inline PsdReport moment_matrix_psd_check(const MomentVector& mv, const std::vector<Localizer>& localizers) {
    if (mv.r < 1) throw DomainError("moment_matrix_psd_check: r must be at least 1");
    PsdReport rep;
    auto build = [&](const std::string& name, const Polynomial* g, int d) {
        const auto basis = monomials_2d(d);
        const std::size_t n = basis.size();
        Matrix M(n, n);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u; v < n; ++v) {
                double val = 0.0;
                if (!g) {
                    val = mv.get2(basis[u].a1 + basis[v].a1, basis[u].a2 + basis[v].a2);
                } else {
                    for (const auto& [m, c] : g->coeffs)
                        val += c * mv.get2(basis[u].a1 + basis[v].a1 + m.a1, basis[u].a2 + basis[v].a2 + m.a2);
                }
                M(u, v) = M(v, u) = val;
            }
        const auto eig = jacobi_eigenvalues(M);
        rep.entries.push_back({name, n, *std::min_element(eig.values.begin(), eig.values.end())});
    };
    build("moment", nullptr, mv.r);
    for (const auto& loc : localizers) {
        const int d = mv.r - (loc.g.degree() + 1) / 2;
        if (d >= 0) build(loc.name, &loc.g, d);
    }
    return rep;
}

}  // namespace sirctl

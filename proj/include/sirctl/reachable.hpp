// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "sirctl/dynamics.hpp"
#include "sirctl/params.hpp"
#include "sirctl/roots.hpp"
#include "sirctl/zones.hpp"

namespace sirctl {

/// A constant-control orbit through x0, sampled and clipped to the yellow zone.
/// Clipping can split the orbit, so it is stored as polyline pieces.
struct OrbitBranch {
    double control = 0.0;
    std::vector<std::vector<State>> pieces;

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 0;
        for (const auto& pc : pieces) n += pc.size();
        return n;
    }
    [[nodiscard]] std::vector<State> points() const {
        std::vector<State> out;
        for (const auto& pc : pieces) out.insert(out.end(), pc.begin(), pc.end());
        return out;
    }
};

struct ReachableSpec {
    EpidemicParams params{};
    State x0{};
    std::optional<double> T;
    OrbitBranch upper_branch;  // a = 0
    OrbitBranch lower_branch;  // a = abar
    std::optional<std::pair<double, double>> s_lower_limits;
    // unclipped orbit samples cut at the uncontrolled abscissa at T; see reachable_spec
    std::vector<State> upper_orbit, lower_orbit;

    /// Yellow point of a segment joining the two orbits, up to distance tol.
    [[nodiscard]] bool contains(const State& x, double tol = 1e-6) const;
};

namespace detail {

/// i on the constant-control orbit through x0 at abscissa s (closed form).
inline double orbit_level(const State& x0, double k, double s) { return x0.s + x0.i - s + k * std::log(s / x0.s); }

/// Smallest abscissa of the orbit inside i >= 0.
inline double orbit_final_size(const State& x0, double k) {
    if (x0.i <= 0.0) return x0.s;
    const double hi = std::min(x0.s, k);
    if (x0.s > k && orbit_level(x0, k, hi) <= 0.0) return hi;
    return bisect([&](double s) { return orbit_level(x0, k, s); }, 1e-12 * x0.s, hi, 1e-15, 400);
}

/// Unclipped orbit samples from x0 down to s_end.
inline std::vector<State> sample_orbit(const State& x0, double k, double s_end, std::size_t n) {
    std::vector<State> out;
    const std::size_t m = std::max<std::size_t>(n, 2);
    for (std::size_t j = 0; j < m; ++j) {
        const double s = j == 0 ? x0.s : (j + 1 == m ? s_end : x0.s + (s_end - x0.s) * double(j) / double(m - 1));
        out.push_back({s, j == 0 ? x0.i : std::max(0.0, orbit_level(x0, k, s))});
        if (s_end == x0.s) break;
    }
    return out;
}

inline OrbitBranch sample_branch(const EpidemicParams& p, const State& x0, double a, double s_end, std::size_t n) {
    OrbitBranch br;
    br.control = a;
    const double k = p.herd_at(a);
    std::vector<State> cur;
    auto admissible = [&](const State& y) {
        if (y.i < -1e-15 || y.i > p.istar + 1e-12) return false;
        return y.s <= psi(p, std::clamp(y.i, kZeroLevel, p.istar)) + 1e-12;
    };
    const std::size_t m = std::max<std::size_t>(n, 2);
    for (std::size_t j = 0; j < m; ++j) {
        // from x0 towards s_end; the endpoints are exact
        const double s = j == 0 ? x0.s : (j + 1 == m ? s_end : x0.s + (s_end - x0.s) * double(j) / double(m - 1));
        const State y{s, j == 0 ? x0.i : std::max(0.0, orbit_level(x0, k, s))};
        if (admissible(y)) {
            cur.push_back(y);
        } else if (!cur.empty()) {
            br.pieces.push_back(std::move(cur));
            cur.clear();
        }
        if (s_end == x0.s) break;
    }
    if (!cur.empty()) br.pieces.push_back(std::move(cur));
    return br;
}

inline double cross(const State& o, const State& a, const State& b) {
    return (a.s - o.s) * (b.i - o.i) - (a.i - o.i) * (b.s - o.s);
}

inline double segment_distance(const State& x, const State& a, const State& b) {
    const double ds = b.s - a.s, di = b.i - a.i, len2 = ds * ds + di * di;
    double t = len2 > 0.0 ? ((x.s - a.s) * ds + (x.i - a.i) * di) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(x.s - (a.s + t * ds), x.i - (a.i + t * di));
}

/// Distance from x to the convex hull of up to four points (0 inside).
inline double hull_distance(const State& x, std::array<State, 4> pts, std::size_t n) {
    std::sort(pts.begin(), pts.begin() + n,
              [](const State& a, const State& b) { return a.s < b.s || (a.s == b.s && a.i < b.i); });
    std::array<State, 8> h{};
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[j]) <= 0.0) --k;
        h[k++] = pts[j];
    }
    for (std::size_t j = n - 1, t = k + 1; j-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[j]) <= 0.0) --k;
        h[k++] = pts[j];
    }
    if (k > 1) --k;
    double area2 = 0.0;
    for (std::size_t j = 1; j + 1 < k; ++j) area2 += cross(h[0], h[j], h[j + 1]);
    if (k >= 3 && area2 > 0.0) {
        bool inside = true;
        for (std::size_t j = 0; j < k && inside; ++j) inside = cross(h[j], h[(j + 1) % k], x) >= 0.0;
        if (inside) return 0.0;
    }
    double d = INFINITY;
    if (k == 1) return std::hypot(x.s - h[0].s, x.i - h[0].i);
    for (std::size_t j = 0; j < k; ++j) d = std::min(d, segment_distance(x, h[j], h[(j + 1) % k]));
    return d;
}

}  // namespace detail

inline bool ReachableSpec::contains(const State& x, double tol) const {
    if (x.i < -tol || x.i > params.istar + tol) return false;
    if (x.s > psi(params, std::clamp(x.i, kZeroLevel, params.istar)) + tol) return false;
    // the join of two polylines is the union of hulls of segment pairs
    auto segments = [](const std::vector<State>& pc) {
        std::vector<std::pair<State, State>> out;
        if (pc.size() == 1) out.push_back({pc[0], pc[0]});
        for (std::size_t j = 0; j + 1 < pc.size(); ++j) out.push_back({pc[j], pc[j + 1]});
        return out;
    };
    const auto up = segments(upper_orbit), lo = segments(lower_orbit);
    for (const auto& [a, b] : up) {
        const double us0 = std::min(a.s, b.s), us1 = std::max(a.s, b.s);
        const double ui0 = std::min(a.i, b.i), ui1 = std::max(a.i, b.i);
        for (const auto& [c, d] : lo) {
            const double s0 = std::min({us0, c.s, d.s}) - tol, s1 = std::max({us1, c.s, d.s}) + tol;
            const double i0 = std::min({ui0, c.i, d.i}) - tol, i1 = std::max({ui1, c.i, d.i}) + tol;
            if (x.s < s0 || x.s > s1 || x.i < i0 || x.i > i1) continue;
            if (detail::hull_distance(x, {a, b, c, d}, 4) <= tol) return true;
        }
    }
    return false;
}

/// Extremal orbits a = 0 and a = abar through x0, truncated at the abscissas
/// reached at time T when a horizon is given.
inline ReachableSpec reachable_spec(const EpidemicParams& p, const State& x0, std::optional<double> T = std::nullopt,
                                    std::size_t n_points = 400) {
    if (!in_yellow(p, x0)) throw ZoneMismatch("reachable_spec: x0 outside the yellow zone");
    ReachableSpec rs;
    rs.params = p;
    rs.x0 = x0;
    rs.T = T;
    double end_upper = detail::orbit_final_size(x0, p.herd());
    double end_lower = detail::orbit_final_size(x0, p.herd_confined());
    if (T) {
        if (*T < 0.0) throw DomainError("reachable_spec: T must be non-negative");
        double lim_upper = x0.s, lim_lower = x0.s;
        if (*T > 0.0) {
            const double h = std::min(1e-2, *T / 16.0);
            lim_upper = integrate(p, x0, ConstantControl{0.0}, *T, h).back().s;
            lim_lower = integrate(p, x0, ConstantControl{p.abar}, *T, h).back().s;
        }
        rs.s_lower_limits = std::make_pair(lim_upper, lim_lower);
        end_upper = std::max(end_upper, lim_upper);
        end_lower = std::max(end_lower, lim_lower);
    }
    rs.upper_branch = detail::sample_branch(p, x0, 0.0, end_upper, n_points);
    rs.lower_branch = detail::sample_branch(p, x0, p.abar, end_lower, n_points);
    // Membership: the uncontrolled abscissa at T bounds s from below for every
    // control, and intermediate controls can ride the cap i = i*, so the join
    // uses both whole orbits cut at that abscissa and is traced on the yellow zone.
    rs.upper_orbit = detail::sample_orbit(x0, p.herd(), end_upper, n_points);
    rs.lower_orbit = detail::sample_orbit(x0, p.herd_confined(), std::max(end_upper, detail::orbit_final_size(x0, p.herd_confined())), n_points);
    return rs;
}

}  // namespace sirctl

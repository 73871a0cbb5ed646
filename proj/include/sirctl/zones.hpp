// Copyright 2026 The sirctl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sirctl/params.hpp"
#include "sirctl/roots.hpp"

namespace sirctl {

class SingularCorner : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Every boundary curve solves  -x + k log x = i - i* + k log x_ref - x_ref  for some
// coefficient k and reference abscissa x_ref. With u = x/k this is
//     (u - 1) - log u = (i* - i)/k + F(x_ref/k),   F(u) = (u - 1) - log u,
// which is solved in w = u - 1 via log1p so that the double root at u = 1
// (reached at i = i*) is returned exactly.

enum class Branch { AboveThreshold, BelowThreshold };

namespace detail {

inline double shifted_log_gap(double u) { return (u - 1.0) - std::log1p(u - 1.0); }

/// Solves w - log1p(w) = rhs on the requested branch and returns k (1 + w).
inline double solve_curve(double k, double rhs, Branch branch) {
    if (rhs <= 0.0) return k;
    auto f = [rhs](double w) { return w - std::log1p(w) - rhs; };
    auto df = [](double w) { return w / (1.0 + w); };
    double w = 0.0;
    if (branch == Branch::AboveThreshold) {
        w = find_root(f, df, 0.0, 2.0 / k);  // x in [k, k + 2]
    } else {
        w = find_root(f, df, 1e-14 / k - 1.0, 0.0);  // x in [1e-14, k]
    }
    return k * (1.0 + w);
}

inline void check_level(const EpidemicParams& p, double i, const char* who) {
    if (!(i > 0.0 && i <= p.istar)) throw DomainError(std::string(who) + ": i must lie in (0, istar]");
}

}  // namespace detail

/// Level used for the i -> 0+ limits of the zone curves.
inline constexpr double kZeroLevel = 1e-12;

/// Right edge of the green zone at level i (upper root, >= gamma/beta).
inline double phi(const EpidemicParams& p, double i) {
    detail::check_level(p, i, "phi");
    const double k = p.herd();
    return detail::solve_curve(k, (p.istar - i) / k, Branch::AboveThreshold);
}

/// Right edge of the yellow zone at level i (upper root, >= gamma/(beta(1-abar))).
inline double psi(const EpidemicParams& p, double i) {
    detail::check_level(p, i, "psi");
    const double k = p.herd_confined();
    return detail::solve_curve(k, (p.istar - i) / k, Branch::AboveThreshold);
}

/// Unconfined backward flow through (sbar, i*): the right edge of B^sbar.
inline double phi_sbar(const EpidemicParams& p, double sbar, double i) {
    detail::check_level(p, i, "phi_sbar");
    const double k = p.herd();
    const double tol = 1e-15;
    if (!(sbar >= k * (1.0 - tol) && sbar <= p.herd_confined() * (1.0 + tol)))
        throw DomainError("phi_sbar: sbar must lie in [gamma/beta, gamma/(beta(1-abar))]");
    sbar = std::max(sbar, k);
    if (i == p.istar) return sbar;
    const double rhs = (p.istar - i) / k + detail::shifted_log_gap(sbar / k);
    return detail::solve_curve(k, rhs, Branch::AboveThreshold);
}

/// Right edge of the magenta band B = B^{gamma/(beta(1-abar))}.
inline double band_curve(const EpidemicParams& p, double i) { return phi_sbar(p, p.herd_confined(), i); }

/// Fully confined flow through (gamma/beta, i*), lower root (<= gamma/beta).
inline double psi_tilde(const EpidemicParams& p, double i) {
    detail::check_level(p, i, "psi_tilde");
    if (i == p.istar) return p.herd();
    const double k = p.herd_confined();
    const double rhs = (p.istar - i) / k + detail::shifted_log_gap(p.herd() / k);
    return detail::solve_curve(k, rhs, Branch::BelowThreshold);
}

/// d psi_tilde / di = 1 / (-1 + gamma/(beta(1-abar) psi_tilde)).
inline double psi_tilde_derivative(const EpidemicParams& p, double i) {
    const double x = psi_tilde(p, i);
    return 1.0 / (-1.0 + p.herd_confined() / x);
}

/// d phi^sbar / di = beta phi / (gamma - beta phi).
inline double phi_sbar_derivative(const EpidemicParams& p, double sbar, double i) {
    const double x = phi_sbar(p, sbar, i);
    return p.beta * x / (p.gamma - p.beta * x);
}

// i -> 0+ limits (solved at i = kZeroLevel).
inline double phi_at_zero(const EpidemicParams& p) { return phi(p, kZeroLevel); }
inline double psi_at_zero(const EpidemicParams& p) { return psi(p, kZeroLevel); }
inline double band_at_zero(const EpidemicParams& p) { return band_curve(p, kZeroLevel); }

// ---------------------------------------------------------------------------

enum class CurveKind { Green, Yellow, BGeneral, PsiTilde };

/// A boundary curve as a value: i -> s on (0, istar].
struct ZoneCurve {
    CurveKind kind = CurveKind::Green;
    EpidemicParams params{};
    double sbar = 0.0;  // BGeneral only

    [[nodiscard]] Branch branch() const {
        return kind == CurveKind::PsiTilde ? Branch::BelowThreshold : Branch::AboveThreshold;
    }
    [[nodiscard]] double operator()(double i) const {
        switch (kind) {
            case CurveKind::Green: return phi(params, i);
            case CurveKind::Yellow: return psi(params, i);
            case CurveKind::BGeneral: return phi_sbar(params, sbar, i);
            case CurveKind::PsiTilde: return psi_tilde(params, i);
        }
        return NAN;
    }
    /// Residual of the defining equation  -x + k log x - (i - i* + k log x_ref - x_ref).
    [[nodiscard]] double residual(double i, double x) const {
        double k = params.herd(), ref = params.herd();
        switch (kind) {
            case CurveKind::Green: break;
            case CurveKind::Yellow: k = ref = params.herd_confined(); break;
            case CurveKind::BGeneral: ref = sbar; break;
            case CurveKind::PsiTilde: k = params.herd_confined(); break;
        }
        return -x + k * std::log(x) - (i - params.istar + k * std::log(ref) - ref);
    }
};

// ---------------------------------------------------------------------------
// Classification

enum class ZoneLabel { Green, BandMinusGreen, YellowMinusBand, Infeasible, OutsideSimplex };

inline const char* to_string(ZoneLabel z) {
    switch (z) {
        case ZoneLabel::Green: return "green";
        case ZoneLabel::BandMinusGreen: return "band";
        case ZoneLabel::YellowMinusBand: return "yellow";
        case ZoneLabel::Infeasible: return "infeasible";
        case ZoneLabel::OutsideSimplex: return "outside";
    }
    return "?";
}

inline constexpr double kClassifyTie = 1e-12;

/// The three nested right edges at level i, with i = 0 mapped to the limits.
struct ZoneEdges {
    double green, band, yellow;
};

inline ZoneEdges zone_edges(const EpidemicParams& p, double i) {
    const double lvl = i > kZeroLevel ? i : kZeroLevel;
    return {phi(p, lvl), band_curve(p, lvl), psi(p, lvl)};
}

/// Zone of x; ties within 1e-12 go to the inner set.
inline ZoneLabel classify(const EpidemicParams& p, const State& x) {
    if (!(x.s >= 0.0 && x.i >= 0.0 && x.s + x.i <= 1.0 + kClassifyTie)) return ZoneLabel::OutsideSimplex;
    if (x.i > p.istar + kClassifyTie) return ZoneLabel::Infeasible;
    const double lvl = std::clamp(x.i, kZeroLevel, p.istar);
    if (x.s <= p.herd() || x.s <= phi(p, lvl) + kClassifyTie) return ZoneLabel::Green;
    if (x.s <= band_curve(p, lvl) + kClassifyTie) return ZoneLabel::BandMinusGreen;
    if (x.s <= psi(p, lvl) + kClassifyTie) return ZoneLabel::YellowMinusBand;
    return ZoneLabel::Infeasible;
}

inline bool in_yellow(const EpidemicParams& p, const State& x) {
    const ZoneLabel z = classify(p, x);
    return z != ZoneLabel::Infeasible && z != ZoneLabel::OutsideSimplex;
}

inline bool in_band(const EpidemicParams& p, const State& x) {
    const ZoneLabel z = classify(p, x);
    return z == ZoneLabel::Green || z == ZoneLabel::BandMinusGreen;
}

/// Membership in B^sbar = {0 <= i <= i*, s <= phi^sbar(i)}.
inline bool in_band_sbar(const EpidemicParams& p, double sbar, const State& x, double tol = kClassifyTie) {
    if (x.s < 0.0 || x.i < 0.0 || x.i > p.istar + tol) return false;
    const double lvl = std::clamp(x.i, kZeroLevel, p.istar);
    return x.s <= phi_sbar(p, sbar, lvl) + tol;
}

inline constexpr double kBoundaryTolerance = 1e-9;

/// The segment M = [gamma/beta, gamma/(beta(1-abar))] x {i*}.
inline bool on_icu_segment(const EpidemicParams& p, const State& x, double tol = kBoundaryTolerance) {
    return std::fabs(x.i - p.istar) <= tol && x.s >= p.herd() - tol && x.s <= p.herd_confined() + tol;
}

/// D = Y minus the segment M.
inline bool in_backward_invariant_set(const EpidemicParams& p, const State& x) {
    return in_yellow(p, x) && !on_icu_segment(p, x, kClassifyTie);
}

/// Active boundary: the ICU segment plus the curve s = psi(i), 0 < i <= i*.
inline bool active_boundary_contains(const EpidemicParams& p, const State& x, double tol = kBoundaryTolerance) {
    if (on_icu_segment(p, x, tol)) return true;
    if (!(x.i > 0.0 && x.i <= p.istar + tol)) return false;
    return std::fabs(x.s - psi(p, std::min(x.i, p.istar))) <= tol;
}

/// Inner product of the outward normal of the active part of dB^sbar with the
/// fully confined velocity. Never positive.
inline double boundary_normal_product(const EpidemicParams& p, double sbar, const State& x,
                                      double tol = kBoundaryTolerance) {
    const double b = p.beta * (1.0 - p.abar);
    if (std::fabs(x.i - p.istar) <= tol) {
        if (std::fabs(x.s - sbar) <= tol) throw SingularCorner("boundary_normal_product: corner (sbar, i*)");
        if (x.s > 0.0 && x.s < sbar) return (b * x.s - p.gamma) * p.istar;
        throw DomainError("boundary_normal_product: point is not on the active boundary");
    }
    if (!(x.i > 0.0 && x.i < p.istar)) throw DomainError("boundary_normal_product: i outside (0, i*)");
    const double x_edge = phi_sbar(p, sbar, x.i);
    if (std::fabs(x.s - x_edge) > tol) throw DomainError("boundary_normal_product: point is not on dB^sbar");
    const double slope = p.beta * x_edge / (p.gamma - p.beta * x_edge);
    return p.abar * p.gamma * x.i * slope / std::sqrt(1.0 + slope * slope);
}

// ---------------------------------------------------------------------------
// Plot tables

/// Curves tabulated on a log-spaced i grid with monotone cubic (Fritsch-Carlson)
/// interpolation. For plotting only; verification paths call the root-finder.
class CurveTable {
public:
    CurveTable(ZoneCurve curve, std::size_t n = 2048) : curve_(std::move(curve)) {
        const double lo = std::log(kZeroLevel), hi = std::log(curve_.params.istar);
        x_.resize(n);
        y_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            x_[k] = k + 1 == n ? curve_.params.istar : std::exp(lo + (hi - lo) * double(k) / double(n - 1));
            y_[k] = curve_(x_[k]);
        }
        slopes();
    }

    [[nodiscard]] double operator()(double i) const {
        if (i <= x_.front()) return y_.front();
        if (i >= x_.back()) return y_.back();
        const auto it = std::upper_bound(x_.begin(), x_.end(), i);
        const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[k + 1] - x_[k];
        const double t = (i - x_[k]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * m_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
               (t3 - t2) * h * m_[k + 1];
    }

private:
    void slopes() {
        const std::size_t n = x_.size();
        std::vector<double> d(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) d[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
        m_.assign(n, 0.0);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t k = 1; k + 1 < n; ++k) m_[k] = (d[k - 1] * d[k] <= 0.0) ? 0.0 : 0.5 * (d[k - 1] + d[k]);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            if (d[k] == 0.0) {
                m_[k] = m_[k + 1] = 0.0;
                continue;
            }
            const double a = m_[k] / d[k], b = m_[k + 1] / d[k];
            const double r = a * a + b * b;
            if (r > 9.0) {
                const double tau = 3.0 / std::sqrt(r);
                m_[k] = tau * a * d[k];
                m_[k + 1] = tau * b * d[k];
            }
        }
    }

    ZoneCurve curve_;
    std::vector<double> x_, y_, m_;
};

}  // namespace sirctl
